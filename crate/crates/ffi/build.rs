use std::env;
use std::fs;
use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("manifest dir"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("cbindgen.toml");
    let bindings = cbindgen::generate_with_config(&dir, config).expect("header generation");
    let mut header = Vec::new();
    bindings.write(&mut header);
    let path = dir.join("include").join("relay_friction.h");
    // Only touch the file when it changes, so the header does not trigger rebuilds.
    if fs::read(&path).ok().as_deref() != Some(header.as_slice()) {
        fs::create_dir_all(path.parent().unwrap()).expect("include dir");
        fs::write(&path, header).expect("write header");
    }
}
