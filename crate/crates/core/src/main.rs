use relay_friction::cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(cli::LOG_ENV, "warn")).init();
    std::process::exit(cli::main_with_args(std::env::args_os()));
}
