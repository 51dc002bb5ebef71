#include <math.h>
#include <stdio.h>

#include "relay_friction.h"

int main(void) {
    RfScenario *sc = NULL;
    RfTrajectory *tr = NULL;
    if (rf_scenario_from_preset("twisting-baseline", &sc) != RF_STATUS_OK) {
        fprintf(stderr, "preset: %s\n", rf_last_error_message());
        return 1;
    }
    if (rf_integrate(sc, &tr) != RF_STATUS_OK) {
        fprintf(stderr, "integrate: %s\n", rf_last_error_message());
        return 1;
    }
    enum RfTermination term;
    double t = NAN;
    size_t n = 0;
    rf_trajectory_termination(tr, &term);
    rf_trajectory_convergence_time(tr, &t);
    rf_trajectory_sample_count(tr, &n);
    printf("termination=%d time=%.6f samples=%zu\n", (int)term, t, n);

    RfStatus st = rf_integrate(NULL, &tr);
    printf("null=%d message=%s\n", (int)st, rf_last_error_message());

    rf_trajectory_free(tr);
    rf_scenario_free(sc);
    return term == RF_TERMINATION_CONVERGED && st == RF_STATUS_NULL_POINTER ? 0 : 2;
}
