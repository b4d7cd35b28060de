#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include "gipsa.h"

static void check(GipsaStatus s, const char *what) {
    if (s != GIPSA_STATUS_OK) {
        char msg[256];
        gipsa_last_error(msg, sizeof msg);
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg);
        exit(1);
    }
}

int main(void) {
    printf("version %s\n", gipsa_version());

    GipsaInstance *inst = NULL;
    check(gipsa_instance_generate(60, 30, 0.1, 8, 0.04, 4, &inst), "generate");

    size_t m = 0, n = 0;
    check(gipsa_instance_dims(inst, &m, &n), "dims");
    double l = 0.0;
    check(gipsa_instance_lipschitz(inst, &l), "lipschitz");
    printf("instance %zux%zu, L = %.6f\n", m, n, l);

    double *x = calloc(n, sizeof *x);
    GipsaSolveStats stats;
    check(gipsa_solve(inst, "fista-cd", 1e-10, 50000, NULL, x, &stats), "solve");
    printf("fista-cd: %zu steps, objective %.12f, residual %.3e, cause %d\n",
           stats.iterations, stats.objective, stats.fixed_point_residual,
           (int)stats.stopped_on);

    double f_star = 0.0;
    check(gipsa_reference_solve(inst, NULL, &f_star, NULL), "reference");
    if (!(stats.objective - f_star < 1e-9 && f_star - stats.objective < 1e-9)) {
        fprintf(stderr, "objective %.15f != reference %.15f\n", stats.objective, f_star);
        return 1;
    }

    bool valid = false;
    double margin = 0.0;
    check(gipsa_validate_schedule("ifbs:0.5@2.6", 1.0, 0, &valid, &margin), "validate");
    printf("ifbs:0.5@2.6: valid=%d margin=%.2f\n", (int)valid, margin);
    if (valid || margin > -0.29) return 1;

    GipsaStatus s = gipsa_solve(inst, "warp-drive", 1e-8, 10, NULL, NULL, NULL);
    if (s != GIPSA_STATUS_INVALID_ARGUMENT) return 1;
    char msg[128];
    size_t need = gipsa_last_error(msg, sizeof msg);
    printf("expected error (%zu bytes): %s\n", need, msg);

    free(x);
    gipsa_instance_free(inst);
    puts("C smoke test passed");
    return 0;
}
