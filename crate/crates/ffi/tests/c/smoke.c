#include <stdio.h>
#include <string.h>
#include "alesolve.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (line %d)\n", #cond, __LINE__); return 1; } } while (0)

int main(void) {
    AlesolveOperators *ops = NULL;
    CHECK(alesolve_operators_new(4, &ops) == ALESOLVE_STATUS_OK);
    size_t m = 0;
    CHECK(alesolve_operators_num_nodes(ops, &m) == ALESOLVE_STATUS_OK && m == 5);
    double x[5], w[5], r = 1.0;
    CHECK(alesolve_operators_nodes_weights(ops, x, w, 5) == ALESOLVE_STATUS_OK);
    CHECK(x[0] == -1.0 && x[4] == 1.0);
    CHECK(alesolve_operators_sbp_residual(ops, &r) == ALESOLVE_STATUS_OK && r < 1e-13);
    alesolve_operators_free(ops);

    CHECK(alesolve_operators_new(99, &ops) == ALESOLVE_STATUS_CONFIG);
    char msg[256];
    CHECK(alesolve_last_error_message(msg, sizeof msg) > 0 && strlen(msg) > 0);

    AlesolveSolver *s = NULL;
    const char *cfg = "{\"scenario\": \"freestream\", \"amplitude\": 0.05, \"dissipation\": \"roe\"}";
    CHECK(alesolve_solver_new(cfg, 2, 2, &s) == ALESOLVE_STATUS_OK);
    double dt = 0.0, t = 0.0;
    CHECK(alesolve_solver_stable_dt(s, 0.5, &dt) == ALESOLVE_STATUS_OK && dt > 0.0);
    CHECK(alesolve_solver_step(s, dt, 3) == ALESOLVE_STATUS_OK);
    CHECK(alesolve_solver_time(s, &t) == ALESOLVE_STATUS_OK && t > 0.0);
    alesolve_solver_free(s);
    printf("ok %s\n", alesolve_version());
    return 0;
}
