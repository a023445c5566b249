#include <math.h>
#include <stdio.h>
#include <string.h>

#include "snspd_sim.h"

#define CHECK(expr)                                                          \
    do {                                                                     \
        if (!(expr)) {                                                       \
            const char *msg = snspd_last_error();                            \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #expr,           \
                    msg ? msg : "no message");                               \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(void) {
    SnspdParams *p = NULL;
    CHECK(snspd_params_preset("paper-1K", &p) == SNSPD_STATUS_OK);

    SnspdOperatingPoint op;
    CHECK(snspd_operating_point(p, 6.9e-6, 1e6, &op) == SNSPD_STATUS_OK);
    CHECK(op.voltage > 0.0 && op.current > 0.0);

    CHECK(snspd_params_set(p, "bias.period_us = -1") == SNSPD_STATUS_INVALID_INPUT);
    CHECK(strstr(snspd_last_error(), "bias.period_us") != NULL);

    SnspdEquilibrium eq;
    CHECK(snspd_equilibrium(p, 1e-12, &eq) == SNSPD_STATUS_NO_RESULT);

    double x[121], y[121];
    for (int i = 0; i < 121; ++i) {
        x[i] = 0.125 * i;
        y[i] = 0.5 + 0.5 * cos(3.141592653589793 * x[i] / 6.6);
    }
    SnspdSineFit fit;
    CHECK(snspd_fit_sine_vpi(x, y, 121, 0.0, &fit) == SNSPD_STATUS_OK);
    CHECK(fabs(fit.vpi - 6.6) < 1e-6);

    snspd_params_free(p);
    printf("ok %s\n", snspd_version());
    return 0;
}
