/* SPDX-License-Identifier: Apache-2.0 */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "guider.h"

#define CHECK(cond)                                             \
    do {                                                        \
        if (!(cond)) {                                          \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                           \
        }                                                       \
    } while (0)

int main(void) {
    enum { N = 40 };
    static uint8_t cells[N * N];
    memset(cells, GUIDER_CELL_FREE, sizeof cells);
    GuiderNav *nav = NULL;
    CHECK(guider_nav_new(N, N, 0.05, 0.0, 0.0, cells, NULL, &nav) == GUIDER_STATUS_OK);
    bool accepted = false;
    CHECK(guider_nav_observe(nav, 0.0, 0.5, 1.0, 0.5, 0.0, &accepted) == GUIDER_STATUS_OK);
    CHECK(accepted);
    static double combined[N * N];
    CHECK(guider_nav_layer(nav, GUIDER_NAV_LAYER_COMBINED, combined, N * N) == GUIDER_STATUS_OK);
    GuiderPrediction pred;
    CHECK(guider_nav_predict(nav, &pred) == GUIDER_STATUS_OK);
    CHECK(pred.value == combined[pred.y * N + pred.x]);
    guider_nav_free(nav);

    double x[5] = {10, 11, 12, 13, 14}, y[5] = {5, 6, 7, 8, 9};
    GuiderWilcoxon w;
    CHECK(guider_wilcoxon(x, y, 5, GUIDER_ALTERNATIVE_GREATER, &w) == GUIDER_STATUS_OK);
    CHECK(w.p_one == 1.0 / 32.0 && w.r_bs == 1.0);

    const char *bad = "eef.p_cap = 0.995";
    GuiderEef *eef = NULL;
    double c[3] = {0.0, 0.0, 0.0}, g[1] = {0.5};
    CHECK(guider_eef_new(c, g, 1, bad, &eef) == GUIDER_STATUS_CONFIG);
    CHECK(eef == NULL);
    char msg[128];
    size_t len = guider_last_error(msg, sizeof msg);
    CHECK(len > 0 && strstr(msg, "p_cap") != NULL);

    CHECK(guider_metrics(NULL, NULL, 3, 0, 1.0, 0.5, NULL) == GUIDER_STATUS_NULL_POINTER);
    puts("ok");
    return 0;
}
