#include <stdio.h>
#include <string.h>

#include "slb.h"

#define CHECK(expr)                                                   \
    do {                                                              \
        if (!(expr)) {                                                \
            fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__,    \
                    __LINE__, #expr);                                 \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    double b = 0.0;
    CHECK(slb_expected_workers(1, 3, 10, &b) == SLB_STATUS_OK);
    CHECK(b > 2.7099 && b < 2.7101);

    SlbPartitioner *p = NULL;
    CHECK(slb_partitioner_new(SLB_SCHEME_WC, 4, 0, 1, 0.0, 0.0, 1, &p) == SLB_STATUS_OK);
    SlbRoutingDecision d;
    for (int i = 0; i < 400; i++) {
        CHECK(slb_partitioner_route(p, 7, &d) == SLB_STATUS_OK);
    }
    uint64_t counts[4];
    uint64_t total = 0;
    CHECK(slb_partitioner_load(p, counts, 4, &total) == SLB_STATUS_OK);
    CHECK(total == 400);
    for (int i = 0; i < 4; i++) {
        CHECK(counts[i] == 100);
    }
    slb_partitioner_free(p);

    CHECK(slb_partitioner_new(99, 4, 0, 1, 0.0, 0.0, 1, &p) == SLB_STATUS_INVALID_ARGUMENT);
    char msg[128];
    CHECK(slb_last_error_message(msg, sizeof msg) > 0);
    CHECK(strstr(msg, "scheme") != NULL);

    SlbSimConfig cfg;
    CHECK(slb_sim_config_default(&cfg) == SLB_STATUS_OK);
    cfg.scheme = SLB_SCHEME_SG;
    cfg.messages = 10000;
    SlbRunSummary s;
    CHECK(slb_simulate(&cfg, &s) == SLB_STATUS_OK);
    CHECK(s.messages == 10000);
    CHECK(s.final_imbalance <= 1.0 / 10000);

    printf("ok %s\n", slb_version());
    return 0;
}
