#include <stdio.h>
#include <string.h>
#include "ria.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    RiaTheory *t = NULL;
    CHECK(ria_theory_new(5, &t) == RIA_STATUS_OK);
    RiaRatio r;
    CHECK(ria_theory_sum_dof(t, &r) == RIA_STATUS_OK);
    CHECK(r.num == 120 && r.den == 67);
    ria_theory_free(t);

    CHECK(ria_theory_new(0, &t) == RIA_STATUS_INVALID_ARGUMENT);
    CHECK(ria_last_error() != NULL);

    RiaPlan *p = NULL;
    uint64_t symbols = 0, slots = 0;
    CHECK(ria_plan_new(3, 3, &p) == RIA_STATUS_OK);
    CHECK(ria_plan_totals(p, &symbols, &slots) == RIA_STATUS_OK);
    CHECK(symbols == 18 && slots == 12);
    char *json = NULL;
    CHECK(ria_plan_to_json(p, &json) == RIA_STATUS_OK);
    CHECK(strstr(json, "total_symbols") != NULL);
    ria_string_free(json);
    ria_plan_free(p);

    RiaCampaign *c = NULL;
    uint64_t trials = 0, passed = 0;
    CHECK(ria_simulate(3, 3, 3, 2, 5, 1e-6, &c) == RIA_STATUS_OK);
    CHECK(ria_campaign_passed(c, &trials, &passed) == RIA_STATUS_OK);
    CHECK(trials == 2 && passed == 2);
    ria_campaign_free(c);

    printf("ok %s\n", ria_version());
    return 0;
}
