#include <stdio.h>
#include "actstate.h"

int main(void) {
    ActRegion *region = NULL;
    if (act_binary_example_region(0.1, 0.1, 51, &region) != ACT_STATUS_OK) {
        fprintf(stderr, "%s\n", act_last_error());
        return 1;
    }
    size_t n = 0;
    act_region_hull_len(region, &n);
    double r1 = 0.0, r2 = 0.0;
    act_region_hull_point(region, n - 1, &r1, &r2);
    printf("%zu %.12f %.12f\n", n, r1, r2);
    act_region_free(region);
    return 0;
}
