#include <stdio.h>

#include "tangent_monad.h"

int main(void) {
    TmAlgebra *h = NULL;
    if (tm_algebra_example("rotation", &h) != TM_STATUS_OK) {
        fprintf(stderr, "%s\n", tm_last_error());
        return 2;
    }
    double x[2] = {1.0, 0.0}, v[2] = {1.0, 0.0}, y[2];
    tm_algebra_apply(h, x, v, 2, y);
    printf("h((1,0),(1,0)) = (%.12f, %.12f)\n", y[0], y[1]);

    char *json = NULL;
    TmStatus s = tm_algebra_check(h, 50, 42, &json);
    printf("check: %s\n", s == TM_STATUS_OK ? "pass" : "fail");
    tm_string_free(json);
    tm_algebra_free(h);
    return s == TM_STATUS_OK ? 0 : 1;
}
