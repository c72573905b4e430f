/* Plans for the domain file given as argv[1] through the C API. */
#include <stdio.h>
#include <stdlib.h>

#include "hpx.h"

static char *slurp(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    rewind(f);
    char *buf = malloc((size_t)n + 1);
    if (buf && fread(buf, 1, (size_t)n, f) == (size_t)n) {
        buf[n] = '\0';
    } else {
        free(buf);
        buf = NULL;
    }
    fclose(f);
    return buf;
}

int main(int argc, char **argv) {
    if (argc != 2) return 10;
    char *src = slurp(argv[1]);
    if (!src) return 11;

    HpxDomain *d = NULL;
    if (hpx_domain_parse(src, &d) != HPX_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", hpx_last_error_message());
        return 1;
    }
    free(src);
    if (hpx_domain_validate(d) != HPX_STATUS_OK) return 2;

    HpxPlan *p = NULL;
    if (hpx_find_plan(d, 4, 1, HPX_FLAG_OPTIMAL, 1, &p) != HPX_STATUS_OK) return 3;
    char *text = NULL;
    if (hpx_plan_render(p, HPX_PLAN_FORMAT_COMPACT, &text) != HPX_STATUS_OK) return 4;
    printf("%s\n%zu\n", text, hpx_plan_occurrences(p));
    hpx_string_free(text);
    hpx_plan_free(p);

    HpxDomain *bad = NULL;
    if (hpx_domain_parse("(:action", &bad) != HPX_STATUS_PARSE_ERROR || bad != NULL) return 5;
    printf("%s\n", hpx_last_error_message());

    hpx_domain_free(d);
    return 0;
}
