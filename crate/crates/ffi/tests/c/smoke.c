#include <stdio.h>
#include <stdlib.h>
#include "corrkit.h"

static char *slurp(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    rewind(f);
    char *buf = malloc(n + 1);
    if (fread(buf, 1, n, f) != (size_t)n) { fclose(f); free(buf); return NULL; }
    buf[n] = '\0';
    fclose(f);
    return buf;
}

int main(int argc, char **argv) {
    if (argc < 2) return 2;
    char *json = slurp(argv[1]);
    if (!json) return 2;

    CkCorrespondence *t = NULL;
    if (ck_correspondence_from_json(json, &t) != CK_STATUS_OK) {
        fprintf(stderr, "load: %s\n", ck_last_error());
        return 1;
    }
    free(json);
    bool found = false;
    double loc[1];
    if (ck_check_usc(t, 401, &found, loc, 1) != CK_STATUS_OK) {
        fprintf(stderr, "usc: %s\n", ck_last_error());
        return 1;
    }
    if (found) printf("usc violation at %g\n", loc[0]);
    ck_correspondence_free(t);

    const double verts[] = {0.0, 0.0, 2.0, 0.0, 0.0, 4.0};
    const double x[] = {0.5, 1.0};
    double w[3];
    CkSimplex *s = NULL;
    if (ck_simplex_new(verts, 3, 2, &s) != CK_STATUS_OK || ck_simplex_barycentric(s, x, 2, w, 3) != CK_STATUS_OK) {
        fprintf(stderr, "simplex: %s\n", ck_last_error());
        return 1;
    }
    printf("weights %g %g %g\n", w[0], w[1], w[2]);
    ck_simplex_free(s);
    printf("version %s\n", ck_version());
    return 0;
}
