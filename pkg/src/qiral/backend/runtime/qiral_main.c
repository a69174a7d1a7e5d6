/* Program skeleton: load inputs, call the generated qiral_solve, store x and
 * the convergence trace.
 *
 *   solver GAUGE OUT_X KAPPA MU EPSILON MAX_ITER REPORT|- INPUT...
 */
#include <stdio.h>
#include <stdlib.h>

#include "qiral_runtime.h"

extern const int qiral_num_inputs;
extern const int qiral_result_domain;
extern const int qiral_input_domains[];
extern const int qiral_outer_loops;
int qiral_solve(const qr_geometry *geo, const qr_complex *links, const qr_complex *const *in,
                qr_complex *result, qr_params p, double *trace, long *iterations);

int main(int argc, char **argv)
{
    if (argc != 8 + qiral_num_inputs) {
        fprintf(stderr, "usage: %s GAUGE OUT_X KAPPA MU EPSILON MAX_ITER REPORT INPUT...\n",
                argv[0]);
        return 3;
    }
    int dims[4];
    qr_complex *links;
    if (qr_read_gauge(argv[1], dims, &links)) {
        fprintf(stderr, "cannot read gauge file %s\n", argv[1]);
        return 3;
    }
    qr_geometry geo;
    if (qr_geometry_init(&geo, dims)) {
        fprintf(stderr, "lattice extents must be even\n");
        return 3;
    }
    qr_params p = {atof(argv[3]), atof(argv[4]), atof(argv[5]), atol(argv[6])};
    const qr_complex **in = malloc((qiral_num_inputs + 1) * sizeof *in);
    for (int k = 0; k < qiral_num_inputs; k++) {
        long n;
        qr_complex *v;
        if (qr_read_vector(argv[8 + k], &n, &v)
            || n != 12 * geo.count[qiral_input_domains[k]]) {
            fprintf(stderr, "bad input vector %s\n", argv[8 + k]);
            return 3;
        }
        in[k] = v;
    }
    long nx = 12 * geo.count[qiral_result_domain];
    qr_complex *x = calloc(nx, sizeof(qr_complex));
    double *trace = calloc((size_t)p.max_iter * qiral_outer_loops + 1, sizeof(double));
    long iters = 0;
    int rc = qiral_solve(&geo, links, in, x, p, trace, &iters);
    if (qr_write_vector(argv[2], nx, x)) {
        fprintf(stderr, "cannot write %s\n", argv[2]);
        return 3;
    }
    FILE *rep = argv[7][0] == '-' && argv[7][1] == 0 ? stdout : fopen(argv[7], "w");
    if (!rep) {
        fprintf(stderr, "cannot write %s\n", argv[7]);
        return 3;
    }
    fprintf(rep, "iteration,residual\n");
    for (long k = 0; k < iters; k++)
        fprintf(rep, "%ld,%.17g\n", k + 1, trace[k]);
    if (rep != stdout)
        fclose(rep);
    qr_geometry_free(&geo);
    return rc;
}
