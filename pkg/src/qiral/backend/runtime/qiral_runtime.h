/* Mini runtime for generated QIRAL solvers: lattice geometry, file I/O and
 * the per-site spinor kernels called from generated code. */
#ifndef QIRAL_RUNTIME_H
#define QIRAL_RUNTIME_H

#include <complex.h>
#include <stdio.h>

#define QR_L 0
#define QR_EVEN 1
#define QR_ODD 2

typedef double complex qr_complex;

typedef struct {
    int dims[4];
    long volume;
    long count[3];
    long *sites[3];   /* domain position -> global site */
    long *local[3];   /* global site -> domain position, -1 if absent */
    long *nbr[8];     /* nbr[2*axis + (sign < 0)][s] = s +/- axis */
    unsigned char *parity;
} qr_geometry;

typedef struct {
    double kappa, mu, epsilon;
    long max_iter;
} qr_params;

int qr_geometry_init(qr_geometry *g, const int dims[4]);
void qr_geometry_free(qr_geometry *g);

/* QGAUGE1 / QVEC1 files; return 0 on success */
int qr_read_gauge(const char *path, int dims[4], qr_complex **links);
int qr_read_vector(const char *path, long *n, qr_complex **data);
int qr_write_vector(const char *path, long n, const qr_complex *data);

qr_complex *qr_alloc_field(long sites);

/* spinor helpers, 12 = 3 colours x 4 spins, spin index fastest */
void qr_zero12(qr_complex *v);
void qr_copy12(qr_complex *dst, const qr_complex *src);
void qr_spin_mul(qr_complex *out, const qr_complex *sp, const qr_complex *in);
void qr_link_acc(qr_complex *acc, const qr_complex *u, int dagger, const qr_complex *in);
void qr_acc12(qr_complex *acc, const qr_complex *in);
void qr_spin_axpy(qr_complex *sp, qr_complex c, const qr_complex *m);
void qr_spin_clear(qr_complex *sp);
qr_complex qr_dot12(const qr_complex *a, const qr_complex *b);
qr_complex qr_ordered_sum(const qr_complex *part, long n);

/* block multiply over a whole field: C[i] = A * B[i] with A a 12x12 block */
void qr_zgemm_blocks(const qr_complex *a, const qr_complex *b, qr_complex *c, long n);
/* z[i] = a x[i] + b y[i] over n sites */
void qr_zaxpby_field(qr_complex a, const qr_complex *x, qr_complex b, const qr_complex *y,
                     qr_complex *z, long n);
/* expand a 4x4 spin matrix to the 12x12 colour-diagonal site block */
void qr_spin_block(qr_complex *blk, const qr_complex *sp);

#endif
