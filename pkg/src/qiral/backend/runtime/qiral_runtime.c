#include "qiral_runtime.h"

#include <stdlib.h>
#include <string.h>

static long site_index(const int *d, int x, int y, int z, int t)
{
    return x + (long)d[0] * (y + (long)d[1] * (z + (long)d[2] * t));
}

int qr_geometry_init(qr_geometry *g, const int dims[4])
{
    memset(g, 0, sizeof *g);
    for (int k = 0; k < 4; k++) {
        if (dims[k] < 2 || dims[k] % 2)
            return -1;
        g->dims[k] = dims[k];
    }
    long v = (long)dims[0] * dims[1] * dims[2] * dims[3];
    g->volume = v;
    g->parity = malloc(v);
    for (int k = 0; k < 8; k++)
        g->nbr[k] = malloc(v * sizeof(long));
    for (int k = 0; k < 3; k++) {
        g->sites[k] = malloc(v * sizeof(long));
        g->local[k] = malloc(v * sizeof(long));
    }
    for (int t = 0; t < dims[3]; t++)
        for (int z = 0; z < dims[2]; z++)
            for (int y = 0; y < dims[1]; y++)
                for (int x = 0; x < dims[0]; x++) {
                    long s = site_index(dims, x, y, z, t);
                    int c[4] = {x, y, z, t};
                    int p = (x + y + z + t) % 2;
                    g->parity[s] = (unsigned char)p;
                    for (int a = 0; a < 4; a++) {
                        int up[4] = {x, y, z, t}, dn[4] = {x, y, z, t};
                        up[a] = (c[a] + 1) % dims[a];
                        dn[a] = (c[a] - 1 + dims[a]) % dims[a];
                        g->nbr[2 * a][s] = site_index(dims, up[0], up[1], up[2], up[3]);
                        g->nbr[2 * a + 1][s] = site_index(dims, dn[0], dn[1], dn[2], dn[3]);
                    }
                }
    for (long s = 0; s < v; s++) {
        int dom = g->parity[s] ? QR_ODD : QR_EVEN;
        g->local[QR_L][s] = g->count[QR_L];
        g->sites[QR_L][g->count[QR_L]++] = s;
        g->local[dom][s] = g->count[dom];
        g->local[dom == QR_EVEN ? QR_ODD : QR_EVEN][s] = -1;
        g->sites[dom][g->count[dom]++] = s;
    }
    return 0;
}

void qr_geometry_free(qr_geometry *g)
{
    free(g->parity);
    for (int k = 0; k < 8; k++)
        free(g->nbr[k]);
    for (int k = 0; k < 3; k++) {
        free(g->sites[k]);
        free(g->local[k]);
    }
}

static int read_doubles(FILE *f, long count, qr_complex **out)
{
    double *raw = malloc(2 * count * sizeof(double));
    if (fread(raw, sizeof(double), 2 * count, f) != (size_t)(2 * count)) {
        free(raw);
        return -1;
    }
    qr_complex *v = malloc(count * sizeof(qr_complex));
    for (long i = 0; i < count; i++)
        v[i] = raw[2 * i] + I * raw[2 * i + 1];
    free(raw);
    *out = v;
    return 0;
}

int qr_read_gauge(const char *path, int dims[4], qr_complex **links)
{
    FILE *f = fopen(path, "rb");
    if (!f)
        return -1;
    if (fscanf(f, "QGAUGE1 %d %d %d %d", &dims[0], &dims[1], &dims[2], &dims[3]) != 4
        || fgetc(f) != '\n') {
        fclose(f);
        return -1;
    }
    long v = (long)dims[0] * dims[1] * dims[2] * dims[3];
    int rc = read_doubles(f, v * 36, links);
    fclose(f);
    return rc;
}

int qr_read_vector(const char *path, long *n, qr_complex **data)
{
    FILE *f = fopen(path, "rb");
    if (!f)
        return -1;
    if (fscanf(f, "QVEC1 %ld", n) != 1 || fgetc(f) != '\n') {
        fclose(f);
        return -1;
    }
    int rc = read_doubles(f, *n, data);
    fclose(f);
    return rc;
}

int qr_write_vector(const char *path, long n, const qr_complex *data)
{
    FILE *f = fopen(path, "wb");
    if (!f)
        return -1;
    fprintf(f, "QVEC1 %ld\n", n);
    for (long i = 0; i < n; i++) {
        double pair[2] = {creal(data[i]), cimag(data[i])};
        fwrite(pair, sizeof(double), 2, f);
    }
    return fclose(f);
}

qr_complex *qr_alloc_field(long sites)
{
    return calloc(sites * 12, sizeof(qr_complex));
}

void qr_zero12(qr_complex *v)
{
    for (int e = 0; e < 12; e++)
        v[e] = 0;
}

void qr_copy12(qr_complex *dst, const qr_complex *src)
{
    for (int e = 0; e < 12; e++)
        dst[e] = src[e];
}

void qr_spin_mul(qr_complex *out, const qr_complex *sp, const qr_complex *in)
{
    for (int c = 0; c < 3; c++)
        for (int a = 0; a < 4; a++) {
            qr_complex t = 0;
            for (int b = 0; b < 4; b++)
                t += sp[a * 4 + b] * in[c * 4 + b];
            out[c * 4 + a] = t;
        }
}

void qr_link_acc(qr_complex *acc, const qr_complex *u, int dagger, const qr_complex *in)
{
    for (int c = 0; c < 3; c++)
        for (int a = 0; a < 4; a++) {
            qr_complex t = 0;
            for (int c2 = 0; c2 < 3; c2++)
                t += (dagger ? conj(u[c2 * 3 + c]) : u[c * 3 + c2]) * in[c2 * 4 + a];
            acc[c * 4 + a] += t;
        }
}

void qr_acc12(qr_complex *acc, const qr_complex *in)
{
    for (int e = 0; e < 12; e++)
        acc[e] += in[e];
}

void qr_spin_clear(qr_complex *sp)
{
    for (int e = 0; e < 16; e++)
        sp[e] = 0;
}

void qr_spin_axpy(qr_complex *sp, qr_complex c, const qr_complex *m)
{
    for (int e = 0; e < 16; e++)
        sp[e] += c * m[e];
}

qr_complex qr_dot12(const qr_complex *a, const qr_complex *b)
{
    qr_complex t = 0;
    for (int e = 0; e < 12; e++)
        t += conj(a[e]) * b[e];
    return t;
}

qr_complex qr_ordered_sum(const qr_complex *part, long n)
{
    qr_complex t = 0;
    for (long i = 0; i < n; i++)
        t += part[i];
    return t;
}

void qr_zgemm_blocks(const qr_complex *a, const qr_complex *b, qr_complex *c, long n)
{
    for (long i = 0; i < n; i++) {
        qr_complex tmp[12];
        for (int r = 0; r < 12; r++) {
            qr_complex t = 0;
            for (int k = 0; k < 12; k++)
                t += a[r * 12 + k] * b[12 * i + k];
            tmp[r] = t;
        }
        for (int r = 0; r < 12; r++)
            c[12 * i + r] = tmp[r];
    }
}

void qr_zaxpby_field(qr_complex a, const qr_complex *x, qr_complex b, const qr_complex *y,
                     qr_complex *z, long n)
{
    for (long e = 0; e < 12 * n; e++)
        z[e] = a * x[e] + b * y[e];
}

void qr_spin_block(qr_complex *blk, const qr_complex *sp)
{
    for (int e = 0; e < 144; e++)
        blk[e] = 0;
    for (int c = 0; c < 3; c++)
        for (int a = 0; a < 4; a++)
            for (int b = 0; b < 4; b++)
                blk[(c * 4 + a) * 12 + c * 4 + b] = sp[a * 4 + b];
}
