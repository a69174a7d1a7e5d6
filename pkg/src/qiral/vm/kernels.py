"""Site kernels used by the VM.

Two implementations share one calling convention: numba-compiled loops and a
vectorised numpy fallback.  Setting QIRAL_NO_NUMBA=1 before import selects
numpy.  Every kernel works on the half-open output range [start, stop);
`*_shift` arguments translate global positions into chunk-local scratch rows.
"""

from __future__ import annotations

import os

import numpy as np

NO_NUMBA = os.environ.get("QIRAL_NO_NUMBA", "") not in ("", "0")

try:
    if NO_NUMBA:
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover - exercised with QIRAL_NO_NUMBA=1
    njit = None


# ---------------------------------------------------------------------------
# numpy
# ---------------------------------------------------------------------------


def np_hop(out, out_shift, src, src_shift, idx, lsite, laxis, ldag, spin, links, start, stop):
    n = stop - start
    acc = np.zeros((n, 12), dtype=np.complex128)
    for h in range(idx.shape[0]):
        j = idx[h, start:stop]
        ok = j >= 0
        v = src[j[ok] - src_shift].reshape(-1, 3, 4)
        w = v @ spin[h].T
        if laxis[h] >= 0:
            u = links[lsite[h, start:stop][ok], laxis[h]]
            if ldag[h]:
                u = np.conj(np.swapaxes(u, 1, 2))
            w = u @ w
        acc[ok] += w.reshape(-1, 12)
    out[start - out_shift:stop - out_shift] = acc


def np_lincomb(out, out_shift, coefs, ins, shifts, start, stop):
    acc = np.zeros((stop - start, 12), dtype=np.complex128)
    for k in range(len(ins)):
        acc += coefs[k] * ins[k][start - shifts[k]:stop - shifts[k]]
    out[start - out_shift:stop - out_shift] = acc


def np_site_dot(a, a_shift, b, b_shift, partial, start, stop):
    partial[start:stop] = np.sum(
        np.conj(a[start - a_shift:stop - a_shift]) * b[start - b_shift:stop - b_shift], axis=1)


def np_ordered_sum(partial):
    total = 0j
    for v in partial.tolist():
        total += v
    return total


# ---------------------------------------------------------------------------
# numba
# ---------------------------------------------------------------------------

if njit is not None:

    @njit(nogil=True, cache=False)
    def nb_hop(out, out_shift, src, src_shift, idx, lsite, laxis, ldag, spin, links,
               start, stop):
        tmp = np.empty(12, dtype=np.complex128)
        acc = np.empty(12, dtype=np.complex128)
        for i in range(start, stop):
            acc[:] = 0
            for h in range(idx.shape[0]):
                j = idx[h, i]
                if j < 0:
                    continue
                j -= src_shift
                for c in range(3):
                    for a in range(4):
                        t = 0j
                        for b in range(4):
                            t += spin[h, a, b] * src[j, c * 4 + b]
                        tmp[c * 4 + a] = t
                ax = laxis[h]
                if ax < 0:
                    for k in range(12):
                        acc[k] += tmp[k]
                    continue
                u = links[lsite[h, i], ax]
                dag = ldag[h]
                for c in range(3):
                    for a in range(4):
                        t = 0j
                        for c2 in range(3):
                            if dag:
                                t += np.conj(u[c2, c]) * tmp[c2 * 4 + a]
                            else:
                                t += u[c, c2] * tmp[c2 * 4 + a]
                        acc[c * 4 + a] += t
            for k in range(12):
                out[i - out_shift, k] = acc[k]

    @njit(nogil=True, cache=False)
    def nb_lincomb(out, out_shift, coefs, ins, shifts, start, stop):
        acc = np.empty(12, dtype=np.complex128)
        for i in range(start, stop):
            acc[:] = 0
            for k in range(len(ins)):
                src = ins[k]
                c = coefs[k]
                r = i - shifts[k]
                for e in range(12):
                    acc[e] += c * src[r, e]
            for e in range(12):
                out[i - out_shift, e] = acc[e]

    @njit(nogil=True, cache=False)
    def nb_site_dot(a, a_shift, b, b_shift, partial, start, stop):
        for i in range(start, stop):
            t = 0j
            for e in range(12):
                t += np.conj(a[i - a_shift, e]) * b[i - b_shift, e]
            partial[i] = t

    @njit(nogil=True, cache=False)
    def nb_ordered_sum(partial):
        total = 0j
        for i in range(partial.shape[0]):
            total += partial[i]
        return total


class Kernels:
    """The active kernel set; `name` is "numba" or "numpy"."""

    def __init__(self, name: str | None = None):
        if name is None:
            name = "numpy" if njit is None else "numba"
        if name == "numba" and njit is None:
            raise RuntimeError("numba kernels requested but numba is disabled or missing")
        self.name = name
        if name == "numba":
            self.hop, self.site_dot, self.ordered_sum = nb_hop, nb_site_dot, nb_ordered_sum
            self._lincomb = nb_lincomb
        else:
            self.hop, self.site_dot, self.ordered_sum = np_hop, np_site_dot, np_ordered_sum
            self._lincomb = np_lincomb

    def lincomb(self, out, out_shift, coefs, ins, shifts, start, stop):
        if not ins:
            out[start - out_shift:stop - out_shift] = 0
            return
        coefs = np.asarray(coefs, dtype=np.complex128)
        shifts = np.asarray(shifts, dtype=np.int64)
        if self.name == "numba":
            ins = tuple(ins)
        self._lincomb(out, out_shift, coefs, ins, shifts, start, stop)


def default_kernels() -> Kernels:
    return Kernels()
