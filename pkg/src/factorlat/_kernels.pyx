# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled matrix-free Hamiltonian action.

Pull formulation: ``out[b]`` only reads ``v`` at ``b`` and at ``b`` with one
bond pair or one site flipped, so the loop over ``b`` is data parallel and
its result does not depend on the thread count.
"""

from cython.parallel cimport prange

ctypedef long long i64


def apply_real(const double[::1] v, double[::1] out, const double[::1] diag,
               const i64[::1] bond_i, const i64[::1] bond_j,
               const double[::1] c_par, const double[::1] c_anti,
               const double[::1] f_site, int n_threads=1):
    cdef Py_ssize_t dim = v.shape[0]
    cdef Py_ssize_t nb = bond_i.shape[0]
    cdef Py_ssize_t ns = f_site.shape[0]
    cdef Py_ssize_t b, k
    cdef i64 bi, bj, m
    cdef double acc
    for b in prange(dim, nogil=True, schedule="static", num_threads=n_threads):
        acc = diag[b] * v[b]
        for k in range(nb):
            bi = (b >> bond_i[k]) & 1
            bj = (b >> bond_j[k]) & 1
            m = (<i64>1 << bond_i[k]) | (<i64>1 << bond_j[k])
            if bi == bj:
                acc = acc + c_par[k] * v[b ^ m]
            else:
                acc = acc + c_anti[k] * v[b ^ m]
        for k in range(ns):
            if f_site[k] != 0.0:
                acc = acc + f_site[k] * v[b ^ (<i64>1 << k)]
        out[b] = acc


def apply_complex(const double complex[::1] v, double complex[::1] out,
                  const double[::1] diag,
                  const i64[::1] bond_i, const i64[::1] bond_j,
                  const double[::1] c_par, const double[::1] c_anti,
                  const double complex[::1] f_up, const double complex[::1] f_down,
                  int n_threads=1):
    cdef Py_ssize_t dim = v.shape[0]
    cdef Py_ssize_t nb = bond_i.shape[0]
    cdef Py_ssize_t ns = f_up.shape[0]
    cdef Py_ssize_t b, k
    cdef i64 bi, bj, m
    cdef double complex acc
    for b in prange(dim, nogil=True, schedule="static", num_threads=n_threads):
        acc = diag[b] * v[b]
        for k in range(nb):
            bi = (b >> bond_i[k]) & 1
            bj = (b >> bond_j[k]) & 1
            m = (<i64>1 << bond_i[k]) | (<i64>1 << bond_j[k])
            if bi == bj:
                acc = acc + c_par[k] * v[b ^ m]
            else:
                acc = acc + c_anti[k] * v[b ^ m]
        for k in range(ns):
            # bit 0 is spin up
            if (b >> k) & 1:
                acc = acc + f_down[k] * v[b ^ (<i64>1 << k)]
            else:
                acc = acc + f_up[k] * v[b ^ (<i64>1 << k)]
        out[b] = acc


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline i64 _popcount(i64 x) nogil:
    return __builtin_popcountll(<unsigned long long>x)


def apply_sector_real(const double[::1] x, double[::1] out, const double[::1] diag,
                      const i64[::1] bond_i, const i64[::1] bond_j,
                      const double[::1] c_par, const double[::1] c_anti,
                      int odd, int n_threads=1):
    """Action inside a spin-flip parity sector.

    Sector index ``r`` holds basis state ``b = (r << 1) | bit0`` where bit 0
    makes the popcount of ``b`` even (``odd=0``) or odd (``odd=1``); every
    parity-conserving neighbour ``b'`` therefore sits at ``b' >> 1``.
    """
    cdef Py_ssize_t dim = x.shape[0]
    cdef Py_ssize_t nb = bond_i.shape[0]
    cdef Py_ssize_t r, k
    cdef i64 b, bi, bj, m
    cdef double acc
    for r in prange(dim, nogil=True, schedule="static", num_threads=n_threads):
        b = (r << 1) | ((_popcount(r) & 1) ^ odd)
        acc = diag[b] * x[r]
        for k in range(nb):
            bi = (b >> bond_i[k]) & 1
            bj = (b >> bond_j[k]) & 1
            m = (<i64>1 << bond_i[k]) | (<i64>1 << bond_j[k])
            if bi == bj:
                acc = acc + c_par[k] * x[(b ^ m) >> 1]
            else:
                acc = acc + c_anti[k] * x[(b ^ m) >> 1]
        out[r] = acc
