# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: red-black SOR half-sweeps and the Poisson-kernel
quadrature accumulation. Must match hmlab._kernels_py semantically."""

import numpy as np

cimport numpy as cnp

BACKEND_NAME = "compiled"


def sor_sweep(cnp.complex128_t[::1] u, cnp.complex128_t[::1] rhs,
              cnp.int64_t[::1] idx, cnp.int64_t[:, ::1] nbr,
              double omega, double h2):
    cdef Py_ssize_t k, p
    cdef double complex s
    for k in range(idx.shape[0]):
        p = idx[k]
        s = u[nbr[k, 0]] + u[nbr[k, 1]] + u[nbr[k, 2]] + u[nbr[k, 3]]
        s = 0.25 * (s - h2 * rhs[p])
        u[p] = u[p] + omega * (s - u[p])


def poisson_disk(double[::1] px, double[::1] py,
                 double[::1] cosa, double[::1] sina,
                 cnp.complex128_t[::1] g, double prefactor,
                 cnp.complex128_t[::1] out):
    cdef Py_ssize_t p, m
    cdef Py_ssize_t n = px.shape[0], mm = cosa.shape[0]
    cdef double sr, si, dx, dy, ker, w, gre, gim
    for p in range(n):
        sr = 0.0
        si = 0.0
        for m in range(mm):
            dx = cosa[m] - px[p]
            dy = sina[m] - py[p]
            ker = 1.0 / (dx * dx + dy * dy)
            gre = g[m].real
            gim = g[m].imag
            sr += ker * gre
            si += ker * gim
        w = prefactor * (1.0 - px[p] * px[p] - py[p] * py[p])
        out[p] = w * (sr + 1j * si)
