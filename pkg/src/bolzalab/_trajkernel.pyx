# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trajectory kernel: geodesic flow with on-the-fly octagon reduction."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cosh, sinh, sqrt, atan2, fmod, M_PI

cnp.import_array()


def geodesic_trajectories(alpha, beta, double dt, Py_ssize_t nsteps,
                          gen_alpha, gen_beta, double inradius, int renorm_every):
    cdef double complex[::1] a0 = np.ascontiguousarray(alpha, dtype=np.complex128)
    cdef double complex[::1] b0 = np.ascontiguousarray(beta, dtype=np.complex128)
    cdef double complex[::1] ga = np.ascontiguousarray(gen_alpha, dtype=np.complex128)
    cdef double complex[::1] gb = np.ascontiguousarray(gen_beta, dtype=np.complex128)
    cdef Py_ssize_t n = a0.shape[0]
    cdef Py_ssize_t ng = ga.shape[0]
    z_out = np.empty((n, nsteps + 1), dtype=np.complex128)
    t_out = np.empty((n, nsteps + 1), dtype=np.float64)
    cdef double complex[:, ::1] zo = z_out
    cdef double[:, ::1] to = t_out
    cdef double c = cosh(dt / 2.0)
    cdef double s = sinh(dt / 2.0)
    cdef double r2 = inradius * inradius
    cdef double twopi = 2.0 * M_PI
    cdef Py_ssize_t i, k, j, jbest, guard
    cdef double complex a, b, na, nb, z, w
    cdef double m2, best, cur, det, th
    for i in range(n):
        a = a0[i]
        b = b0[i]
        for k in range(nsteps + 1):
            if k > 0:
                na = a * c + b * s
                nb = a * s + b * c
                a = na
                b = nb
                if k % renorm_every == 0:
                    det = sqrt(a.real * a.real + a.imag * a.imag - b.real * b.real - b.imag * b.imag)
                    a = a / det
                    b = b / det
            z = b / a.conjugate()
            m2 = z.real * z.real + z.imag * z.imag
            guard = 0
            while m2 > r2 and guard < 10000:
                guard += 1
                best = m2 * (1.0 - 2e-13)
                jbest = -1
                for j in range(ng):
                    w = (ga[j] * z + gb[j]) / (gb[j].conjugate() * z + ga[j].conjugate())
                    cur = w.real * w.real + w.imag * w.imag
                    if cur < best:
                        best = cur
                        jbest = j
                if jbest < 0:
                    break
                na = ga[jbest] * a + gb[jbest] * b.conjugate()
                nb = ga[jbest] * b + gb[jbest] * a.conjugate()
                a = na
                b = nb
                z = b / a.conjugate()
                m2 = z.real * z.real + z.imag * z.imag
            zo[i, k] = z
            th = fmod(2.0 * atan2(a.imag, a.real), twopi)
            if th < 0:
                th += twopi
            to[i, k] = th
    return z_out, t_out
