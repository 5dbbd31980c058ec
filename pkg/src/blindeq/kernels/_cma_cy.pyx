# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CMA kernels. Semantics match ``_cma_py`` exactly; see its docstring."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def cma_serial(
    cnp.complex128_t[::1] yx,
    cnp.complex128_t[::1] yy,
    cnp.complex128_t[::1] wxx,
    cnp.complex128_t[::1] wxy,
    cnp.complex128_t[::1] wyx,
    cnp.complex128_t[::1] wyy,
    double r2,
    cnp.float64_t[::1] mu,
    int sps,
):
    cdef Py_ssize_t L = wxx.shape[0]
    cdef Py_ssize_t n_out = (yx.shape[0] - L) // sps + 1
    out_x_arr = np.empty(n_out, dtype=np.complex128)
    out_y_arr = np.empty(n_out, dtype=np.complex128)
    cdef cnp.complex128_t[::1] out_x = out_x_arr
    cdef cnp.complex128_t[::1] out_y = out_y_arr
    cdef Py_ssize_t m, j, t
    cdef double complex ox, oy, sx, sy, cxj, cyj
    cdef double ex, ey, step

    for m in range(n_out):
        t = m * sps + L - 1
        ox = 0
        oy = 0
        for j in range(L):
            cxj = yx[t - j]
            cyj = yy[t - j]
            ox = ox + wxx[j] * cxj + wxy[j] * cyj
            oy = oy + wyx[j] * cxj + wyy[j] * cyj
        out_x[m] = ox
        out_y[m] = oy
        ex = ox.real * ox.real + ox.imag * ox.imag - r2
        ey = oy.real * oy.real + oy.imag * oy.imag - r2
        step = 4.0 * mu[m]
        sx = step * ex * ox
        sy = step * ey * oy
        for j in range(L):
            cxj = yx[t - j].conjugate()
            cyj = yy[t - j].conjugate()
            wxx[j] = wxx[j] - sx * cxj
            wxy[j] = wxy[j] - sx * cyj
            wyx[j] = wyx[j] - sy * cxj
            wyy[j] = wyy[j] - sy * cyj
    return out_x_arr, out_y_arr


def cma_batch(
    cnp.complex128_t[::1] yx,
    cnp.complex128_t[::1] yy,
    cnp.complex128_t[::1] wxx,
    cnp.complex128_t[::1] wxy,
    cnp.complex128_t[::1] wyx,
    cnp.complex128_t[::1] wyy,
    double r2,
    double mu,
    int sps,
):
    cdef Py_ssize_t L = wxx.shape[0]
    cdef Py_ssize_t n_out = (yx.shape[0] - L) // sps + 1
    out_x_arr = np.empty(n_out, dtype=np.complex128)
    out_y_arr = np.empty(n_out, dtype=np.complex128)
    cdef cnp.complex128_t[::1] out_x = out_x_arr
    cdef cnp.complex128_t[::1] out_y = out_y_arr
    gx_arr = np.zeros(L, dtype=np.complex128)
    gy_arr = np.zeros(L, dtype=np.complex128)
    gxy_arr = np.zeros(L, dtype=np.complex128)
    gyx_arr = np.zeros(L, dtype=np.complex128)
    cdef cnp.complex128_t[::1] gxx = gx_arr
    cdef cnp.complex128_t[::1] gxy = gxy_arr
    cdef cnp.complex128_t[::1] gyx = gyx_arr
    cdef cnp.complex128_t[::1] gyy = gy_arr
    cdef Py_ssize_t m, j, t
    cdef double complex ox, oy, sx, sy, cxj, cyj
    cdef double ex, ey, scale

    for m in range(n_out):
        t = m * sps + L - 1
        ox = 0
        oy = 0
        for j in range(L):
            cxj = yx[t - j]
            cyj = yy[t - j]
            ox = ox + wxx[j] * cxj + wxy[j] * cyj
            oy = oy + wyx[j] * cxj + wyy[j] * cyj
        out_x[m] = ox
        out_y[m] = oy
        ex = ox.real * ox.real + ox.imag * ox.imag - r2
        ey = oy.real * oy.real + oy.imag * oy.imag - r2
        sx = ex * ox
        sy = ey * oy
        for j in range(L):
            cxj = yx[t - j].conjugate()
            cyj = yy[t - j].conjugate()
            gxx[j] = gxx[j] + sx * cxj
            gxy[j] = gxy[j] + sx * cyj
            gyx[j] = gyx[j] + sy * cxj
            gyy[j] = gyy[j] + sy * cyj
    scale = 4.0 * mu / n_out
    for j in range(L):
        wxx[j] = wxx[j] - scale * gxx[j]
        wxy[j] = wxy[j] - scale * gxy[j]
        wyx[j] = wyx[j] - scale * gyx[j]
        wyy[j] = wyy[j] - scale * gyy[j]
    return out_x_arr, out_y_arr
