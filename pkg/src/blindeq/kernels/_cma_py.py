"""Pure-numpy CMA kernels (fallback when the compiled extension is absent).

Contract shared with ``_cma_cy``:

* Inputs ``yx, yy`` are 1-D complex128 streams that already carry ``L - 1``
  history samples at the front (``L = len(wxx)``).
* Output symbol ``m`` is computed from the window ending at sample
  ``m * sps + L - 1``:  ``out[m] = sum_j w[j] * y[m*sps + L - 1 - j]``.
* The tap arrays are updated in place with exact gradient descent on the
  Godard p=2 cost ``(|u|^2 - r2)^2``:  ``w -= mu * 4*(|u|^2 - r2)*u*conj(x)``.
* ``cma_serial`` updates after every output symbol (``mu`` is per-symbol);
  ``cma_batch`` averages the gradient over all outputs and applies one
  update with scalar ``mu``.
"""

import numpy as np


def _n_out(n_samples, n_taps, sps):
    return (n_samples - n_taps) // sps + 1


def cma_serial(yx, yy, wxx, wxy, wyx, wyy, r2, mu, sps):
    n_out = _n_out(len(yx), len(wxx), sps)
    out_x = np.empty(n_out, dtype=complex)
    out_y = np.empty(n_out, dtype=complex)
    rev = slice(None, None, -1)
    L = len(wxx)
    for m in range(n_out):
        t0 = m * sps
        vx = yx[t0 : t0 + L][rev]
        vy = yy[t0 : t0 + L][rev]
        ox = np.dot(wxx, vx) + np.dot(wxy, vy)
        oy = np.dot(wyx, vx) + np.dot(wyy, vy)
        out_x[m] = ox
        out_y[m] = oy
        ex = (ox.real * ox.real + ox.imag * ox.imag) - r2
        ey = (oy.real * oy.real + oy.imag * oy.imag) - r2
        step = 4.0 * mu[m]
        cx = np.conj(vx)
        cy = np.conj(vy)
        wxx -= (step * ex * ox) * cx
        wxy -= (step * ex * ox) * cy
        wyx -= (step * ey * oy) * cx
        wyy -= (step * ey * oy) * cy
    return out_x, out_y


def cma_batch(yx, yy, wxx, wxy, wyx, wyy, r2, mu, sps):
    L = len(wxx)
    n_out = _n_out(len(yx), L, sps)
    # windows reversed so column j is the sample delayed by j taps
    wx = np.lib.stride_tricks.sliding_window_view(yx, L)[:: sps][:n_out, ::-1]
    wy = np.lib.stride_tricks.sliding_window_view(yy, L)[:: sps][:n_out, ::-1]
    out_x = wx @ wxx + wy @ wxy
    out_y = wx @ wyx + wy @ wyy
    ex = (out_x.real**2 + out_x.imag**2) - r2
    ey = (out_y.real**2 + out_y.imag**2) - r2
    scale = 4.0 * mu / n_out
    fx = ex * out_x
    fy = ey * out_y
    wxx -= scale * (fx @ np.conj(wx))
    wxy -= scale * (fx @ np.conj(wy))
    wyx -= scale * (fy @ np.conj(wx))
    wyy -= scale * (fy @ np.conj(wy))
    return out_x, out_y
