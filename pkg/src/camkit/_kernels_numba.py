"""Numba-compiled kernels, signature-compatible with ``_kernels_numpy``.

Loops are serial: every output element is written by exactly one iteration,
so results are reproducible bit-for-bit across runs.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def conv2d_forward(x, w, b, stride, padding):
    c_in, h, wd = x.shape
    c_out, _, kh, kw = w.shape
    h_out = (h + 2 * padding - kh) // stride + 1
    w_out = (wd + 2 * padding - kw) // stride + 1
    y = np.empty((c_out, h_out, w_out), dtype=np.float32)
    for co in range(c_out):
        for i in range(h_out):
            for j in range(w_out):
                acc = np.float64(b[co])
                i0 = i * stride - padding
                j0 = j * stride - padding
                for ci in range(c_in):
                    for u in range(kh):
                        iu = i0 + u
                        if iu < 0 or iu >= h:
                            continue
                        for v in range(kw):
                            jv = j0 + v
                            if jv < 0 or jv >= wd:
                                continue
                            acc += np.float64(x[ci, iu, jv]) * np.float64(w[co, ci, u, v])
                y[co, i, j] = acc
    return y


@njit(cache=True)
def conv2d_input_grad(gy, w, stride, padding, h_in, w_in):
    c_out, h_out, w_out = gy.shape
    _, c_in, kh, kw = w.shape
    gx = np.zeros((c_in, h_in, w_in), dtype=np.float64)
    for co in range(c_out):
        for i in range(h_out):
            for j in range(w_out):
                g = np.float64(gy[co, i, j])
                i0 = i * stride - padding
                j0 = j * stride - padding
                for ci in range(c_in):
                    for u in range(kh):
                        iu = i0 + u
                        if iu < 0 or iu >= h_in:
                            continue
                        for v in range(kw):
                            jv = j0 + v
                            if jv < 0 or jv >= w_in:
                                continue
                            gx[ci, iu, jv] += g * np.float64(w[co, ci, u, v])
    return gx.astype(np.float32)


@njit(cache=True)
def maxpool_forward(x, window, stride):
    c, h, w = x.shape
    h_out = (h - window) // stride + 1
    w_out = (w - window) // stride + 1
    y = np.empty((c, h_out, w_out), dtype=np.float32)
    arg = np.empty((c, h_out, w_out), dtype=np.int64)
    for ci in range(c):
        for i in range(h_out):
            for j in range(w_out):
                best = np.float32(-np.inf)
                bi = 0
                for u in range(window):
                    for v in range(window):
                        iu = i * stride + u
                        jv = j * stride + v
                        val = x[ci, iu, jv]
                        if val > best:
                            best = val
                            bi = iu * w + jv
                y[ci, i, j] = best
                arg[ci, i, j] = bi
    return y, arg


@njit(cache=True)
def maxpool_scatter(values, arg, h_in, w_in):
    c, h_out, w_out = values.shape
    gx = np.zeros((c, h_in * w_in), dtype=np.float64)
    for ci in range(c):
        for i in range(h_out):
            for j in range(w_out):
                gx[ci, arg[ci, i, j]] += np.float64(values[ci, i, j])
    return gx.reshape(c, h_in, w_in).astype(np.float32)


@njit(cache=True)
def avgpool_forward(x, window, stride):
    c, h, w = x.shape
    h_out = (h - window) // stride + 1
    w_out = (w - window) // stride + 1
    y = np.empty((c, h_out, w_out), dtype=np.float32)
    inv = 1.0 / (window * window)
    for ci in range(c):
        for i in range(h_out):
            for j in range(w_out):
                acc = 0.0
                for u in range(window):
                    for v in range(window):
                        acc += np.float64(x[ci, i * stride + u, j * stride + v])
                y[ci, i, j] = acc * inv
    return y


@njit(cache=True)
def avgpool_scatter(gy, window, stride, h_in, w_in):
    c, h_out, w_out = gy.shape
    gx = np.zeros((c, h_in, w_in), dtype=np.float64)
    inv = 1.0 / (window * window)
    for ci in range(c):
        for i in range(h_out):
            for j in range(w_out):
                g = np.float64(gy[ci, i, j]) * inv
                for u in range(window):
                    for v in range(window):
                        gx[ci, i * stride + u, j * stride + v] += g
    return gx.astype(np.float32)
