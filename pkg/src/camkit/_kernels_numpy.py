"""Pure-numpy reference kernels.

Every function here has a numba twin in ``_kernels_numba``; the active set
is chosen once at import time by ``camkit.backend``.  All spatial kernels
take channel-first float32 arrays and accumulate in float64 before casting
back to float32.
"""

import numpy as np


def conv2d_forward(x, w, b, stride, padding):
    c_in, h, wd = x.shape
    c_out, _, kh, kw = w.shape
    h_out = (h + 2 * padding - kh) // stride + 1
    w_out = (wd + 2 * padding - kw) // stride + 1
    xp = x
    if padding:
        xp = np.zeros((c_in, h + 2 * padding, wd + 2 * padding), dtype=x.dtype)
        xp[:, padding:padding + h, padding:padding + wd] = x
    s0, s1, s2 = xp.strides
    win = np.lib.stride_tricks.as_strided(
        xp,
        shape=(c_in, kh, kw, h_out, w_out),
        strides=(s0, s1, s2, s1 * stride, s2 * stride),
        writeable=False,
    )
    acc = np.tensordot(w.astype(np.float64), win.astype(np.float64), axes=([1, 2, 3], [0, 1, 2]))
    acc += b.astype(np.float64)[:, None, None]
    return acc.astype(np.float32)


def conv2d_input_grad(gy, w, stride, padding, h_in, w_in):
    c_out, h_out, w_out = gy.shape
    _, c_in, kh, kw = w.shape
    gxp = np.zeros((c_in, h_in + 2 * padding, w_in + 2 * padding), dtype=np.float64)
    # t[ci, u, v, i, j] = sum_co w[co, ci, u, v] * gy[co, i, j]
    t = np.einsum("ocuv,oij->cuvij", w.astype(np.float64), gy.astype(np.float64))
    for u in range(kh):
        for v in range(kw):
            gxp[:, u:u + stride * h_out:stride, v:v + stride * w_out:stride] += t[:, u, v]
    if padding:
        gxp = gxp[:, padding:padding + h_in, padding:padding + w_in]
    return gxp.astype(np.float32)


def _pool_windows(x, window, stride):
    c, h, w = x.shape
    h_out = (h - window) // stride + 1
    w_out = (w - window) // stride + 1
    s0, s1, s2 = x.strides
    win = np.lib.stride_tricks.as_strided(
        x,
        shape=(c, h_out, w_out, window, window),
        strides=(s0, s1 * stride, s2 * stride, s1, s2),
        writeable=False,
    )
    return win, h_out, w_out


def maxpool_forward(x, window, stride):
    c, h, w = x.shape
    win, h_out, w_out = _pool_windows(x, window, stride)
    flat = win.reshape(c, h_out, w_out, window * window)
    # argmax over the window in row-major scan order: ties resolve to the
    # lowest flat (i, j) index within the channel
    local = np.argmax(flat, axis=3)
    y = np.take_along_axis(flat, local[..., None], axis=3)[..., 0]
    u, v = local // window, local % window
    ii = np.arange(h_out)[None, :, None] * stride + u
    jj = np.arange(w_out)[None, None, :] * stride + v
    arg = (ii * w + jj).astype(np.int64)
    return y.astype(np.float32), arg


def maxpool_scatter(values, arg, h_in, w_in):
    c = values.shape[0]
    gx = np.zeros((c, h_in * w_in), dtype=np.float64)
    np.add.at(gx, (np.arange(c)[:, None], arg.reshape(c, -1)), values.reshape(c, -1).astype(np.float64))
    return gx.reshape(c, h_in, w_in).astype(np.float32)


def avgpool_forward(x, window, stride):
    win, _, _ = _pool_windows(x, window, stride)
    return win.astype(np.float64).mean(axis=(3, 4)).astype(np.float32)


def avgpool_scatter(gy, window, stride, h_in, w_in):
    c, h_out, w_out = gy.shape
    gx = np.zeros((c, h_in, w_in), dtype=np.float64)
    g = gy.astype(np.float64) / (window * window)
    for u in range(window):
        for v in range(window):
            gx[:, u:u + stride * h_out:stride, v:v + stride * w_out:stride] += g
    return gx.astype(np.float32)
