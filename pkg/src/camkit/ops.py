"""Core tensor operations.

Tensors are plain numpy arrays: float32, C-order, channel-first (C, H, W)
for spatial data.  Reductions (convolution sums, softmax denominator,
pooling means) accumulate in float64 before the result is stored back as
float32.  All operations are pure; inputs are never mutated.
"""

import numpy as np

from . import backend


def as_tensor(x):
    """Coerce to a float32 C-order array."""
    return np.ascontiguousarray(x, dtype=np.float32)


def conv2d(x, kernels, bias, stride=1, padding=0):
    """Cross-correlate a (C_in, H, W) input with (C_out, C_in, kH, kW) kernels.

    The output spatial size (H + 2*padding - kH) / stride + 1 must be an
    exact integer; anything else is rejected.
    """
    x = as_tensor(x)
    kernels = as_tensor(kernels)
    bias = as_tensor(bias)
    if x.ndim != 3 or kernels.ndim != 4:
        raise ValueError(f"conv2d expects input (C,H,W) and kernels (O,C,kH,kW), got {x.shape} and {kernels.shape}")
    c_out, c_in, kh, kw = kernels.shape
    if x.shape[0] != c_in:
        raise ValueError(f"conv2d channel mismatch: input {x.shape} vs kernels {kernels.shape}")
    if bias.shape != (c_out,):
        raise ValueError(f"conv2d bias shape {bias.shape} does not match {c_out} output channels")
    if stride < 1 or padding < 0:
        raise ValueError(f"conv2d needs stride >= 1 and padding >= 0, got stride={stride} padding={padding}")
    h, w = x.shape[1:]
    if kh > h + 2 * padding or kw > w + 2 * padding:
        raise ValueError(f"conv2d kernel {kh}x{kw} exceeds padded input {h + 2 * padding}x{w + 2 * padding}")
    if (h + 2 * padding - kh) % stride or (w + 2 * padding - kw) % stride:
        raise ValueError(
            f"conv2d output size is not exact: input {h}x{w}, kernel {kh}x{kw}, "
            f"stride {stride}, padding {padding}"
        )
    return backend.conv2d_forward(x, kernels, bias, stride, padding)


def dense(x, weights, bias):
    """Affine map: out_i = sum_j weights[i, j] * x[j] + bias[i]."""
    x = as_tensor(x)
    weights = as_tensor(weights)
    bias = as_tensor(bias)
    if x.ndim != 1 or weights.ndim != 2:
        raise ValueError(f"dense expects a vector and a (m, n) matrix, got {x.shape} and {weights.shape}")
    m, n = weights.shape
    if x.shape[0] != n:
        raise ValueError(f"dense length mismatch: input {x.shape[0]} vs weights {weights.shape}")
    if bias.shape != (m,):
        raise ValueError(f"dense bias shape {bias.shape} does not match {m} outputs")
    out = weights.astype(np.float64) @ x.astype(np.float64) + bias.astype(np.float64)
    return out.astype(np.float32)


def relu(x):
    """Elementwise max(0, x)."""
    return np.maximum(as_tensor(x), np.float32(0.0))


def pool(x, mode, window=2, stride=None):
    """Pool a (C, H, W) tensor; mode is 'max', 'avg' or 'global-avg'.

    'global-avg' collapses each channel to a single (C, 1, 1) scalar and
    ignores window/stride.  The windowed modes require an exact output size.
    """
    x = as_tensor(x)
    if x.ndim != 3:
        raise ValueError(f"pool expects a (C, H, W) tensor, got shape {x.shape}")
    if mode == "global-avg":
        return x.astype(np.float64).mean(axis=(1, 2)).astype(np.float32).reshape(-1, 1, 1)
    if mode not in ("max", "avg"):
        raise ValueError(f"unknown pool mode {mode!r}")
    if stride is None:
        stride = window
    h, w = x.shape[1:]
    if window > h or window > w:
        raise ValueError(f"pool window {window} exceeds input {h}x{w}")
    if (h - window) % stride or (w - window) % stride:
        raise ValueError(f"pool output size is not exact: input {h}x{w}, window {window}, stride {stride}")
    if mode == "max":
        return backend.maxpool_forward(x, window, stride)[0]
    return backend.avgpool_forward(x, window, stride)


def softmax(logits):
    """Numerically stable softmax of a vector."""
    z = as_tensor(logits)
    if z.ndim != 1 or z.size < 1:
        raise ValueError(f"softmax expects a non-empty vector, got shape {z.shape}")
    e = np.exp(z.astype(np.float64) - z.max())
    return (e / e.sum()).astype(np.float32)


def upsample_bilinear(m, target):
    """Bilinearly resize a 2-D map to ``target`` = (H', W'), align-corners.

    Corner pixels map exactly onto corner pixels; a constant map stays
    constant at any target size.
    """
    m = as_tensor(m)
    if m.ndim != 2:
        raise ValueError(f"upsample_bilinear expects a 2-D map, got shape {m.shape}")
    th, tw = int(target[0]), int(target[1])
    if th < 1 or tw < 1:
        raise ValueError(f"upsample target must be positive, got {target}")
    sh, sw = m.shape
    src = m.astype(np.float64)

    def coords(t, s):
        if t == 1 or s == 1:
            return np.zeros(t, dtype=np.float64)
        return np.arange(t, dtype=np.float64) * (s - 1) / (t - 1)

    yy = coords(th, sh)
    xx = coords(tw, sw)
    y0 = np.minimum(yy.astype(np.int64), sh - 1)
    x0 = np.minimum(xx.astype(np.int64), sw - 1)
    y1 = np.minimum(y0 + 1, sh - 1)
    x1 = np.minimum(x0 + 1, sw - 1)
    fy = (yy - y0)[:, None]
    fx = (xx - x0)[None, :]
    out = (
        src[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
        + src[np.ix_(y0, x1)] * (1 - fy) * fx
        + src[np.ix_(y1, x0)] * fy * (1 - fx)
        + src[np.ix_(y1, x1)] * fy * fx
    )
    return out.astype(np.float32)


def minmax_normalize(m):
    """Rescale to [0, 1] via (v - min) / (max - min).

    A constant map carries no ordering information, so it maps to all-zero
    instead of dividing by zero.
    """
    m = as_tensor(m)
    lo = float(m.min())
    hi = float(m.max())
    if hi == lo:
        return np.zeros_like(m)
    return ((m.astype(np.float64) - lo) / (hi - lo)).astype(np.float32)


def hadamard(a, b):
    """Elementwise product of two identically shaped tensors."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def mask_image(image, mask):
    """Broadcast a (H, W) mask across the channels of a (C, H, W) image.

    This is the one sanctioned broadcasting form of the Hadamard product;
    everything else must match shapes exactly.
    """
    image = as_tensor(image)
    mask = as_tensor(mask)
    if image.ndim != 3 or mask.ndim != 2 or image.shape[1:] != mask.shape:
        raise ValueError(f"mask_image expects (C, H, W) and (H, W), got {image.shape} and {mask.shape}")
    return image * mask[None, :, :]
