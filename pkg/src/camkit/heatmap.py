"""Render explanation maps to netpbm images (PGM grayscale, PPM overlay).

Netpbm keeps the renderer dependency-free and easy to eyeball or diff.
Quantization uses round-half-to-even (np.rint) so the bytes are stable
across runs and platforms.
"""

import numpy as np

# Piecewise-linear cold-to-hot ramp, interpolated per channel.
_STOPS = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
_STOP_COLORS = np.array(
    [
        [0.0, 0.0, 96.0],
        [0.0, 64.0, 255.0],
        [0.0, 224.0, 160.0],
        [255.0, 224.0, 0.0],
        [255.0, 32.0, 0.0],
    ]
)


def _quantize(values):
    return np.clip(np.rint(values), 0.0, 255.0).astype(np.uint8)


def _check_map(values):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D map, got shape {arr.shape}")
    return arr


def colormap(values):
    """Map values in [0, 1] to an (H, W, 3) float array of 0..255 colors."""
    arr = _check_map(values)
    flat = np.clip(arr.ravel(), 0.0, 1.0)
    channels = [np.interp(flat, _STOPS, _STOP_COLORS[:, c]) for c in range(3)]
    return np.stack(channels, axis=-1).reshape(arr.shape + (3,))


def write_pgm(path, values):
    """Write a [0, 1] map as a binary (P5) PGM, maxval 255."""
    arr = _check_map(values)
    h, w = arr.shape
    pixels = _quantize(arr * 255.0)
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def write_ppm(path, rgb):
    """Write an (H, W, 3) array of 0..255 values as a binary (P6) PPM."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) array, got shape {arr.shape}")
    h, w, _ = arr.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(_quantize(arr).tobytes())


def overlay(image, normalized, alpha=0.5):
    """Blend a colormapped explanation over a [0, 1] (C, H, W) image."""
    arr = _check_map(normalized)
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3:
        raise ValueError(f"expected a (C, H, W) image, got shape {img.shape}")
    if img.shape[1:] != arr.shape:
        raise ValueError(f"image spatial size {img.shape[1:]} != map size {arr.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if img.shape[0] == 3:
        base = np.moveaxis(img, 0, -1)
    else:
        base = np.repeat(img.mean(axis=0)[:, :, None], 3, axis=2)
    base = np.clip(base, 0.0, 1.0) * 255.0
    return (1.0 - alpha) * base + alpha * colormap(arr)


def write_overlay(path, image, normalized, alpha=0.5):
    """Render ``overlay`` straight to a PPM file."""
    write_ppm(path, overlay(image, normalized, alpha=alpha))
