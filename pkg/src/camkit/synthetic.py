"""Seeded synthetic fixtures: small models, images and eval samples.

Everything here is deterministic in the seed (numpy Generator/PCG64 draws
in a fixed order), so fixtures can be regenerated instead of shipped.
The stock architecture maps a (3, 2S, 2S) image to an (N, S, S)
activation stack:

    conv2d(3 -> N, 3x3, stride 1, padding 1) -> relu -> maxpool(2, 2)

on top of which sit interchangeable heads selected by ``head_kind``:

    linear      flatten -> dense                     (affine in the stack)
    relu-mlp    flatten -> dense(16) -> relu -> dense
    conv-relu   conv2d(3x3) -> relu [-> maxpool] -> flatten -> dense
    gap-linear  global-avgpool -> flatten -> dense
"""

import numpy as np

from . import graph, ops
from .graph import LayerSpec, ModelGraph
from .metrics import BoundingBox, EvalSample

HEAD_KINDS = ("linear", "relu-mlp", "conv-relu", "gap-linear")
MAX_MAPS = 64


def _dense(rng, fan_in, fan_out):
    w = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
    b = rng.uniform(-0.05, 0.15, size=fan_out)
    return LayerSpec("dense", weight=w.astype(np.float32), bias=b.astype(np.float32))


def _conv(rng, c_in, c_out, padding):
    w = rng.standard_normal((c_out, c_in, 3, 3)) * np.sqrt(2.0 / (c_in * 9))
    b = rng.uniform(-0.05, 0.15, size=c_out)
    return LayerSpec(
        "conv2d", weight=w.astype(np.float32), bias=b.astype(np.float32), stride=1, padding=padding
    )


def _head_layers(rng, num_maps, spatial, head_kind, num_classes):
    flat = num_maps * spatial * spatial
    if head_kind == "linear":
        return [LayerSpec("flatten"), _dense(rng, flat, num_classes)]
    if head_kind == "relu-mlp":
        hidden = 16
        return [
            LayerSpec("flatten"),
            _dense(rng, flat, hidden),
            LayerSpec("relu"),
            _dense(rng, hidden, num_classes),
        ]
    if head_kind == "conv-relu":
        if spatial < 3:
            raise ValueError(f"conv-relu head needs spatial >= 3, got {spatial}")
        mid = min(8, num_maps)
        layers = [_conv(rng, num_maps, mid, padding=0), LayerSpec("relu")]
        side = spatial - 2
        if side >= 2 and side % 2 == 0:
            layers.append(LayerSpec("maxpool", window=2, stride=2))
            side //= 2
        layers.append(LayerSpec("flatten"))
        layers.append(_dense(rng, mid * side * side, num_classes))
        return layers
    if head_kind == "gap-linear":
        return [LayerSpec("global-avgpool"), LayerSpec("flatten"), _dense(rng, num_maps, num_classes)]
    raise ValueError(f"unknown head_kind {head_kind!r}, expected one of {HEAD_KINDS}")


def generate_synthetic_model(num_maps=8, spatial=4, head_kind="linear", num_classes=5, seed=0):
    """Build a seeded ModelGraph with the stock frontend and chosen head."""
    if not 1 <= num_maps <= MAX_MAPS:
        raise ValueError(f"num_maps must be in [1, {MAX_MAPS}], got {num_maps}")
    if spatial < 2:
        raise ValueError(f"spatial must be >= 2, got {spatial}")
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    rng = np.random.default_rng(seed)
    frontend = [
        _conv(rng, 3, num_maps, padding=1),
        LayerSpec("relu"),
        LayerSpec("maxpool", window=2, stride=2),
    ]
    head = _head_layers(rng, num_maps, spatial, head_kind, num_classes)
    return ModelGraph(
        frontend=frontend,
        head=head,
        input_shape=(3, 2 * spatial, 2 * spatial),
        activation_shape=(num_maps, spatial, spatial),
        num_classes=num_classes,
    )


def generate_synthetic_image(input_shape, seed):
    """Smooth random image in [0, 1]: low-res noise upsampled bilinearly."""
    c, h, w = input_shape
    rng = np.random.default_rng(seed)
    grid = max(2, min(h, w) // 4)
    coarse = rng.random((c, grid, grid)).astype(np.float32)
    image = np.stack([ops.upsample_bilinear(coarse[k], (h, w)) for k in range(c)])
    image += 0.05 * rng.standard_normal(image.shape).astype(np.float32)
    lo, hi = float(image.min()), float(image.max())
    return ((image - lo) / (hi - lo)).astype(np.float32)


def generate_synthetic_sample(model, seed, bbox_fraction=0.4):
    """Image plus target class (the model's argmax) and a jittered bbox."""
    rng = np.random.default_rng(seed)
    image = generate_synthetic_image(model.input_shape, rng.integers(0, 2**32))
    _, _, probs = graph.forward_full(model, image)
    _, h, w = model.input_shape
    side = max(1, int(round(np.sqrt(bbox_fraction) * min(h, w))))
    top = int(rng.integers(0, h - side + 1))
    left = int(rng.integers(0, w - side + 1))
    bbox = BoundingBox(top=top, left=left, bottom=top + side, right=left + side)
    return EvalSample(image=image, class_index=int(np.argmax(probs)), bbox=bbox)
