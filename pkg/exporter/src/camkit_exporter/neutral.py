"""Writers for the neutral container formats camkit reads.

This module is deliberately self-contained: it never imports camkit, so the
only contract between the exporter and the toolkit is the documented file
layout itself — an ASCII header terminated by ``end-header`` followed by a
blob of little-endian float32 tensors addressed by byte offset.

    camkit-model v1
    input-shape: 3,8,8
    split: 3
    num-classes: 5
    layer: conv2d stride=1 padding=1 weight=layer0.weight bias=layer0.bias
    ...
    tensor: layer0.weight f32le 8,3,3,3 @0
    end-header
    <blob>

Writing is deterministic: identical inputs produce identical bytes.
"""

import numpy as np

MODEL_MAGIC = "camkit-model"
TENSOR_MAGIC = "camkit-tensor"
SAMPLE_MAGIC = "camkit-sample"
FORMAT_VERSION = "v1"

_END = b"end-header\n"

LAYER_KINDS = ("conv2d", "relu", "maxpool", "avgpool", "global-avgpool", "flatten", "dense")


class _Blob:
    def __init__(self):
        self.lines = []
        self.chunks = []
        self.offset = 0

    def add(self, name, array):
        arr = np.ascontiguousarray(array, dtype="<f4")
        shape = ",".join(str(int(d)) for d in arr.shape)
        self.lines.append(f"tensor: {name} f32le {shape} @{self.offset}")
        self.chunks.append(arr.tobytes())
        self.offset += arr.nbytes
        return name


def _emit(path, header_lines, blob):
    with open(path, "wb") as f:
        f.write("\n".join(header_lines).encode("ascii") + b"\n" + _END + blob)


def _layer_line(index, layer, blob):
    kind = layer["kind"]
    if kind not in LAYER_KINDS:
        raise ValueError(f"layer {index}: unknown kind {kind!r}")
    if kind == "conv2d":
        w = blob.add(f"layer{index}.weight", layer["weight"])
        b = blob.add(f"layer{index}.bias", layer["bias"])
        return f"layer: conv2d stride={layer['stride']} padding={layer['padding']} weight={w} bias={b}"
    if kind == "dense":
        w = blob.add(f"layer{index}.weight", layer["weight"])
        b = blob.add(f"layer{index}.bias", layer["bias"])
        return f"layer: dense weight={w} bias={b}"
    if kind in ("maxpool", "avgpool"):
        return f"layer: {kind} window={layer['window']} stride={layer['stride']}"
    return f"layer: {kind}"


def write_model(path, input_shape, split, num_classes, layers, class_names=None):
    """Write a model container from a list of layer dicts.

    ``layers`` entries: {"kind": "conv2d", "stride", "padding", "weight",
    "bias"}, {"kind": "dense", "weight", "bias"}, {"kind": "maxpool",
    "window", "stride"}, or parameter-free kinds.  ``split`` is the frontend
    length.
    """
    if not 0 <= split < len(layers):
        raise ValueError(f"split {split} outside layer count {len(layers)}")
    blob = _Blob()
    layer_lines = [_layer_line(i, layer, blob) for i, layer in enumerate(layers)]
    lines = [
        f"{MODEL_MAGIC} {FORMAT_VERSION}",
        "input-shape: " + ",".join(str(int(d)) for d in input_shape),
        f"split: {split}",
        f"num-classes: {num_classes}",
    ]
    if class_names:
        lines.append("class-names: " + ",".join(class_names))
    lines += layer_lines + blob.lines
    _emit(path, lines, b"".join(blob.chunks))


def write_sample(path, image, target_class, ref_logits=None, bbox=None):
    """Write a sample container: image tensor, class, optional extras."""
    blob = _Blob()
    blob.add("image", image)
    if ref_logits is not None:
        blob.add("ref-logits", ref_logits)
    lines = [
        f"{SAMPLE_MAGIC} {FORMAT_VERSION}",
        f"target-class: {int(target_class)}",
    ]
    if bbox is not None:
        top, left, bottom, right = (int(v) for v in bbox)
        lines.append(f"bbox: {top},{left},{bottom},{right}")
    lines += blob.lines
    _emit(path, lines, b"".join(blob.chunks))


def write_tensors(path, named):
    """Write named float32 arrays to a standalone tensor container."""
    blob = _Blob()
    for name, arr in named.items():
        blob.add(name, arr)
    _emit(path, [f"{TENSOR_MAGIC} {FORMAT_VERSION}"] + blob.lines, b"".join(blob.chunks))
