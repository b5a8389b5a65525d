"""Neutral on-disk formats for models, tensors and samples.

All three files share one container layout: an ASCII header (LF line
endings) terminated by an ``end-header`` line, followed by a raw blob.
Tensor payloads live in the blob as little-endian 32-bit floats in
row-major order, located by byte offset from the blob start:

    camkit-model v1
    input-shape: 3,16,16
    split: 3
    num-classes: 5
    class-names: cat,dog,...            (optional)
    layer: conv2d stride=1 padding=1 weight=layer0.weight bias=layer0.bias
    layer: relu
    layer: maxpool window=2 stride=2
    layer: flatten
    layer: dense weight=layer4.weight bias=layer4.bias
    tensor: layer0.weight f32le 8,3,3,3 @0
    tensor: layer0.bias f32le 8 @864
    end-header
    <blob>

``split`` is the frontend length: layers before it map the image to the
activation stack, the rest form the head.  Sample files carry an ``image``
tensor, a ``target-class`` line, an optional ``bbox`` (top,left,bottom,
right) and an optional ``ref-logits`` tensor recorded by an exporter.
Saving is deterministic: identical inputs produce identical bytes.
"""

import re
from dataclasses import dataclass

import numpy as np

from . import graph
from .metrics import BoundingBox, EvalSample

MODEL_MAGIC = "camkit-model"
TENSOR_MAGIC = "camkit-tensor"
SAMPLE_MAGIC = "camkit-sample"
FORMAT_VERSION = "v1"

_END = b"end-header\n"
_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")


class FormatError(ValueError):
    """A container file that cannot be parsed or fails validation."""


@dataclass
class _TensorRecord:
    name: str
    shape: tuple
    offset: int


def _shape_csv(shape):
    return ",".join(str(int(d)) for d in shape)


def _parse_ints(text, what):
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise FormatError(f"malformed {what}: {text!r}") from None


class _BlobWriter:
    def __init__(self):
        self.records = []
        self.chunks = []
        self.offset = 0

    def add(self, name, array):
        if not _NAME_RE.match(name):
            raise FormatError(f"invalid tensor name {name!r}")
        arr = np.ascontiguousarray(array, dtype="<f4")
        self.records.append(_TensorRecord(name, arr.shape, self.offset))
        self.chunks.append(arr.tobytes())
        self.offset += arr.nbytes
        return name

    def header_lines(self):
        return [f"tensor: {r.name} f32le {_shape_csv(r.shape)} @{r.offset}" for r in self.records]

    def blob(self):
        return b"".join(self.chunks)


def _split_container(data, magic, path):
    end = data.find(_END)
    if end < 0:
        raise FormatError(f"{path}: missing end-header marker")
    try:
        header = data[:end].decode("ascii")
    except UnicodeDecodeError:
        raise FormatError(f"{path}: header is not ASCII") from None
    lines = [ln for ln in header.split("\n") if ln]
    if not lines:
        raise FormatError(f"{path}: empty header")
    first = lines[0].split()
    if len(first) != 2 or first[0] != magic:
        raise FormatError(f"{path}: not a {magic} file (first line {lines[0]!r})")
    if first[1] != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported {magic} version {first[1]!r}, expected {FORMAT_VERSION}")
    return lines[1:], data[end + len(_END):]


def _parse_tensor_line(rest):
    parts = rest.split()
    if len(parts) != 4 or not parts[3].startswith("@"):
        raise FormatError(f"malformed tensor record: {rest!r}")
    name, dtype, shape_csv, at = parts
    if dtype != "f32le":
        raise FormatError(f"tensor {name!r} has unsupported dtype tag {dtype!r}")
    shape = _parse_ints(shape_csv, f"tensor {name!r} shape")
    return _TensorRecord(name, shape, int(at[1:]))


def _read_tensor(record, blob, path):
    count = int(np.prod(record.shape)) if record.shape else 1
    nbytes = 4 * count
    if record.offset < 0 or record.offset + nbytes > len(blob):
        raise FormatError(
            f"{path}: tensor {record.name!r} payload is truncated "
            f"(needs {nbytes} bytes at offset {record.offset}, blob has {len(blob)})"
        )
    arr = np.frombuffer(blob, dtype="<f4", count=count, offset=record.offset)
    return np.ascontiguousarray(arr.reshape(record.shape), dtype=np.float32)


def _kv(line, path):
    if ": " not in line:
        raise FormatError(f"{path}: malformed header line {line!r}")
    key, value = line.split(": ", 1)
    return key, value


# ---------------------------------------------------------------- tensors

def save_tensors(path, named):
    """Write named float32 arrays to a standalone tensor container."""
    writer = _BlobWriter()
    for name, arr in named.items():
        writer.add(name, arr)
    lines = [f"{TENSOR_MAGIC} {FORMAT_VERSION}"] + writer.header_lines()
    with open(path, "wb") as f:
        f.write("\n".join(lines).encode("ascii") + b"\n" + _END + writer.blob())


def load_tensors(path):
    """Read a tensor container back as an ordered name -> array dict."""
    with open(path, "rb") as f:
        data = f.read()
    lines, blob = _split_container(data, TENSOR_MAGIC, path)
    out = {}
    for line in lines:
        key, rest = _kv(line, path)
        if key != "tensor":
            raise FormatError(f"{path}: unexpected header line {line!r}")
        rec = _parse_tensor_line(rest)
        out[rec.name] = _read_tensor(rec, blob, path)
    return out


def save_tensor(path, array, name="tensor"):
    save_tensors(path, {name: array})


def load_tensor(path):
    named = load_tensors(path)
    if len(named) != 1:
        raise FormatError(f"{path}: expected exactly one tensor, found {len(named)}")
    return next(iter(named.values()))


# ------------------------------------------------------------------ model

def _layer_line(layer, names):
    if layer.kind == "conv2d":
        return f"layer: conv2d stride={layer.stride} padding={layer.padding} weight={names[0]} bias={names[1]}"
    if layer.kind == "dense":
        return f"layer: dense weight={names[0]} bias={names[1]}"
    if layer.kind in ("maxpool", "avgpool"):
        return f"layer: {layer.kind} window={layer.window} stride={layer.stride}"
    return f"layer: {layer.kind}"


def save_model(model, path):
    """Serialize a ModelGraph; byte output is deterministic."""
    writer = _BlobWriter()
    layer_lines = []
    for i, layer in enumerate(list(model.frontend) + list(model.head)):
        names = ()
        if layer.kind in ("conv2d", "dense"):
            names = (
                writer.add(f"layer{i}.weight", layer.weight),
                writer.add(f"layer{i}.bias", layer.bias),
            )
        layer_lines.append(_layer_line(layer, names))
    lines = [
        f"{MODEL_MAGIC} {FORMAT_VERSION}",
        f"input-shape: {_shape_csv(model.input_shape)}",
        f"split: {len(model.frontend)}",
        f"num-classes: {model.num_classes}",
    ]
    if model.class_names:
        for name in model.class_names:
            if "," in name or "\n" in name:
                raise FormatError(f"class name {name!r} may not contain commas or newlines")
        lines.append("class-names: " + ",".join(model.class_names))
    lines += layer_lines + writer.header_lines()
    with open(path, "wb") as f:
        f.write("\n".join(lines).encode("ascii") + b"\n" + _END + writer.blob())


def _build_layer(kind, params, tensors, index, path):
    def tensor_param(key):
        name = params.get(key)
        if name is None:
            raise FormatError(f"{path}: layer {index} ({kind}) is missing its {key} tensor reference")
        if name not in tensors:
            raise FormatError(f"{path}: layer {index} ({kind}) references undeclared tensor {name!r}")
        return tensors[name]

    try:
        if kind == "conv2d":
            return graph.LayerSpec(
                "conv2d",
                weight=tensor_param("weight"),
                bias=tensor_param("bias"),
                stride=int(params.get("stride", 1)),
                padding=int(params.get("padding", 0)),
            )
        if kind == "dense":
            return graph.LayerSpec("dense", weight=tensor_param("weight"), bias=tensor_param("bias"))
        if kind in ("maxpool", "avgpool"):
            return graph.LayerSpec(
                kind, window=int(params.get("window", 2)), stride=int(params.get("stride", params.get("window", 2)))
            )
        return graph.LayerSpec(kind)
    except ValueError as e:
        raise FormatError(f"{path}: layer {index}: {e}") from None


def load_model(path):
    """Parse and fully validate a model file into a ModelGraph."""
    with open(path, "rb") as f:
        data = f.read()
    lines, blob = _split_container(data, MODEL_MAGIC, path)

    fields = {}
    layer_specs = []
    tensor_records = []
    for line in lines:
        key, rest = _kv(line, path)
        if key == "layer":
            parts = rest.split()
            params = {}
            for p in parts[1:]:
                if "=" not in p:
                    raise FormatError(f"{path}: malformed layer parameter {p!r} in {line!r}")
                k, v = p.split("=", 1)
                params[k] = v
            layer_specs.append((parts[0], params))
        elif key == "tensor":
            tensor_records.append(_parse_tensor_line(rest))
        elif key in ("input-shape", "split", "num-classes", "class-names"):
            fields[key] = rest
        else:
            raise FormatError(f"{path}: unknown header field {key!r}")

    for required in ("input-shape", "split", "num-classes"):
        if required not in fields:
            raise FormatError(f"{path}: missing required field {required!r}")
    if not layer_specs:
        raise FormatError(f"{path}: model declares no layers")

    tensors = {rec.name: _read_tensor(rec, blob, path) for rec in tensor_records}
    layers = [
        _build_layer(kind, params, tensors, i, path) for i, (kind, params) in enumerate(layer_specs)
    ]

    split = int(fields["split"])
    if not 0 <= split < len(layers):
        raise FormatError(f"{path}: split {split} outside layer count {len(layers)}")
    input_shape = _parse_ints(fields["input-shape"], "input-shape")
    num_classes = int(fields["num-classes"])
    class_names = fields["class-names"].split(",") if "class-names" in fields else None
    if class_names is not None and len(class_names) != num_classes:
        raise FormatError(f"{path}: {len(class_names)} class names for {num_classes} classes")

    shape = input_shape
    for i, layer in enumerate(layers[:split]):
        try:
            shape = graph.layer_output_shape(layer, shape)
        except ValueError as e:
            raise FormatError(f"{path}: frontend layer {i}: {e}") from None
    try:
        return graph.ModelGraph(
            frontend=layers[:split],
            head=layers[split:],
            input_shape=input_shape,
            activation_shape=shape,
            num_classes=num_classes,
            class_names=class_names,
        )
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None


# ----------------------------------------------------------------- sample

def save_sample(path, sample, ref_logits=None):
    """Serialize an EvalSample (image, class, optional bbox, ref logits)."""
    writer = _BlobWriter()
    writer.add("image", sample.image)
    if ref_logits is not None:
        writer.add("ref-logits", ref_logits)
    lines = [
        f"{SAMPLE_MAGIC} {FORMAT_VERSION}",
        f"target-class: {sample.class_index}",
    ]
    if sample.bbox is not None:
        b = sample.bbox
        lines.append(f"bbox: {b.top},{b.left},{b.bottom},{b.right}")
    lines += writer.header_lines()
    with open(path, "wb") as f:
        f.write("\n".join(lines).encode("ascii") + b"\n" + _END + writer.blob())


def load_sample(path):
    """Read a sample file: returns (EvalSample, ref_logits or None)."""
    with open(path, "rb") as f:
        data = f.read()
    lines, blob = _split_container(data, SAMPLE_MAGIC, path)
    fields = {}
    tensors = {}
    for line in lines:
        key, rest = _kv(line, path)
        if key == "tensor":
            rec = _parse_tensor_line(rest)
            tensors[rec.name] = _read_tensor(rec, blob, path)
        elif key in ("target-class", "bbox"):
            fields[key] = rest
        else:
            raise FormatError(f"{path}: unknown header field {key!r}")
    if "target-class" not in fields:
        raise FormatError(f"{path}: missing required field 'target-class'")
    if "image" not in tensors:
        raise FormatError(f"{path}: missing image tensor")
    bbox = None
    if "bbox" in fields:
        t, l, b, r = _parse_ints(fields["bbox"], "bbox")
        bbox = BoundingBox(top=t, left=l, bottom=b, right=r)
    try:
        sample = EvalSample(image=tensors["image"], class_index=int(fields["target-class"]), bbox=bbox)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None
    return sample, tensors.get("ref-logits")
