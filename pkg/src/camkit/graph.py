"""Executable model graphs.

A model is an ordered layer list split at the attribution layer: the
*frontend* maps an input image to a stack of activation maps, the *head*
maps that stack to class logits.  The head ends at the logits; softmax is
applied outside the graph.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend, ops

LAYER_KINDS = ("conv2d", "relu", "maxpool", "avgpool", "global-avgpool", "flatten", "dense")


@dataclass
class LayerSpec:
    """One layer: ``kind`` plus the parameters that kind needs.

    conv2d uses weight (C_out, C_in, kH, kW), bias, stride, padding;
    dense uses weight (m, n) and bias; the pooling kinds use window and
    stride.  relu / flatten / global-avgpool carry no parameters.
    """

    kind: str
    weight: np.ndarray = None
    bias: np.ndarray = None
    stride: int = 1
    padding: int = 0
    window: int = 2

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}; expected one of {LAYER_KINDS}")
        if self.kind in ("conv2d", "dense"):
            if self.weight is None or self.bias is None:
                raise ValueError(f"{self.kind} layer requires weight and bias")
            self.weight = ops.as_tensor(self.weight)
            self.bias = ops.as_tensor(self.bias)
            want = 4 if self.kind == "conv2d" else 2
            if self.weight.ndim != want:
                raise ValueError(f"{self.kind} weight must be {want}-D, got shape {self.weight.shape}")
            if self.bias.shape != (self.weight.shape[0],):
                raise ValueError(
                    f"{self.kind} bias shape {self.bias.shape} does not match weight {self.weight.shape}"
                )


def layer_forward(layer, x):
    if layer.kind == "conv2d":
        return ops.conv2d(x, layer.weight, layer.bias, layer.stride, layer.padding)
    if layer.kind == "relu":
        return ops.relu(x)
    if layer.kind == "maxpool":
        return ops.pool(x, "max", layer.window, layer.stride)
    if layer.kind == "avgpool":
        return ops.pool(x, "avg", layer.window, layer.stride)
    if layer.kind == "global-avgpool":
        return ops.pool(x, "global-avg")
    if layer.kind == "flatten":
        return np.ascontiguousarray(x).reshape(-1)
    # dense flattens implicitly so a (C, 1, 1) pooled stack can feed it
    v = np.ascontiguousarray(x).reshape(-1)
    return ops.dense(v, layer.weight, layer.bias)


def layer_output_shape(layer, in_shape):
    """Shape inference mirroring layer_forward, for load-time validation."""
    if layer.kind == "conv2d":
        c_out, c_in, kh, kw = layer.weight.shape
        if len(in_shape) != 3 or in_shape[0] != c_in:
            raise ValueError(f"conv2d expects ({c_in}, H, W) input, got {in_shape}")
        h = in_shape[1] + 2 * layer.padding - kh
        w = in_shape[2] + 2 * layer.padding - kw
        if h < 0 or w < 0 or h % layer.stride or w % layer.stride:
            raise ValueError(f"conv2d output size is not exact for input {in_shape}")
        return (c_out, h // layer.stride + 1, w // layer.stride + 1)
    if layer.kind in ("relu",):
        return tuple(in_shape)
    if layer.kind in ("maxpool", "avgpool"):
        if len(in_shape) != 3:
            raise ValueError(f"{layer.kind} expects a (C, H, W) input, got {in_shape}")
        h = in_shape[1] - layer.window
        w = in_shape[2] - layer.window
        if h < 0 or w < 0 or h % layer.stride or w % layer.stride:
            raise ValueError(f"{layer.kind} output size is not exact for input {in_shape}")
        return (in_shape[0], h // layer.stride + 1, w // layer.stride + 1)
    if layer.kind == "global-avgpool":
        if len(in_shape) != 3:
            raise ValueError(f"global-avgpool expects a (C, H, W) input, got {in_shape}")
        return (in_shape[0], 1, 1)
    if layer.kind == "flatten":
        return (int(np.prod(in_shape)),)
    m, n = layer.weight.shape
    if int(np.prod(in_shape)) != n:
        raise ValueError(f"dense expects {n} inputs, got shape {in_shape}")
    return (m,)


@dataclass
class ModelGraph:
    """Frontend + head layer chains with their declared shapes."""

    frontend: list
    head: list
    input_shape: tuple
    activation_shape: tuple
    num_classes: int
    class_names: list = None

    def __post_init__(self):
        self.input_shape = tuple(int(d) for d in self.input_shape)
        self.activation_shape = tuple(int(d) for d in self.activation_shape)
        shape = self.input_shape
        for i, layer in enumerate(self.frontend):
            try:
                shape = layer_output_shape(layer, shape)
            except ValueError as e:
                raise ValueError(f"frontend layer {i} ({layer.kind}): {e}") from None
        if shape != self.activation_shape:
            raise ValueError(f"frontend produces {shape}, declared activation shape is {self.activation_shape}")
        for i, layer in enumerate(self.head):
            try:
                shape = layer_output_shape(layer, shape)
            except ValueError as e:
                raise ValueError(f"head layer {i} ({layer.kind}): {e}") from None
        if shape != (self.num_classes,):
            raise ValueError(f"head produces {shape}, expected ({self.num_classes},) logits")

    @property
    def num_maps(self):
        return self.activation_shape[0]


def run_layers(layers, x):
    for layer in layers:
        x = layer_forward(layer, x)
    return x


def forward_full(model, image):
    """Run the whole graph: (activation stack, logits, softmax probs)."""
    image = ops.as_tensor(image)
    if image.shape != model.input_shape:
        raise ValueError(f"input shape {image.shape} does not match model input {model.input_shape}")
    a = run_layers(model.frontend, image)
    logits = run_layers(model.head, a)
    return a, logits, ops.softmax(logits)


def forward_head(model, a, class_index):
    """Target-class logit of the head applied to an activation stack."""
    a = ops.as_tensor(a)
    if a.shape != model.activation_shape:
        raise ValueError(f"activation shape {a.shape} does not match model {model.activation_shape}")
    if not 0 <= class_index < model.num_classes:
        raise ValueError(f"class {class_index} out of range [0, {model.num_classes})")
    return float(run_layers(model.head, a)[class_index])


def mask_apply(a, mask):
    """Zero out whole channels: channel k survives iff mask[k] == 1."""
    a = ops.as_tensor(a)
    mask = np.asarray(mask)
    if mask.ndim != 1 or mask.shape[0] != a.shape[0]:
        raise ValueError(f"mask length {mask.shape} does not match {a.shape[0]} channels")
    return a * mask.astype(np.float32)[:, None, None]


@dataclass
class HeadTrace:
    """Cached per-layer head state for one (model, activation stack) pair.

    ``inputs[i]`` is what head layer i consumed; ``ref_inputs`` is the same
    trace for the all-zero stack (the absent-feature reference).  ``pool_args``
    holds the maxpool argmax routing of the original forward.
    """

    model: ModelGraph
    activations: np.ndarray
    inputs: list
    logits: np.ndarray
    ref_inputs: list
    ref_logits: np.ndarray
    pool_args: dict = field(default_factory=dict)


def _traced_forward(model, x):
    inputs = []
    pool_args = {}
    for i, layer in enumerate(model.head):
        inputs.append(x)
        if layer.kind == "maxpool":
            y, arg = backend.maxpool_forward(ops.as_tensor(x), layer.window, layer.stride)
            pool_args[i] = arg
            x = y
        else:
            x = layer_forward(layer, x)
    return inputs, x, pool_args


def build_head_trace(model, a):
    """Forward the head once for ``a`` and once for the zero stack."""
    a = ops.as_tensor(a)
    if a.shape != model.activation_shape:
        raise ValueError(f"activation shape {a.shape} does not match model {model.activation_shape}")
    inputs, logits, pool_args = _traced_forward(model, a)
    ref_inputs, ref_logits, _ = _traced_forward(model, np.zeros_like(a))
    return HeadTrace(
        model=model,
        activations=a,
        inputs=inputs,
        logits=logits,
        ref_inputs=ref_inputs,
        ref_logits=ref_logits,
        pool_args=pool_args,
    )
