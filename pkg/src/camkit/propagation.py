"""Backward traversals through the head.

Both traversals walk the head layers in reverse, carrying a per-neuron
multiplier tensor seeded with the target-class one-hot at the logits:

* gradient rule       -- plain chain rule; this is d(logit_c)/d(activation).
* DeepLIFT Rescale    -- linear layers reuse their weights as multipliers,
  nonlinearities use delta-output / delta-input against the zero-stack
  reference trace, falling back to the local gradient when the input delta
  is below RESCALE_EPS.

Maxpool routes to the argmax of the *original* forward (ties already broken
toward the lowest flat index by the forward kernel).  Under Rescale the
routed multiplier is rescaled by delta-output / delta-input at that argmax,
which keeps the summation-to-delta identity exact even when the reference
map is not flat inside a window.
"""

import numpy as np

from . import backend, ops

RESCALE_EPS = 1e-7


def _check_trace(model, trace, class_index):
    if trace.model is not model:
        raise ValueError("trace was built for a different model")
    if trace.ref_inputs is None or trace.ref_logits is None:
        raise ValueError("trace is missing the zero-stack reference activations")
    if not 0 <= class_index < model.num_classes:
        raise ValueError(f"class {class_index} out of range [0, {model.num_classes})")


def _walk_back(model, trace, class_index, rescale):
    head = model.head
    outputs = [trace.inputs[i + 1] for i in range(len(head) - 1)] + [trace.logits]
    ref_outputs = [trace.ref_inputs[i + 1] for i in range(len(head) - 1)] + [trace.ref_logits]

    g = np.zeros(model.num_classes, dtype=np.float64)
    g[class_index] = 1.0
    for i in reversed(range(len(head))):
        layer = head[i]
        x = trace.inputs[i]
        if layer.kind == "dense":
            g = (layer.weight.astype(np.float64).T @ g).reshape(x.shape)
        elif layer.kind == "flatten":
            g = g.reshape(x.shape)
        elif layer.kind == "conv2d":
            gx = backend.conv2d_input_grad(
                g.astype(np.float32), layer.weight, layer.stride, layer.padding, x.shape[1], x.shape[2]
            )
            g = gx.astype(np.float64)
        elif layer.kind == "relu":
            if rescale:
                dx = x.astype(np.float64) - trace.ref_inputs[i].astype(np.float64)
                dy = outputs[i].astype(np.float64) - ref_outputs[i].astype(np.float64)
                m = np.where(np.abs(dx) > RESCALE_EPS, dy / np.where(dx == 0, 1.0, dx), x > 0)
                g = g * m
            else:
                g = g * (x > 0)
        elif layer.kind == "maxpool":
            arg = trace.pool_args[i]
            routed = g
            if rescale:
                c = x.shape[0]
                xa = np.take_along_axis(x.reshape(c, -1), arg.reshape(c, -1), axis=1).reshape(arg.shape)
                ra = np.take_along_axis(
                    trace.ref_inputs[i].reshape(c, -1), arg.reshape(c, -1), axis=1
                ).reshape(arg.shape)
                dx = xa.astype(np.float64) - ra.astype(np.float64)
                dy = outputs[i].astype(np.float64) - ref_outputs[i].astype(np.float64)
                m = np.where(np.abs(dx) > RESCALE_EPS, dy / np.where(dx == 0, 1.0, dx), 1.0)
                routed = g * m
            gx = backend.maxpool_scatter(routed.astype(np.float32), arg, x.shape[1], x.shape[2])
            g = gx.astype(np.float64)
        elif layer.kind == "avgpool":
            gx = backend.avgpool_scatter(
                g.astype(np.float32), layer.window, layer.stride, x.shape[1], x.shape[2]
            )
            g = gx.astype(np.float64)
        elif layer.kind == "global-avgpool":
            c, h, w = x.shape
            g = np.broadcast_to(g.reshape(c, 1, 1) / (h * w), (c, h, w)).copy()
        else:  # pragma: no cover - LayerSpec rejects unknown kinds at build
            raise ValueError(f"unknown layer kind {layer.kind!r}")
    return g


def backward_head_gradient(model, trace, class_index):
    """d(logit of class_index) / d(activation neuron), as an (N, H, W) tensor.

    ReLU passes gradient where its input is strictly positive; maxpool
    routes to the first-encountered argmax.
    """
    _check_trace(model, trace, class_index)
    return _walk_back(model, trace, class_index, rescale=False).astype(np.float32)


def deeplift_head(model, trace, class_index):
    """Per-neuron Rescale contribution scores for the target logit.

    Returned scores sum (over all activation neurons) to
    logit_c(A) - logit_c(0), the summation-to-delta identity.
    """
    _check_trace(model, trace, class_index)
    multipliers = _walk_back(model, trace, class_index, rescale=True)
    # reference stack is all-zero, so delta-input is the activation itself
    return (multipliers * trace.activations.astype(np.float64)).astype(np.float32)


def head_delta(trace, class_index):
    """logit_c(A) - logit_c(zero stack), the target the scores must sum to."""
    return float(trace.logits[class_index]) - float(trace.ref_logits[class_index])
