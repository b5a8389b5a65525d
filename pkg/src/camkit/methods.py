"""Coefficient methods and explanation-map assembly.

Every method reduces to the same contract: given a model, an input and a
target class, produce one scalar weight per activation map.  The weighted,
ReLU-rectified sum of the maps is the raw explanation; upsampling to image
space plus min-max normalization turns it into a displayable mask.

Gradient and DeepLIFT methods score the pre-softmax logit of the target
class.  Score-CAM follows its source definition and scores softmax
probabilities with a channel-wise softmax over the raw scores; both choices
are exposed as switches, so cross-method comparisons stay interpretable.
"""

from dataclasses import dataclass

import numpy as np

from . import graph, ops, propagation


@dataclass
class CoefficientVector:
    """Per-channel importances produced by one attribution method."""

    values: np.ndarray
    method: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError(f"coefficients must be a vector, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"{self.method}: coefficients contain non-finite entries")


@dataclass
class ExplanationMap:
    """Raw (activation-space) and normalized (image-space) saliency."""

    raw: np.ndarray
    normalized: np.ndarray


def assemble_map(a, coeffs, target):
    """ReLU(sum_k alpha_k * A_k), upsampled to ``target`` and min-max scaled."""
    a = ops.as_tensor(a)
    if coeffs.values.shape[0] != a.shape[0]:
        raise ValueError(f"{coeffs.values.shape[0]} coefficients for {a.shape[0]} activation maps")
    combined = np.tensordot(coeffs.values, a.astype(np.float64), axes=(0, 0))
    raw = np.maximum(combined, 0.0).astype(np.float32)
    normalized = ops.minmax_normalize(ops.upsample_bilinear(raw, target))
    return ExplanationMap(raw=raw, normalized=normalized)


def grad_cam(model, trace, a, class_index):
    """Channel weight = mean gradient of the target logit over the map."""
    g = propagation.backward_head_gradient(model, trace, class_index)
    return CoefficientVector(g.astype(np.float64).mean(axis=(1, 2)), "grad-cam")


def grad_cam_pp(model, trace, a, class_index):
    """Positive-gradient weighting with the second/third-order closed form.

    Neuron weight w = g^2 / (2 g^2 + sum(A) * g^3 channel term); weights with
    a denominator below 1e-12 in magnitude drop to zero so dead channels do
    not blow up the division.
    """
    a = ops.as_tensor(a)
    g = propagation.backward_head_gradient(model, trace, class_index).astype(np.float64)
    g2 = g * g
    g3 = g2 * g
    denom = 2.0 * g2 + np.sum(a.astype(np.float64) * g3, axis=(1, 2), keepdims=True)
    w = np.where(np.abs(denom) > 1e-12, g2 / np.where(denom == 0, 1.0, denom), 0.0)
    alpha = np.sum(w * np.maximum(g, 0.0), axis=(1, 2))
    return CoefficientVector(alpha, "grad-cam++")


def xgrad_cam(model, trace, a, class_index):
    """Activation-normalized gradient sum per channel.

    alpha_k = sum_ij (A_kij / sum_ab A_kab) * g_kij; channels whose absolute
    activation mass is below 1e-12 (or whose plain sum cancels to below
    1e-12) are scored zero.
    """
    a = ops.as_tensor(a).astype(np.float64)
    g = propagation.backward_head_gradient(model, trace, class_index).astype(np.float64)
    sums = a.sum(axis=(1, 2))
    mass = np.abs(a).sum(axis=(1, 2))
    live = (mass >= 1e-12) & (np.abs(sums) >= 1e-12)
    weighted = (a * g).sum(axis=(1, 2))
    alpha = np.where(live, weighted / np.where(live, sums, 1.0), 0.0)
    return CoefficientVector(alpha, "xgrad-cam")


def score_cam(model, image, a, class_index, baseline=None, use_probabilities=True, channel_softmax=True):
    """Score each channel by masking the input with its normalized map.

    Needs one full forward pass per channel plus one for the baseline
    (all-zeros by default).  Masked scores are target softmax probabilities
    by default; the raw per-channel scores then pass through a softmax.
    """
    image = ops.as_tensor(image)
    a = ops.as_tensor(a)
    if image.shape != model.input_shape:
        raise ValueError(f"input shape {image.shape} does not match model input {model.input_shape}")
    if baseline is None:
        baseline = np.zeros_like(image)
    baseline = ops.as_tensor(baseline)
    if baseline.shape != image.shape:
        raise ValueError(f"baseline shape {baseline.shape} does not match image {image.shape}")
    if not 0 <= class_index < model.num_classes:
        raise ValueError(f"class {class_index} out of range [0, {model.num_classes})")

    def target_score(x):
        _, logits, probs = graph.forward_full(model, x)
        return float(probs[class_index]) if use_probabilities else float(logits[class_index])

    base = target_score(baseline)
    target_hw = image.shape[1:]
    scores = np.empty(a.shape[0], dtype=np.float64)
    for k in range(a.shape[0]):
        mask = ops.minmax_normalize(ops.upsample_bilinear(a[k], target_hw))
        scores[k] = target_score(ops.mask_image(image, mask)) - base
    if channel_softmax:
        scores = ops.softmax(scores.astype(np.float32)).astype(np.float64)
    return CoefficientVector(scores, "score-cam")


def ablation_cam(model, a, class_index):
    """Fractional logit drop when one channel is removed.

    alpha_k = (F_c(A) - F_c(A without channel k)) / F_c(A); undefined when
    the full-stack logit is zero, which is rejected with a diagnostic.
    """
    a = ops.as_tensor(a)
    full = graph.forward_head(model, a, class_index)
    if full == 0.0:
        raise ValueError(
            f"ablation weights are undefined: full-stack logit for class {class_index} is exactly zero"
        )
    n = a.shape[0]
    alpha = np.empty(n, dtype=np.float64)
    mask = np.ones(n, dtype=np.float32)
    for k in range(n):
        mask[k] = 0.0
        dropped = graph.forward_head(model, graph.mask_apply(a, mask), class_index)
        alpha[k] = (full - dropped) / full
        mask[k] = 1.0
    return CoefficientVector(alpha, "ablation-cam")


def lift_cam(model, trace, a, class_index):
    """Channel weight = summed Rescale contribution scores of its neurons.

    One backward pass; the weights sum to logit_c(A) - logit_c(0).
    """
    scores = propagation.deeplift_head(model, trace, class_index)
    return CoefficientVector(scores.astype(np.float64).sum(axis=(1, 2)), "lift-cam")
