"""Independent reference implementations used as test oracles.

Everything here is written with plain float64 loops, deliberately sharing
no code with the package kernels, so agreement is meaningful evidence.
"""

import numpy as np

from camkit import LayerSpec, ModelGraph


def naive_conv2d(x, w, b, stride, padding):
    """Quad-loop float64 cross-correlation."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c_in, h, wd = x.shape
    c_out, _, kh, kw = w.shape
    xp = np.zeros((c_in, h + 2 * padding, wd + 2 * padding))
    xp[:, padding:padding + h, padding:padding + wd] = x
    h_out = (h + 2 * padding - kh) // stride + 1
    w_out = (wd + 2 * padding - kw) // stride + 1
    y = np.zeros((c_out, h_out, w_out))
    for o in range(c_out):
        for i in range(h_out):
            for j in range(w_out):
                s = 0.0
                for c in range(c_in):
                    for u in range(kh):
                        for v in range(kw):
                            s += xp[c, i * stride + u, j * stride + v] * w[o, c, u, v]
                y[o, i, j] = s + b[o]
    return y


def naive_layers(layers, x, record=None):
    """Float64 forward through a layer chain; optionally records kink state.

    ``record`` (a dict) collects 'relu_signs' and 'pool_args' lists so a
    caller can tell whether two nearby inputs straddle a ReLU or maxpool
    kink.
    """
    x = np.asarray(x, dtype=np.float64)
    for layer in layers:
        if layer.kind == "conv2d":
            x = naive_conv2d(x, layer.weight, layer.bias, layer.stride, layer.padding)
        elif layer.kind == "relu":
            if record is not None:
                record.setdefault("relu_signs", []).append(x > 0)
            x = np.maximum(x, 0.0)
        elif layer.kind == "maxpool":
            c, h, w = x.shape
            h_out = (h - layer.window) // layer.stride + 1
            w_out = (w - layer.window) // layer.stride + 1
            y = np.zeros((c, h_out, w_out))
            args = np.zeros((c, h_out, w_out), dtype=np.int64)
            for ch in range(c):
                for i in range(h_out):
                    for j in range(w_out):
                        best, barg = -np.inf, -1
                        for u in range(layer.window):
                            for v in range(layer.window):
                                ii = i * layer.stride + u
                                jj = j * layer.stride + v
                                if x[ch, ii, jj] > best:
                                    best, barg = x[ch, ii, jj], ii * w + jj
                        y[ch, i, j] = best
                        args[ch, i, j] = barg
            if record is not None:
                record.setdefault("pool_args", []).append(args)
            x = y
        elif layer.kind == "avgpool":
            c, h, w = x.shape
            h_out = (h - layer.window) // layer.stride + 1
            w_out = (w - layer.window) // layer.stride + 1
            y = np.zeros((c, h_out, w_out))
            for ch in range(c):
                for i in range(h_out):
                    for j in range(w_out):
                        y[ch, i, j] = x[
                            ch,
                            i * layer.stride:i * layer.stride + layer.window,
                            j * layer.stride:j * layer.stride + layer.window,
                        ].mean()
            x = y
        elif layer.kind == "global-avgpool":
            x = x.mean(axis=(1, 2)).reshape(-1, 1, 1)
        elif layer.kind == "flatten":
            x = x.reshape(-1)
        elif layer.kind == "dense":
            x = np.asarray(layer.weight, np.float64) @ x.reshape(-1) + np.asarray(layer.bias, np.float64)
        else:
            raise AssertionError(layer.kind)
    return x


def naive_head_forward(model, a, record=None):
    return naive_layers(model.head, a, record)


def naive_target_prob(model, image, class_index):
    """Float64 target softmax probability through the whole model."""
    logits = naive_layers(model.head, naive_layers(model.frontend, image))
    e = np.exp(logits - logits.max())
    return float(e[class_index] / e.sum())


def hand_bilinear(m, th, tw):
    """Scalar-loop align-corners bilinear resize."""
    m = np.asarray(m, dtype=np.float64)
    sh, sw = m.shape
    out = np.zeros((th, tw))
    for i in range(th):
        for j in range(tw):
            y = 0.0 if (th == 1 or sh == 1) else i * (sh - 1) / (th - 1)
            x = 0.0 if (tw == 1 or sw == 1) else j * (sw - 1) / (tw - 1)
            y0, x0 = min(int(y), sh - 1), min(int(x), sw - 1)
            y1, x1 = min(y0 + 1, sh - 1), min(x0 + 1, sw - 1)
            fy, fx = y - y0, x - x0
            out[i, j] = (
                m[y0, x0] * (1 - fy) * (1 - fx)
                + m[y0, x1] * (1 - fy) * fx
                + m[y1, x0] * fy * (1 - fx)
                + m[y1, x1] * fy * fx
            )
    return out


def hand_minmax(m):
    m = np.asarray(m, dtype=np.float64)
    lo, hi = m.min(), m.max()
    if hi == lo:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)


def oracle_score_cam(model, image, a, class_index):
    """Direct-loop score-cam re-evaluation (probabilities, channel softmax)."""
    image = np.asarray(image, dtype=np.float64)
    base = naive_target_prob(model, np.zeros_like(image), class_index)
    scores = np.zeros(a.shape[0])
    for k in range(a.shape[0]):
        mask = hand_minmax(hand_bilinear(np.asarray(a[k], np.float32), image.shape[1], image.shape[2]))
        scores[k] = naive_target_prob(model, image * mask[None], class_index) - base
    e = np.exp(scores - scores.max())
    return e / e.sum()


def fd_head_gradient(model, a, class_index, k, i, j, step=1e-3):
    """Central finite difference for one activation neuron.

    Returns (derivative estimate, kink_adjacent) where kink_adjacent is
    True when the two probe points disagree on any ReLU sign or pool argmax.
    """
    ap = np.asarray(a, dtype=np.float64).copy()
    am = ap.copy()
    ap[k, i, j] += step
    am[k, i, j] -= step
    rec_p, rec_m = {}, {}
    fp = naive_head_forward(model, ap, rec_p)[class_index]
    fm = naive_head_forward(model, am, rec_m)[class_index]
    kink = False
    for key in ("relu_signs", "pool_args"):
        for sp, sm in zip(rec_p.get(key, []), rec_m.get(key, [])):
            if not np.array_equal(sp, sm):
                kink = True
    return (fp - fm) / (2.0 * step), kink


def head_only_model(head, activation_shape, num_classes):
    """A model with an empty frontend, for direct head/oracle games."""
    return ModelGraph(
        frontend=[],
        head=head,
        input_shape=activation_shape,
        activation_shape=activation_shape,
        num_classes=num_classes,
    )


def linear_game_model():
    """Two 1x1 maps; F(a) = [3*a1 + 5*a2, 0]."""
    w = np.array([[3.0, 5.0], [0.0, 0.0]], dtype=np.float32)
    head = [LayerSpec("flatten"), LayerSpec("dense", weight=w, bias=np.zeros(2, np.float32))]
    return head_only_model(head, (2, 1, 1), 2)


def and_game_model():
    """Two 1x1 maps; F(a) = relu(a1 + a2 - 1): the AND game on unit maps."""
    head = [
        LayerSpec("flatten"),
        LayerSpec("dense", weight=np.array([[1.0, 1.0]], np.float32), bias=np.array([-1.0], np.float32)),
        LayerSpec("relu"),
        LayerSpec("dense", weight=np.array([[1.0]], np.float32), bias=np.zeros(1, np.float32)),
    ]
    return head_only_model(head, (2, 1, 1), 1)
