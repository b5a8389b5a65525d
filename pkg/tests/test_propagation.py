"""Backward traversals: gradient vs finite differences, Rescale properties."""

import numpy as np
import numpy.testing as npt
import pytest

from camkit import (
    LayerSpec,
    backward_head_gradient,
    build_head_trace,
    deeplift_head,
    forward_head,
    generate_synthetic_model,
    head_delta,
)

import helpers

f32 = np.float32


def random_stack(model, seed, positive=False):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(model.activation_shape)
    if positive:
        a = np.abs(a) + 0.1
    return a.astype(f32)


class TestGradient:
    def test_gap_identity_head_uniform(self):
        # head = global-avgpool -> flatten -> identity dense: every entry 1/(H*W)
        model = helpers.head_only_model(
            [LayerSpec("global-avgpool"), LayerSpec("flatten"),
             LayerSpec("dense", weight=np.eye(3, dtype=f32), bias=np.zeros(3, f32))],
            (3, 4, 4),
            3,
        )
        a = random_stack(model, 0)
        g = backward_head_gradient(model, build_head_trace(model, a), 1)
        want = np.zeros((3, 4, 4), f32)
        want[1] = 1.0 / 16.0
        npt.assert_allclose(g, want, atol=1e-7)

    def test_linear_head_gradient_is_weights(self):
        model = helpers.linear_game_model()
        for seed in (1, 2):
            a = random_stack(model, seed)
            g = backward_head_gradient(model, build_head_trace(model, a), 0)
            npt.assert_allclose(g.reshape(-1), [3.0, 5.0], atol=1e-7)

    @pytest.mark.parametrize("head", ["linear", "relu-mlp", "conv-relu", "gap-linear"])
    def test_matches_finite_differences(self, head):
        model = generate_synthetic_model(head_kind=head, seed=21)
        a = random_stack(model, 22, positive=True)
        trace = build_head_trace(model, a)
        g = backward_head_gradient(model, trace, 2)
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(40):
            k, i, j = (int(rng.integers(0, s)) for s in model.activation_shape)
            fd, kink = helpers.fd_head_gradient(model, a, 2, k, i, j)
            if kink:
                continue
            checked += 1
            scale = max(abs(fd), abs(float(g[k, i, j])), 1e-6)
            assert abs(fd - float(g[k, i, j])) <= 1e-4 * scale + 1e-7, (head, k, i, j)
        assert checked >= 20

    def test_trace_model_mismatch_rejected(self):
        m1 = generate_synthetic_model(seed=1)
        m2 = generate_synthetic_model(seed=2)
        trace = build_head_trace(m1, np.zeros(m1.activation_shape, f32))
        with pytest.raises(ValueError, match="different model"):
            backward_head_gradient(m2, trace, 0)

    def test_class_out_of_range_rejected(self):
        model = generate_synthetic_model(seed=1)
        trace = build_head_trace(model, np.zeros(model.activation_shape, f32))
        with pytest.raises(ValueError, match="out of range"):
            backward_head_gradient(model, trace, 99)


class TestDeepLift:
    def test_saturation_hand_case(self):
        # y = relu(x - 5) at x = 10, reference 0: delta out = 5, delta in = 10,
        # multiplier 0.5, contribution 0.5 * 10 = 5 (gradient x input gives 10)
        model = helpers.head_only_model(
            [
                LayerSpec("flatten"),
                LayerSpec("dense", weight=np.ones((1, 1), f32), bias=np.array([-5.0], f32)),
                LayerSpec("relu"),
                LayerSpec("dense", weight=np.ones((1, 1), f32), bias=np.zeros(1, f32)),
            ],
            (1, 1, 1),
            1,
        )
        a = np.full((1, 1, 1), 10.0, f32)
        trace = build_head_trace(model, a)
        scores = deeplift_head(model, trace, 0)
        assert float(scores[0, 0, 0]) == pytest.approx(5.0, abs=1e-5)
        g = backward_head_gradient(model, trace, 0)
        assert float(g[0, 0, 0]) * 10.0 == pytest.approx(10.0, abs=1e-5)

    def test_dead_relu_contribution_zero(self):
        # relu input stays at -2 vs reference 0: delta output 0 -> contribution 0
        model = helpers.head_only_model(
            [
                LayerSpec("flatten"),
                LayerSpec("dense", weight=np.ones((1, 1), f32), bias=np.array([-3.0], f32)),
                LayerSpec("relu"),
                LayerSpec("dense", weight=np.ones((1, 1), f32), bias=np.zeros(1, f32)),
            ],
            (1, 1, 1),
            1,
        )
        a = np.full((1, 1, 1), 1.0, f32)  # dense gives 1 - 3 = -2, ref gives -3
        scores = deeplift_head(model, build_head_trace(model, a), 0)
        assert float(scores[0, 0, 0]) == pytest.approx(0.0, abs=1e-7)

    def test_linear_head_equals_gradient_times_input(self):
        model = generate_synthetic_model(head_kind="linear", seed=31)
        a = random_stack(model, 32)
        trace = build_head_trace(model, a)
        scores = deeplift_head(model, trace, 1)
        g = backward_head_gradient(model, trace, 1)
        npt.assert_allclose(scores, g * a, atol=1e-6)

    @pytest.mark.parametrize("head", ["linear", "relu-mlp", "conv-relu", "gap-linear"])
    def test_summation_to_delta(self, head):
        for seed in range(5):
            model = generate_synthetic_model(head_kind=head, num_classes=4, seed=40 + seed)
            a = random_stack(model, 50 + seed, positive=True)
            trace = build_head_trace(model, a)
            for c in range(4):
                scores = deeplift_head(model, trace, c)
                total = float(scores.astype(np.float64).sum())
                delta = head_delta(trace, c)
                assert abs(total - delta) <= 1e-4 * abs(delta) + 1e-5, (head, seed, c)

    def test_zero_stack_gives_zero_scores(self):
        model = generate_synthetic_model(head_kind="relu-mlp", seed=33)
        a = np.zeros(model.activation_shape, f32)
        scores = deeplift_head(model, build_head_trace(model, a), 0)
        npt.assert_array_equal(scores, np.zeros_like(scores))

    def test_missing_reference_rejected(self):
        model = generate_synthetic_model(seed=1)
        trace = build_head_trace(model, np.zeros(model.activation_shape, f32))
        trace.ref_inputs = None
        with pytest.raises(ValueError, match="reference"):
            deeplift_head(model, trace, 0)

    def test_maxpool_nonconstant_reference_keeps_identity(self):
        # a padded conv inside the head makes the zero-stack reference map
        # non-constant inside pool windows; summation-to-delta must survive
        rng = np.random.default_rng(60)
        w = rng.standard_normal((4, 4, 3, 3)).astype(f32)
        b = (rng.standard_normal(4) * 0.5).astype(f32)
        head = [
            LayerSpec("conv2d", weight=w, bias=b, padding=1),
            LayerSpec("relu"),
            LayerSpec("maxpool", window=2, stride=2),
            LayerSpec("flatten"),
            LayerSpec("dense", weight=rng.standard_normal((3, 16)).astype(f32), bias=np.zeros(3, f32)),
        ]
        model = helpers.head_only_model(head, (4, 4, 4), 3)
        a = random_stack(model, 61, positive=True)
        trace = build_head_trace(model, a)
        ref = trace.ref_inputs[2]  # maxpool input under the zero stack
        assert float(ref.max() - ref.min()) > 1e-3  # genuinely non-constant
        for c in range(3):
            scores = deeplift_head(model, trace, c)
            total = float(scores.astype(np.float64).sum())
            delta = head_delta(trace, c)
            assert abs(total - delta) <= 1e-4 * abs(delta) + 1e-5
