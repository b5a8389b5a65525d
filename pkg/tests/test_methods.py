"""Attribution methods: hand cases, closed forms, and brute-force oracles."""

import numpy as np
import numpy.testing as npt
import pytest

from camkit import (
    CoefficientVector,
    LayerSpec,
    ablation_cam,
    assemble_map,
    build_head_trace,
    exact_shapley,
    forward_head,
    generate_synthetic_model,
    generate_synthetic_sample,
    grad_cam,
    grad_cam_pp,
    lift_cam,
    run_layers,
    score_cam,
    xgrad_cam,
)

import helpers

f32 = np.float32


def one_channel_head(weights, bias=None):
    """flatten -> dense head over a single (1, H, W) map."""
    w = np.asarray(weights, f32).reshape(1, -1)
    b = np.zeros(1, f32) if bias is None else np.asarray(bias, f32)
    return [LayerSpec("flatten"), LayerSpec("dense", weight=w, bias=b)]


class TestAssembleMap:
    def test_relu_clips_negative_sum(self):
        a = np.array([[[1.0]], [[2.0]]], f32)
        emap = assemble_map(a, CoefficientVector([1.0, -1.0], "t"), (1, 1))
        npt.assert_array_equal(emap.raw, np.zeros((1, 1), f32))

    def test_one_hot_recovers_map(self):
        a = np.abs(np.random.default_rng(1).standard_normal((3, 2, 2))).astype(f32)
        emap = assemble_map(a, CoefficientVector([0.0, 1.0, 0.0], "t"), (2, 2))
        npt.assert_allclose(emap.raw, a[1], atol=1e-6)

    def test_positive_scaling_leaves_normalized_unchanged(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((4, 3, 3)).astype(f32)
        alpha = rng.standard_normal(4)
        m1 = assemble_map(a, CoefficientVector(alpha, "t"), (6, 6))
        m2 = assemble_map(a, CoefficientVector(alpha * 17.0, "t"), (6, 6))
        npt.assert_allclose(m1.normalized, m2.normalized, atol=1e-6)
        npt.assert_allclose(m2.raw, m1.raw * 17.0, rtol=1e-5)

    def test_invariants(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 3, 3)).astype(f32)
        emap = assemble_map(a, CoefficientVector(rng.standard_normal(4), "t"), (7, 5))
        assert float(emap.raw.min()) >= 0.0
        assert float(emap.normalized.min()) >= 0.0 and float(emap.normalized.max()) <= 1.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="coefficients for"):
            assemble_map(np.ones((3, 2, 2), f32), CoefficientVector([1.0, 2.0], "t"), (2, 2))


class TestGradCam:
    def test_gap_identity_head(self):
        model = helpers.head_only_model(
            [LayerSpec("global-avgpool"), LayerSpec("flatten"),
             LayerSpec("dense", weight=np.eye(2, dtype=f32), bias=np.zeros(2, f32))],
            (2, 4, 4),
            2,
        )
        a = np.random.default_rng(4).standard_normal((2, 4, 4)).astype(f32)
        alpha = grad_cam(model, build_head_trace(model, a), a, 0)
        npt.assert_allclose(alpha.values, [1.0 / 16.0, 0.0], atol=1e-7)

    def test_linear_head_recovers_weights(self):
        # F = 3*sum(A_1) + 5*sum(A_2): per-neuron gradient is the weight
        w = np.array([[3, 3, 3, 3, 5, 5, 5, 5]], f32)
        head = [LayerSpec("flatten"), LayerSpec("dense", weight=w, bias=np.zeros(1, f32))]
        model = helpers.head_only_model(head, (2, 2, 2), 1)
        a = np.random.default_rng(5).standard_normal((2, 2, 2)).astype(f32)
        alpha = grad_cam(model, build_head_trace(model, a), a, 0)
        npt.assert_allclose(alpha.values, [3.0, 5.0], atol=1e-6)
        doubled = grad_cam(model, build_head_trace(model, 2 * a), 2 * a, 0)
        npt.assert_allclose(doubled.values, alpha.values, atol=1e-6)


class TestGradCamPP:
    def test_all_gradients_zero(self):
        head = one_channel_head([0.0, 0.0, 0.0, 0.0])
        model = helpers.head_only_model(head, (1, 2, 2), 1)
        a = np.ones((1, 2, 2), f32)
        alpha = grad_cam_pp(model, build_head_trace(model, a), a, 0)
        npt.assert_array_equal(alpha.values, [0.0])

    def test_single_active_neuron_closed_form(self):
        # g = 2 at one neuron, A = 3 there and 0 elsewhere:
        # w = g^2 / (2 g^2 + sum(A g^3)) = 4 / (8 + 24) = 0.125, alpha = w*g = 0.25
        head = one_channel_head([2.0, 0.0, 0.0, 0.0])
        model = helpers.head_only_model(head, (1, 2, 2), 1)
        a = np.zeros((1, 2, 2), f32)
        a[0, 0, 0] = 3.0
        alpha = grad_cam_pp(model, build_head_trace(model, a), a, 0)
        npt.assert_allclose(alpha.values, [0.25], atol=1e-7)

    def test_negative_gradient_only_channel(self):
        head = one_channel_head([-1.0, -2.0, -0.5, -3.0])
        model = helpers.head_only_model(head, (1, 2, 2), 1)
        a = np.abs(np.random.default_rng(6).standard_normal((1, 2, 2))).astype(f32)
        alpha = grad_cam_pp(model, build_head_trace(model, a), a, 0)
        npt.assert_array_equal(alpha.values, [0.0])


class TestXGradCam:
    def test_uniform_maps_equal_grad_cam(self):
        model = generate_synthetic_model(head_kind="linear", seed=7)
        a = np.repeat(
            np.random.default_rng(8).uniform(0.5, 2.0, size=(model.num_maps, 1, 1)), 16, axis=1
        ).reshape(model.num_maps, 4, 4).astype(f32)
        trace = build_head_trace(model, a)
        npt.assert_allclose(
            xgrad_cam(model, trace, a, 1).values, grad_cam(model, trace, a, 1).values, atol=1e-6
        )

    def test_linear_head_hand_evaluation(self):
        w = np.array([0.5, -1.0, 2.0, 1.5], f32)
        model = helpers.head_only_model(one_channel_head(w), (1, 2, 2), 1)
        a = np.array([[[1.0, 2.0], [3.0, 4.0]]], f32)
        alpha = xgrad_cam(model, build_head_trace(model, a), a, 0)
        want = float((a.reshape(-1) * w).sum() / a.sum())
        npt.assert_allclose(alpha.values, [want], atol=1e-6)

    def test_zero_channel_scored_zero(self):
        model = generate_synthetic_model(head_kind="linear", seed=9)
        a = np.abs(np.random.default_rng(10).standard_normal(model.activation_shape)).astype(f32)
        a[2] = 0.0
        alpha = xgrad_cam(model, build_head_trace(model, a), a, 0)
        assert alpha.values[2] == 0.0


class TestScoreCam:
    def test_identical_channels_uniform(self):
        model = generate_synthetic_model(head_kind="linear", seed=11)
        base = np.abs(np.random.default_rng(12).standard_normal((1, 4, 4))).astype(f32)
        a = np.repeat(base, model.num_maps, axis=0)
        image = np.random.default_rng(13).random(model.input_shape).astype(f32)
        alpha = score_cam(model, image, a, 0)
        npt.assert_allclose(alpha.values, np.full(model.num_maps, 1.0 / model.num_maps), atol=1e-6)

    def test_constant_channel_scores_zero_without_softmax(self):
        model = generate_synthetic_model(head_kind="relu-mlp", seed=14)
        sample = generate_synthetic_sample(model, 15)
        a = run_layers(model.frontend, sample.image)
        a = a.copy()
        a[0] = 2.5  # constant map -> all-zero mask -> masked image = baseline
        alpha = score_cam(model, sample.image, a, sample.class_index, channel_softmax=False)
        assert alpha.values[0] == pytest.approx(0.0, abs=1e-7)

    @pytest.mark.parametrize("head", ["relu-mlp", "conv-relu"])
    def test_matches_direct_loop_oracle(self, head):
        model = generate_synthetic_model(head_kind=head, seed=16)
        sample = generate_synthetic_sample(model, 17)
        a = run_layers(model.frontend, sample.image)
        alpha = score_cam(model, sample.image, a, sample.class_index)
        want = helpers.oracle_score_cam(model, sample.image, a, sample.class_index)
        npt.assert_allclose(alpha.values, want, atol=1e-4)

    def test_baseline_shape_rejected(self):
        model = generate_synthetic_model(seed=18)
        sample = generate_synthetic_sample(model, 19)
        a = run_layers(model.frontend, sample.image)
        with pytest.raises(ValueError, match="baseline"):
            score_cam(model, sample.image, a, 0, baseline=np.zeros((1, 2, 2), f32))


class TestAblationCam:
    def test_direct_substitution(self):
        # F(full) = 2*1 + 8*1 = 10; dropping channel 0 leaves 8 -> alpha_0 = 0.2
        w = np.array([[2.0, 8.0]], f32)
        head = [LayerSpec("flatten"), LayerSpec("dense", weight=w, bias=np.zeros(1, f32))]
        model = helpers.head_only_model(head, (2, 1, 1), 1)
        a = np.ones((2, 1, 1), f32)
        alpha = ablation_cam(model, a, 0)
        npt.assert_allclose(alpha.values, [0.2, 0.8], atol=1e-6)

    def test_zero_channel_scores_zero(self):
        model = generate_synthetic_model(head_kind="linear", seed=20)
        a = np.abs(np.random.default_rng(21).standard_normal(model.activation_shape)).astype(f32)
        a[3] = 0.0
        alpha = ablation_cam(model, a, 0)
        assert alpha.values[3] == pytest.approx(0.0, abs=1e-6)

    def test_linear_head_hand_formula(self):
        model = helpers.linear_game_model()
        a = np.array([[[2.0]], [[0.5]]], f32)
        alpha = ablation_cam(model, a, 0)  # F = 3*2 + 5*0.5 = 8.5
        npt.assert_allclose(alpha.values, [6.0 / 8.5, 2.5 / 8.5], rtol=1e-5)

    def test_zero_full_logit_rejected(self):
        w = np.array([[1.0, -1.0]], f32)
        head = [LayerSpec("flatten"), LayerSpec("dense", weight=w, bias=np.zeros(1, f32))]
        model = helpers.head_only_model(head, (2, 1, 1), 1)
        with pytest.raises(ValueError, match="exactly zero"):
            ablation_cam(model, np.ones((2, 1, 1), f32), 0)

    def test_local_accuracy_violation_exhibited(self):
        # the AND game: alpha = (1, 1) so sum(alpha)*F = 2 while F(A) - F(0) = 1
        model = helpers.and_game_model()
        a = np.ones((2, 1, 1), f32)
        alpha = ablation_cam(model, a, 0)
        full = forward_head(model, a, 0)
        delta = full - forward_head(model, np.zeros_like(a), 0)
        assert abs(float(alpha.values.sum()) * full - delta) > 0.5


class TestLiftCam:
    def test_linear_head_equals_exact_shapley(self):
        model = generate_synthetic_model(head_kind="linear", num_maps=6, seed=22)
        a = np.random.default_rng(23).standard_normal(model.activation_shape).astype(f32)
        trace = build_head_trace(model, a)
        lift = lift_cam(model, trace, a, 2)
        exact = exact_shapley(model, a, 2)
        npt.assert_allclose(lift.values, exact.values, atol=1e-6)

    def test_zero_stack_zero_coefficients(self):
        model = generate_synthetic_model(head_kind="relu-mlp", seed=24)
        a = np.zeros(model.activation_shape, f32)
        lift = lift_cam(model, build_head_trace(model, a), a, 0)
        npt.assert_array_equal(lift.values, np.zeros(model.num_maps))

    def test_coefficient_vector_metadata(self):
        model = generate_synthetic_model(seed=25)
        a = np.random.default_rng(26).standard_normal(model.activation_shape).astype(f32)
        lift = lift_cam(model, build_head_trace(model, a), a, 0)
        assert lift.method == "lift-cam"
        assert lift.values.shape == (model.num_maps,)
        assert np.all(np.isfinite(lift.values))
