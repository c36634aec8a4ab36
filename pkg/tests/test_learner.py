import numpy as np
import pytest

from asm import learner
from asm.core import UNDEFINED
from asm.learner import (ModelParameters, SgdConfig, SgdOptimizer,
                         TrainingDivergedError, assignment_weights,
                         class_loss, classify, init_linear, init_mlp,
                         load_checkpoint, loss_matrix, objective_gradient,
                         overall_accuracy, predict, save_checkpoint,
                         validation_accuracy, weighted_objective)


def independent_forward(params, X):
    """Straight-line reimplementation of the forward pass used as oracle."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if params.kind == "linear":
        z = X.dot(params.arrays["W"]) + params.arrays["b"]
    else:
        h = X.dot(params.arrays["W1"]) + params.arrays["b1"]
        h[h < 0] = 0.0
        z = h.dot(params.arrays["W2"]) + params.arrays["b2"]
    phi = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                   np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
    return np.clip(phi, 1e-7, 1 - 1e-7)


def finite_difference_gradient(params, X, Y, W, h=1e-5):
    grads = {}
    for key, arr in params.arrays.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            plus = params.copy()
            plus.arrays[key][idx] += h
            minus = params.copy()
            minus.arrays[key][idx] -= h
            g[idx] = (weighted_objective(plus, X, Y, W)
                      - weighted_objective(minus, X, Y, W)) / (2 * h)
            it.iternext()
        grads[key] = g
    return grads


class TestPredict:
    def test_zero_linear_model_outputs_half(self):
        params = ModelParameters("linear", {"W": np.zeros((3, 4)),
                                            "b": np.zeros(4)})
        np.testing.assert_allclose(predict(params, np.ones(3)), 0.5)

    def test_negation_antisymmetry(self):
        rng = np.random.default_rng(0)
        params = init_linear(3, 4, rng)
        x = rng.normal(size=3)
        flipped = ModelParameters("linear", {"W": -params.arrays["W"],
                                             "b": -params.arrays["b"]})
        np.testing.assert_allclose(predict(params, x),
                                   1.0 - predict(flipped, x), atol=1e-12)

    @pytest.mark.parametrize("kind", ["linear", "mlp"])
    def test_matches_independent_reimplementation(self, kind):
        rng = np.random.default_rng(1)
        params = (init_linear(5, 3, rng) if kind == "linear"
                  else init_mlp(5, 3, 8, rng))
        X = rng.normal(size=(20, 5))
        got = predict(params, X)
        want = independent_forward(params, X)
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_dimension_mismatch_rejected(self):
        params = init_linear(3, 2, np.random.default_rng(0))
        with pytest.raises(ValueError):
            predict(params, np.ones(4))


class TestClassLoss:
    def test_positive_anchor_value(self):
        assert class_loss(1, 0.9) == pytest.approx(0.10536, abs=1e-5)

    def test_negative_anchor_value(self):
        assert class_loss(-1, 0.9) == pytest.approx(2.30259, abs=1e-5)

    def test_perfect_confidence_costs_nothing(self):
        assert class_loss(1, 1.0) == pytest.approx(0.0, abs=1e-6)

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(2)
        Y = rng.choice([-1, 1], size=(6, 3))
        phi = rng.uniform(0.01, 0.99, size=(6, 3))
        L = loss_matrix(Y, phi)
        for i in range(6):
            for j in range(3):
                assert L[i, j] == pytest.approx(class_loss(Y[i, j], phi[i, j]))


class TestObjective:
    def test_empty_batch_scores_zero(self):
        params = init_linear(2, 3, np.random.default_rng(0))
        assert weighted_objective(params, np.zeros((0, 2)),
                                  np.zeros((0, 3)), np.zeros((0, 3))) == 0.0

    def test_unit_weights_match_plain_loss_sum(self):
        rng = np.random.default_rng(3)
        params = init_linear(2, 3, rng)
        X = rng.normal(size=(1, 2))
        Y = np.array([[1, -1, -1]])
        expected = learner.per_class_losses(params, X, Y).sum()
        got = weighted_objective(params, X, Y, np.ones((1, 3)))
        assert got == pytest.approx(expected)

    def test_weights_scale_linearly(self):
        rng = np.random.default_rng(4)
        params = init_linear(2, 3, rng)
        X = rng.normal(size=(1, 2))
        Y = np.array([[1, -1, 1]])
        losses = learner.per_class_losses(params, X, Y)[0]
        w = np.array([[0.5, 0.0, 0.5]])
        got = weighted_objective(params, X, Y, w)
        assert got == pytest.approx(0.5 * losses[0] + 0.5 * losses[2])

    def test_weight_monotonicity(self):
        rng = np.random.default_rng(5)
        params = init_linear(2, 3, rng)
        X = rng.normal(size=(4, 2))
        Y = rng.choice([-1, 1], size=(4, 3))
        w = rng.uniform(0, 1, size=(4, 3))
        base = weighted_objective(params, X, Y, w)
        bumped = w.copy()
        bumped[2, 1] += 0.3
        assert weighted_objective(params, X, Y, bumped) >= base


class TestGradients:
    @pytest.mark.parametrize("kind", ["linear", "mlp"])
    def test_analytic_matches_finite_differences(self, kind):
        rng = np.random.default_rng(6)
        for trial in range(10):
            params = (init_linear(3, 4, rng) if kind == "linear"
                      else init_mlp(3, 4, 6, rng))
            X = rng.normal(size=(5, 3))
            Y = rng.choice([-1, 1], size=(5, 4))
            W = rng.uniform(0, 1, size=(5, 4))
            analytic = objective_gradient(params, X, Y, W)
            numeric = finite_difference_gradient(params, X, Y, W)
            for key in analytic:
                num = np.linalg.norm(analytic[key] - numeric[key])
                den = max(np.linalg.norm(analytic[key]),
                          np.linalg.norm(numeric[key]), 1e-12)
                assert num / den < 1e-5, f"{kind}/{key} trial {trial}"


class TestSgd:
    def test_zero_gradient_leaves_only_weight_decay(self):
        params = ModelParameters("linear", {"W": np.full((2, 2), 0.3),
                                            "b": np.zeros(2)})
        cfg = SgdConfig(learning_rate=0.1, weight_decay=0.01, momentum=0.0)
        stepped = SgdOptimizer(cfg).step(
            params, np.zeros((0, 2)), np.zeros((0, 2)), np.zeros((0, 2)))
        np.testing.assert_allclose(stepped.arrays["W"],
                                   0.3 * (1 - 0.1 * 0.01))

    def test_objective_decreases_on_convex_model(self):
        rng = np.random.default_rng(7)
        params = init_linear(2, 2, rng)
        X = rng.normal(size=(1, 2))
        Y = np.array([[1, -1]])
        W = np.ones((1, 2))
        cfg = SgdConfig(learning_rate=0.01, weight_decay=0.0, momentum=0.0)
        before = weighted_objective(params, X, Y, W)
        after_params = SgdOptimizer(cfg).step(params, X, Y, W)
        assert weighted_objective(after_params, X, Y, W) < before

    def test_deterministic_across_runs(self):
        def train():
            rng = np.random.default_rng(8)
            params = init_mlp(3, 2, 4, rng)
            opt = SgdOptimizer(SgdConfig())
            for _ in range(20):
                X = rng.normal(size=(6, 3))
                Y = rng.choice([-1, 1], size=(6, 2))
                W = rng.uniform(0, 1, size=(6, 2))
                params = opt.step(params, X, Y, W)
            return params
        a, b = train(), train()
        for key in a.arrays:
            np.testing.assert_array_equal(a.arrays[key], b.arrays[key])

    def test_divergence_detected(self):
        params = ModelParameters("linear", {"W": np.array([[np.inf]]),
                                            "b": np.zeros(1)})
        with pytest.raises(TrainingDivergedError):
            SgdOptimizer(SgdConfig()).step(params, np.ones((1, 1)),
                                           np.array([[1]]), np.ones((1, 1)))


class TestAssignmentWeights:
    def test_routing(self):
        u = np.array([0, 1, 0, 0])
        v = np.full((4, 2), 0.4)
        discarded = np.array([False, False, True, False])
        annotated = np.array([False, False, False, True])
        w = assignment_weights(u, v, discarded, annotated)
        np.testing.assert_allclose(w[0], [0.4, 0.4])   # self-labeled
        np.testing.assert_allclose(w[1], [0.0, 0.0])   # flagged for a human
        np.testing.assert_allclose(w[2], [0.0, 0.0])   # margin band
        np.testing.assert_allclose(w[3], [1.0, 1.0])   # annotated
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            assignment_weights(np.zeros(2), np.zeros((3, 2)),
                               np.zeros(3, dtype=bool), np.zeros(3, dtype=bool))


class TestEvaluation:
    def test_perfect_classifier_accuracy_one(self):
        params = ModelParameters("linear", {
            "W": np.array([[8.0, -8.0], [-8.0, 8.0]]),
            "b": np.array([0.0, 0.0]),
        })
        X = np.array([[1.0, -1.0], [-1.0, 1.0], [1.0, -1.0]])
        truth = np.array([0, 1, 0])
        np.testing.assert_allclose(validation_accuracy(params, X, truth), 1.0)
        assert overall_accuracy(params, X, truth) == 1.0

    def test_constant_half_predicts_negative(self):
        params = ModelParameters("linear", {"W": np.zeros((2, 2)),
                                            "b": np.zeros(2)})
        X = np.ones((4, 2))
        truth = np.array([0, 0, 1, UNDEFINED])
        # phi == 0.5 everywhere: strict rule predicts -1 for every head
        accs = validation_accuracy(params, X, truth)
        assert accs[0] == pytest.approx(0.5)    # two true class-0 positives
        assert accs[1] == pytest.approx(0.75)
        np.testing.assert_array_equal(classify(params, X), UNDEFINED)

    def test_counting_matches_independent_oracle(self):
        rng = np.random.default_rng(9)
        params = init_linear(3, 4, rng)
        X = rng.normal(size=(50, 3))
        truth = rng.integers(-1, 4, size=50)
        phi = predict(params, X)
        accs = validation_accuracy(params, X, truth)
        for j in range(4):
            correct = sum(((phi[i, j] > 0.5) == (truth[i] == j))
                          for i in range(50))
            assert accs[j] == pytest.approx(correct / 50)

    def test_empty_validation_rejected(self):
        params = init_linear(2, 2, np.random.default_rng(0))
        with pytest.raises(ValueError):
            validation_accuracy(params, np.zeros((0, 2)), np.zeros(0))


class TestCheckpoint:
    @pytest.mark.parametrize("kind", ["linear", "mlp"])
    def test_roundtrip(self, tmp_path, kind):
        rng = np.random.default_rng(10)
        params = (init_linear(4, 3, rng) if kind == "linear"
                  else init_mlp(4, 3, 5, rng))
        path = tmp_path / "model.asmw"
        save_checkpoint(params, path)
        with open(path, "rb") as fh:
            assert fh.read(4) == b"ASMW"
        loaded = load_checkpoint(path)
        assert loaded.kind == params.kind
        for key in params.arrays:
            np.testing.assert_array_equal(loaded.arrays[key],
                                          params.arrays[key])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError):
            load_checkpoint(path)
