import numpy as np
import pytest

from asm.core import UNDEFINED, Pool
from asm.learner import SgdConfig, SgdOptimizer, init_linear, overall_accuracy
from asm.oracle import (BUDGET_EXHAUSTED, SimulatedAnnotator,
                        initial_annotations, inject_label_noise,
                        make_synthetic_pool, read_pool_csv, write_pool_csv)


def small_pool():
    return Pool(features=np.arange(8.0).reshape(4, 2),
                hidden_truth=np.array([0, 2, UNDEFINED, 1]))


class TestAnnotate:
    def test_label_for_defined_truth(self):
        ann = SimulatedAnnotator(small_pool(), m=3, budget=10)
        decision = ann.annotate(1)
        assert not decision.is_reject and decision.category == 2

    def test_reject_for_undefined_truth(self):
        ann = SimulatedAnnotator(small_pool(), m=3, budget=10)
        assert ann.annotate(2).is_reject

    def test_budget_exhaustion_signal(self):
        ann = SimulatedAnnotator(small_pool(), m=3, budget=1)
        ann.annotate(0)
        assert ann.annotate(1) is BUDGET_EXHAUSTED
        assert ann.budget_remaining == 0

    def test_each_answer_costs_one(self):
        ann = SimulatedAnnotator(small_pool(), m=3, budget=5)
        ann.annotate(0)
        ann.annotate(2)   # rejects cost budget too
        assert ann.budget_remaining == 3

    def test_unknown_sample_rejected(self):
        ann = SimulatedAnnotator(small_pool(), m=3, budget=5)
        with pytest.raises(ValueError):
            ann.annotate(17)

    def test_seed_reveal_is_free(self):
        pool = small_pool()
        pairs = initial_annotations(pool, 3, [0, 2])
        assert pairs[0][1].category == 0
        assert pairs[1][1].is_reject


class TestNoiseInjection:
    def test_zero_fraction_is_identity(self):
        pool = small_pool()
        noisy = inject_label_noise(pool, 0.0, seed=1, m=3)
        np.testing.assert_array_equal(noisy.hidden_truth, pool.hidden_truth)

    def test_full_fraction_flips_every_defined_truth(self):
        truth = np.array([0, 1, 0, 1, UNDEFINED])
        pool = Pool(features=np.zeros((5, 2)), hidden_truth=truth)
        noisy = inject_label_noise(pool, 1.0, seed=2, m=2)
        defined = truth >= 0
        assert np.all(noisy.hidden_truth[defined] != truth[defined])
        assert noisy.hidden_truth[4] == UNDEFINED

    def test_deterministic_under_seed(self):
        data = make_synthetic_pool(400, 3, 2, 0.1, 3.0, seed=5)
        a = inject_label_noise(data.pool, 0.3, seed=9, m=3)
        b = inject_label_noise(data.pool, 0.3, seed=9, m=3)
        np.testing.assert_array_equal(a.hidden_truth, b.hidden_truth)

    def test_fraction_bounds_checked(self):
        with pytest.raises(ValueError):
            inject_label_noise(small_pool(), 1.5, seed=0)

    def test_corruption_rate_close_to_fraction(self):
        data = make_synthetic_pool(2000, 4, 2, 0.0, 3.0, seed=6)
        noisy = inject_label_noise(data.pool, 0.3, seed=7, m=4)
        changed = np.mean(noisy.hidden_truth != data.pool.hidden_truth)
        assert 0.25 < changed < 0.35


class TestSyntheticPool:
    def test_split_sizes(self):
        data = make_synthetic_pool(2000, 4, 2, 0.1, 3.0, seed=1)
        assert len(data.pool) == 1400
        assert len(data.val_features) == 200
        assert len(data.test_features) == 400

    def test_no_undefined_without_fraction(self):
        data = make_synthetic_pool(500, 3, 2, 0.0, 3.0, seed=2)
        assert np.all(data.pool.hidden_truth >= 0)
        assert np.all(data.test_truth >= 0)

    def test_identical_under_same_seed(self):
        a = make_synthetic_pool(500, 3, 4, 0.2, 3.0, seed=3)
        b = make_synthetic_pool(500, 3, 4, 0.2, 3.0, seed=3)
        np.testing.assert_array_equal(a.pool.features, b.pool.features)
        np.testing.assert_array_equal(a.test_truth, b.test_truth)

    def test_center_separation_honored(self):
        data = make_synthetic_pool(500, 5, 3, 0.2, 2.5, seed=4)
        allc = np.vstack([data.centers, data.undefined_centers])
        for i in range(len(allc)):
            for j in range(i + 1, len(allc)):
                assert np.linalg.norm(allc[i] - allc[j]) >= 2.5 - 1e-9

    def test_supervised_learner_reaches_95pct(self):
        data = make_synthetic_pool(2000, 4, 2, 0.0, 6.0, seed=8)
        pool = data.pool
        labels = -np.ones((len(pool), 4), dtype=np.int8)
        for i, t in enumerate(pool.hidden_truth):
            labels[i, t] = 1
        mu, sd = pool.features.mean(0), pool.features.std(0)
        X = (pool.features - mu) / sd
        params = init_linear(2, 4, np.random.default_rng(0))
        opt = SgdOptimizer(SgdConfig(learning_rate=0.05))
        rng = np.random.default_rng(1)
        for _ in range(1500):
            idx = rng.choice(len(pool), size=32)
            params = opt.step(params, X[idx], labels[idx], np.ones((32, 4)))
        acc = overall_accuracy(params, (data.test_features - mu) / sd,
                               data.test_truth)
        assert acc >= 0.95

    def test_geometry_validation(self):
        with pytest.raises(ValueError):
            make_synthetic_pool(30, 4, 2, 0.1, 3.0, seed=0)     # n too small
        with pytest.raises(ValueError):
            make_synthetic_pool(500, 4, 1, 0.1, 3.0, seed=0)     # d too small
        with pytest.raises(ValueError):
            make_synthetic_pool(500, 4, 2, 0.1, -1.0, seed=0)    # bad separation
        with pytest.raises(ValueError):
            make_synthetic_pool(500, 4, 2, 0.1, 1e7, seed=0)     # infeasible


class TestPoolCsv:
    def test_roundtrip(self, tmp_path):
        data = make_synthetic_pool(300, 3, 2, 0.2, 3.0, seed=9)
        path = tmp_path / "pool.csv"
        write_pool_csv(data.pool, path)
        loaded = read_pool_csv(path)
        np.testing.assert_allclose(loaded.features, data.pool.features)
        np.testing.assert_array_equal(loaded.hidden_truth,
                                      data.pool.hidden_truth)
        assert loaded.truth_known.all()

    def test_header_format(self, tmp_path):
        pool = Pool(features=np.zeros((2, 3)),
                    hidden_truth=np.array([0, UNDEFINED]))
        path = tmp_path / "pool.csv"
        write_pool_csv(pool, path)
        text = path.read_text()
        assert text.splitlines()[0] == "id,f0,f1,f2,label"
        assert "\r" not in text

    def test_withheld_truth(self, tmp_path):
        path = tmp_path / "pool.csv"
        path.write_text("id,f0,f1,label\n0,0.5,1.5,2\n1,0.0,1.0,\n2,1.0,2.0,-1\n")
        pool = read_pool_csv(path)
        assert pool.truth_known.tolist() == [True, False, True]
        assert pool.hidden_truth[0] == 2
        assert pool.hidden_truth[2] == UNDEFINED

    def test_malformed_row_rejected(self, tmp_path):
        path = tmp_path / "pool.csv"
        path.write_text("id,f0,f1,label\n0,0.5,2\n")
        with pytest.raises(ValueError):
            read_pool_csv(path)
