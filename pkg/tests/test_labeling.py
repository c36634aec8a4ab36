import itertools

import numpy as np
import pytest

from asm.core import enumerate_label_candidates
from asm.labeling import (assign_labels, assign_labels_batch,
                          candidate_losses, clip_probabilities,
                          detect_ambiguous)


def weighted_loss(y, phi, weights):
    phi = np.clip(phi, 1e-7, 1 - 1e-7)
    per_class = np.where(y == 1, -np.log(phi), -np.log(1.0 - phi))
    return float(np.sum(weights * per_class))


def exhaustive_argmin(phi, weights):
    """Independent reference: scan every admissible sign vector.

    A positive on a zero-weight class is inadmissible: its score ties
    all-negative exactly while claiming a category the loss never audits.
    """
    m = len(phi)
    best, best_loss = None, np.inf
    for signs in itertools.product((-1, 1), repeat=m):
        y = np.array(signs, dtype=np.int8)
        if int(np.sum(y == 1)) > 1:    # constraint: at most one positive
            continue
        pos = np.flatnonzero(y == 1)
        if pos.size and weights[pos[0]] == 0:
            continue
        loss = weighted_loss(y, phi, weights)
        better = loss < best_loss - 1e-12
        tie = abs(loss - best_loss) <= 1e-12
        if better:
            best, best_loss = y, loss
        elif tie and best is not None:
            # positives beat all-negative; among positives, lowest index
            if np.any(y == 1) and (not np.any(best == 1)
                                   or np.argmax(y) < np.argmax(best)):
                best = y
    return best


class TestAssignLabels:
    def test_confident_positive(self):
        phi = np.array([0.95, 0.02, 0.03])
        w = np.full(3, 0.5)
        y = assign_labels(phi, w, u=0)
        np.testing.assert_array_equal(y, [1, -1, -1])
        scores = candidate_losses(phi, w)
        assert scores[0] == pytest.approx(0.051, abs=5e-4)
        assert scores[-1] == pytest.approx(1.523, abs=5e-4)

    def test_all_low_confidence_goes_undefined(self):
        y = assign_labels(np.array([0.1, 0.2, 0.1]), np.full(3, 0.5), u=0)
        np.testing.assert_array_equal(y, [-1, -1, -1])

    def test_annotation_flag_skips(self):
        assert assign_labels(np.array([0.9, 0.1]), np.array([0.5, 0.5]), u=1) is None

    def test_zero_weights_skip(self):
        assert assign_labels(np.array([0.9, 0.1]), np.zeros(2), u=0) is None

    def test_invalid_probability_rejected(self):
        with pytest.raises(ValueError):
            assign_labels(np.array([1.5, 0.1]), np.array([0.5, 0.5]), u=0)

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            m = int(rng.integers(1, 11))
            phi = rng.uniform(0.001, 0.999, size=m)
            weights = rng.uniform(0.0, 1.0, size=m)
            weights[rng.uniform(size=m) < 0.2] = 0.0
            if not np.any(weights > 0):
                continue
            got = assign_labels(phi, weights, u=0)
            want = exhaustive_argmin(phi, weights)
            np.testing.assert_array_equal(got, want)

    def test_positive_only_when_confident_on_weighted_coord(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            m = int(rng.integers(1, 8))
            phi = rng.uniform(0.001, 0.999, size=m)
            weights = rng.uniform(0.01, 1.0, size=m)
            y = assign_labels(phi, weights, u=0)
            pos = np.flatnonzero(y == 1)
            if pos.size:
                assert phi[pos[0]] > 0.5

    def test_batch_version_agrees(self):
        rng = np.random.default_rng(9)
        phi = rng.uniform(0.01, 0.99, size=(40, 5))
        weights = rng.uniform(0.0, 1.0, size=(40, 5))
        labels, assigned = assign_labels_batch(phi, weights)
        for i in range(40):
            got = assign_labels(phi[i], weights[i], u=0)
            if got is None:
                assert not assigned[i]
            else:
                assert assigned[i]
                np.testing.assert_array_equal(labels[i], got)

    def test_candidate_count_is_m_plus_one(self):
        phi = np.array([0.4, 0.6, 0.5])
        scores = candidate_losses(phi, np.ones(3))
        assert len(scores) == len(enumerate_label_candidates(3))


class TestAmbiguity:
    def test_two_confident_heads(self):
        assert detect_ambiguous(np.array([0.9, 0.8, 0.1]))

    def test_single_confident_head(self):
        assert not detect_ambiguous(np.array([0.9, 0.2, 0.1]))

    def test_boundary_is_strict(self):
        assert not detect_ambiguous(np.array([0.5, 0.5]))

    def test_invalid_input_rejected(self):
        with pytest.raises(ValueError):
            detect_ambiguous(np.array([0.7, 1.2]))


class TestClip:
    def test_clip_pulls_off_limits(self):
        out = clip_probabilities(np.array([0.0, 1.0, 0.5]))
        assert 0 < out[0] < 1e-6
        assert 1 - 1e-6 < out[1] < 1
        assert out[2] == 0.5
