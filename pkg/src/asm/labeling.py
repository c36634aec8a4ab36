"""Constrained pseudo-labeling of high-confidence samples.

A self-labeled sample (u=0, some positive weight) receives the admissible
label vector minimizing its weighted per-class loss.  Admissible means at
most one positive entry, so only m+1 candidates need scoring: positive at
each class, or all-negative (the undefined category).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import all_negative, single_positive

PROB_CLIP = 1e-7


def clip_probabilities(phi: np.ndarray) -> np.ndarray:
    """Pull probabilities off {0, 1} so the log losses stay finite."""
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ValueError("predictions must be finite")
    if np.any(phi < 0) or np.any(phi > 1):
        raise ValueError("predictions must lie in [0, 1]")
    return np.clip(phi, PROB_CLIP, 1.0 - PROB_CLIP)


def candidate_losses(phi: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted loss of every admissible candidate, positives first.

    Returns an (m+1,)-vector: entry j < m scores the label positive at j,
    entry m scores all-negative.
    """
    phi = clip_probabilities(phi)
    weights = np.asarray(weights, dtype=float)
    pos = -np.log(phi)          # loss when the class label is +1
    neg = -np.log(1.0 - phi)    # loss when the class label is -1
    all_neg_loss = float(np.sum(weights * neg))
    # Flipping class j from -1 to +1 swaps its loss term.
    scores = all_neg_loss - weights * neg + weights * pos
    return np.append(scores, all_neg_loss)


def assign_labels(phi: np.ndarray, weights: np.ndarray,
                  u: int) -> Optional[np.ndarray]:
    """Pick the loss-minimizing admissible label, or skip the sample.

    Returns None when the sample is not self-labelable: it is flagged for
    annotation (u=1) or every class weight is zero.  Ties break toward the
    lowest class index, with all-negative losing to any positive candidate.
    A positive is only ever placed on a class whose weight is non-zero: a
    zero-weight coordinate scores identically to all-negative, so letting
    it win the tie would claim a category the training loss never checks.
    """
    weights = np.asarray(weights, dtype=float)
    if u == 1 or not np.any(weights > 0):
        return None
    m = len(weights)
    scores = candidate_losses(phi, weights)
    scores[:m][weights == 0] = np.inf
    best = int(np.argmin(scores))  # first minimum: lowest index, all-neg last
    if best == m:
        return all_negative(m)
    return single_positive(m, best)


def assign_labels_batch(phi: np.ndarray, weights: np.ndarray):
    """Vectorized assign_labels over (n, m) predictions and weights.

    Returns (labels, assigned): labels is (n, m) over {-1, +1} and assigned
    marks rows that actually received a pseudo-label (some weight > 0).
    Rows the caller must skip for other reasons (annotation flag, margin
    band, ambiguity) are its business to mask out.
    """
    phi = clip_probabilities(np.atleast_2d(phi))
    weights = np.asarray(weights, dtype=float)
    n, m = phi.shape
    pos = -np.log(phi)
    neg = -np.log(1.0 - phi)
    all_neg_loss = np.sum(weights * neg, axis=1, keepdims=True)   # (n, 1)
    positive_scores = all_neg_loss - weights * neg + weights * pos
    positive_scores[weights == 0] = np.inf    # vacuous candidates can't win
    scores = np.concatenate([positive_scores, all_neg_loss], axis=1)
    best = np.argmin(scores, axis=1)          # ties: lowest class, all-neg last
    labels = -np.ones((n, m), dtype=np.int8)
    hit = best < m
    labels[np.flatnonzero(hit), best[hit]] = 1
    assigned = np.any(weights > 0, axis=1)
    return labels, assigned


def detect_ambiguous(phi: np.ndarray) -> bool:
    """True when two or more heads claim the sample (strict phi > 0.5)."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0) or np.any(phi > 1) or not np.all(np.isfinite(phi)):
        raise ValueError("predictions must lie in [0, 1]")
    return int(np.sum(phi > 0.5)) >= 2


def ambiguous_mask(phi: np.ndarray) -> np.ndarray:
    """Vectorized detect_ambiguous over an (n, m) prediction matrix."""
    phi = np.asarray(phi, dtype=float)
    return np.sum(phi > 0.5, axis=1) >= 2
