"""Shared domain types: samples, label vectors, losses, hyperparameters.

Labels are m-vectors over {-1, +1} with at most one positive entry; the
all-negative vector stands for the undefined category (rejected by every
one-vs-rest head).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Sentinel for "belongs to none of the m defined categories".
UNDEFINED = -1

# Default per-class confidence threshold (nats): loss of a 0.9-confidence hit.
DEFAULT_LAMBDA0 = -math.log(0.9)


class SampleStatus(enum.Enum):
    UNLABELED = "unlabeled"
    ANNOTATED = "annotated"
    REJECTED = "rejected"
    PSEUDO = "pseudo"
    MARGIN_SKIPPED = "margin_skipped"


@dataclass(frozen=True)
class SampleRecord:
    """One pool item. `truth` is only ever read by the annotation oracle."""

    id: int
    features: np.ndarray
    truth: int = UNDEFINED
    status: SampleStatus = SampleStatus.UNLABELED
    current_label: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Decision:
    """An annotator's verdict on one sample: a category label, or a reject."""

    category: Optional[int]

    @property
    def is_reject(self) -> bool:
        return self.category is None


REJECT = Decision(category=None)


@dataclass
class Hyperparameters:
    """Mining thresholds and schedule knobs.

    m counts every defined one-vs-rest head (background included); the
    undefined category is not one of them.
    """

    m: int
    lambda0: float = DEFAULT_LAMBDA0
    gamma_factor: float = 0.5
    alpha: float = 0.08
    tau: int = 5
    beta: int = 10000
    al_batch_size: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be > 0")
        if self.gamma_factor <= 0:
            raise ValueError("gamma_factor must be > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.beta < 1:
            raise ValueError("beta must be >= 1")
        if self.al_batch_size < 1:
            raise ValueError("al_batch_size must be >= 1")

    @property
    def gamma(self) -> float:
        return self.gamma_factor * self.m


def all_negative(m: int) -> np.ndarray:
    """The undefined-category label: every head says no."""
    return -np.ones(m, dtype=np.int8)


def single_positive(m: int, category: int) -> np.ndarray:
    if not 0 <= category < m:
        raise ValueError(f"category {category} out of range for m={m}")
    y = all_negative(m)
    y[category] = 1
    return y


def validate_label_vector(y: np.ndarray) -> None:
    y = np.asarray(y)
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("label entries must be -1 or +1")
    if int(np.sum(y == 1)) > 1:
        raise ValueError("at most one positive entry allowed")


def is_undefined(y: np.ndarray) -> bool:
    """True iff the vector carries no positive entry (sum |y_j + 1| = 0)."""
    validate_label_vector(y)
    return not bool(np.any(np.asarray(y) == 1))


def positive_index(y: np.ndarray) -> int:
    """Category index of the single positive entry, or UNDEFINED."""
    validate_label_vector(y)
    hits = np.flatnonzero(np.asarray(y) == 1)
    return int(hits[0]) if hits.size else UNDEFINED


def enumerate_label_candidates(m: int) -> list[np.ndarray]:
    """All m+1 admissible labels: positive-at-j for each j, then all-negative.

    The at-most-one-positive constraint shrinks the 2^m label space to
    exactly these candidates, so exhaustive label search stays linear in m.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    candidates = [single_positive(m, j) for j in range(m)]
    candidates.append(all_negative(m))
    return candidates


def validate_loss_matrix(losses: np.ndarray) -> np.ndarray:
    """Check an n-by-m per-class loss matrix: non-empty, finite, >= 0."""
    losses = np.asarray(losses, dtype=float)
    if losses.ndim != 2 or losses.size == 0:
        raise ValueError("loss matrix must be a non-empty 2-D array")
    if not np.all(np.isfinite(losses)):
        raise ValueError("loss matrix contains non-finite entries")
    if np.any(losses < 0):
        raise ValueError("loss matrix entries must be non-negative")
    return losses


@dataclass
class Pool:
    """A sample pool stored columnwise for vectorized access.

    `hidden_truth` is the annotation ground truth; everything outside the
    oracle module treats it as opaque (the mining loop never reads it).
    Labels hold the committed annotation for ANNOTATED samples and the
    all-negative placeholder for everyone else.
    """

    features: np.ndarray                 # (n, d)
    hidden_truth: np.ndarray             # (n,), category index or UNDEFINED
    statuses: list[SampleStatus] = field(default_factory=list)
    labels: Optional[np.ndarray] = None  # (n, m) over {-1, +1}
    truth_known: Optional[np.ndarray] = None  # False where truth is withheld

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.hidden_truth = np.asarray(self.hidden_truth, dtype=int)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if len(self.hidden_truth) != len(self.features):
            raise ValueError("truth / feature length mismatch")
        if not self.statuses:
            self.statuses = [SampleStatus.UNLABELED] * len(self.features)
        if self.truth_known is None:
            self.truth_known = np.ones(len(self.features), dtype=bool)

    def __len__(self) -> int:
        return len(self.features)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def init_labels(self, m: int) -> None:
        """Give every sample the all-negative placeholder label."""
        self.labels = -np.ones((len(self), m), dtype=np.int8)

    def record(self, sample_id: int) -> SampleRecord:
        label = None if self.labels is None else self.labels[sample_id].copy()
        return SampleRecord(
            id=sample_id,
            features=self.features[sample_id].copy(),
            truth=int(self.hidden_truth[sample_id]),
            status=self.statuses[sample_id],
            current_label=label,
        )
