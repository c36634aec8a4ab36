"""Simulated annotator, noise injection, and synthetic pool generation.

This module is the only place allowed to read a pool's hidden truth.  The
mining loop sees truth exclusively through annotate() decisions, which is
what keeps the simulated runs honest stand-ins for a human annotator.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import UNDEFINED, Decision, Pool, REJECT


class Signal(enum.Enum):
    BUDGET_EXHAUSTED = "budget_exhausted"


BUDGET_EXHAUSTED = Signal.BUDGET_EXHAUSTED


class SimulatedAnnotator:
    """Answers annotation queries from the pool's hidden truth.

    Every answered query, label or reject, costs one unit of budget; once
    the budget is gone the annotator only ever returns BUDGET_EXHAUSTED.
    """

    def __init__(self, pool: Pool, m: int, budget: int):
        if budget < 0:
            raise ValueError("budget must be >= 0")
        self.pool = pool
        self.m = m
        self.budget_remaining = budget
        self.queries_answered = 0

    def annotate(self, sample_id: int) -> Union[Decision, Signal]:
        if self.budget_remaining <= 0:
            return BUDGET_EXHAUSTED
        if not 0 <= sample_id < len(self.pool):
            raise ValueError(f"unknown sample id {sample_id}")
        if not bool(self.pool.truth_known[sample_id]):
            raise ValueError(f"sample {sample_id} has no recorded truth")
        self.budget_remaining -= 1
        self.queries_answered += 1
        truth = int(self.pool.hidden_truth[sample_id])
        if 0 <= truth < self.m:
            return Decision(category=truth)
        return REJECT


def initial_annotations(pool: Pool, m: int,
                        seed_ids: np.ndarray) -> list[tuple[int, Decision]]:
    """Reveal the seed samples' labels; seeds are free of budget."""
    out = []
    for sample_id in seed_ids:
        sample_id = int(sample_id)
        truth = int(pool.hidden_truth[sample_id])
        decision = Decision(category=truth) if 0 <= truth < m else REJECT
        out.append((sample_id, decision))
    return out


def inject_label_noise(pool: Pool, fraction: float, seed: int,
                       m: int | None = None) -> Pool:
    """Corrupt a seeded random fraction of each category's truths.

    Each corrupted sample gets a uniformly random *different* defined
    category.  Undefined-truth samples are left alone; they already model
    out-of-scope data.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    original = pool.hidden_truth
    truth = original.copy()
    if m is None:
        m = int(original.max()) + 1 if np.any(original >= 0) else 0
    rng = np.random.default_rng(seed)
    for category in range(m):
        members = np.flatnonzero(original == category)
        n_corrupt = int(round(fraction * len(members)))
        if n_corrupt == 0:
            continue
        chosen = rng.choice(members, size=n_corrupt, replace=False)
        if m > 1:
            offsets = rng.integers(1, m, size=n_corrupt)
            truth[chosen] = (category + offsets) % m
    noisy = Pool(features=pool.features.copy(), hidden_truth=truth)
    noisy.truth_known = pool.truth_known.copy()
    return noisy


@dataclass
class SyntheticData:
    """A generated pool plus its labeled held-out splits."""

    pool: Pool
    val_features: np.ndarray
    val_truth: np.ndarray
    test_features: np.ndarray
    test_truth: np.ndarray
    centers: np.ndarray
    undefined_centers: np.ndarray


_MAX_RADIUS = 1e6


def _ring(count: int, radius: float, d: int, offset: float) -> np.ndarray:
    """Evenly spaced centers on a circle in the first two dimensions."""
    angles = offset + 2.0 * np.pi * np.arange(count) / max(count, 1)
    centers = np.zeros((count, d))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def _mixture_centers(m: int, d: int, separation: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Defined centers on an outer ring, undefined ones strictly inside.

    Every defined center sits on the convex hull of the layout, so each
    class stays linearly separable from the rest of the mixture, while the
    interior undefined blobs are rejectable by every head.  All pairwise
    center distances are at least `separation`.
    """
    k_undef = max(1, m // 2)
    r_inner = separation / (2.0 * np.sin(np.pi / k_undef)) if k_undef > 1 else 0.0
    r_outer = r_inner + separation
    if m > 1:
        r_outer = max(r_outer, separation / (2.0 * np.sin(np.pi / m)))
    if r_outer > _MAX_RADIUS:
        raise ValueError(
            f"infeasible geometry: separation {separation} needs a center "
            f"radius beyond {_MAX_RADIUS:g}")
    offset = rng.uniform(0.0, 2.0 * np.pi)
    centers = _ring(m, r_outer, d, offset)
    undef_centers = _ring(k_undef, r_inner, d, offset + np.pi / max(m, 1))
    return centers, undef_centers


def make_synthetic_pool(n: int, m: int, d: int, undefined_fraction: float,
                        separation: float, seed: int,
                        class_priors: np.ndarray | None = None,
                        tangential_spread: float = 1.0) -> SyntheticData:
    """Gaussian-mixture pool with a 70/10/20 pool/validation/test split.

    Unit-variance blobs sit at centers at least `separation` apart: the m
    defined classes on an outer ring, the off-manifold undefined sources
    inside it.  An undefined_fraction of samples draw from those interior
    centers and carry UNDEFINED truth.  Optional class priors skew how
    often each defined category appears (uniform by default), and
    tangential_spread > 1 stretches each class Gaussian along the ring
    tangent, turning round blobs into pinwheel arms whose long, curved
    gaps take far more labels to pin down.
    """
    if n < 10 * m:
        raise ValueError("need n >= 10 * m samples")
    if d < 2:
        raise ValueError("need d >= 2 dimensions")
    if not 0.0 <= undefined_fraction < 1.0:
        raise ValueError("undefined_fraction must lie in [0, 1)")
    if separation <= 0:
        raise ValueError("separation must be > 0")
    if tangential_spread < 1.0:
        raise ValueError("tangential_spread must be >= 1")
    if class_priors is None:
        priors = np.full(m, 1.0 / m)
    else:
        priors = np.asarray(class_priors, dtype=float)
        if len(priors) != m or np.any(priors <= 0):
            raise ValueError("class_priors must hold m positive entries")
        priors = priors / priors.sum()

    rng = np.random.default_rng(seed)
    centers, undef_centers = _mixture_centers(m, d, separation, rng)
    n_undef_centers = len(undef_centers)

    n_undefined = int(round(undefined_fraction * n))
    n_defined = n - n_undefined
    truth = np.empty(n, dtype=int)
    features = np.empty((n, d))

    cats = rng.choice(m, size=n_defined, p=priors)
    truth[:n_defined] = cats
    noise = rng.normal(size=(n_defined, d))
    if tangential_spread > 1.0:
        # Stretch each class along its ring tangent (first two dims).
        angles = np.arctan2(centers[cats, 1], centers[cats, 0])
        tangent = np.stack([-np.sin(angles), np.cos(angles)], axis=1)
        along = noise[:, :1] * tangential_spread
        across = noise[:, 1:2]
        radial = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        noise = noise.copy()
        noise[:, :2] = along * tangent + across * radial
    features[:n_defined] = centers[cats] + noise
    if n_undefined:
        picks = rng.integers(0, n_undef_centers, size=n_undefined)
        truth[n_defined:] = UNDEFINED
        features[n_defined:] = undef_centers[picks] + rng.normal(
            size=(n_undefined, d))

    order = rng.permutation(n)
    features, truth = features[order], truth[order]

    n_pool = int(round(0.7 * n))
    n_val = int(round(0.1 * n))
    pool = Pool(features=features[:n_pool], hidden_truth=truth[:n_pool])
    return SyntheticData(
        pool=pool,
        val_features=features[n_pool:n_pool + n_val],
        val_truth=truth[n_pool:n_pool + n_val],
        test_features=features[n_pool + n_val:],
        test_truth=truth[n_pool + n_val:],
        centers=centers,
        undefined_centers=undef_centers,
    )


# ---------------------------------------------------------------------------
# Dataset CSV: header id,f0,...,f{d-1},label with label in 0..m-1, -1 for
# undefined truth, or empty when the truth is withheld.
# ---------------------------------------------------------------------------

def write_pool_csv(pool: Pool, path) -> None:
    d = pool.dim
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"f{k}" for k in range(d)] + ["label"])
        for i in range(len(pool)):
            label = ""
            if bool(pool.truth_known[i]):
                label = str(int(pool.hidden_truth[i]))
            writer.writerow([i] + [repr(float(x)) for x in pool.features[i]]
                            + [label])


def read_pool_csv(path) -> Pool:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "id" or header[-1] != "label":
            raise ValueError("dataset header must be id,f0,...,label")
        d = len(header) - 2
        features, truth, known = [], [], []
        for row in reader:
            if not row:
                continue
            if len(row) != d + 2:
                raise ValueError(f"row {row[0]!r} has {len(row)} fields, "
                                 f"expected {d + 2}")
            features.append([float(x) for x in row[1:1 + d]])
            raw = row[-1].strip()
            known.append(bool(raw))
            truth.append(int(raw) if raw else UNDEFINED)
    pool = Pool(features=np.asarray(features),
                hidden_truth=np.asarray(truth, dtype=int))
    pool.truth_known = np.asarray(known, dtype=bool)
    return pool
