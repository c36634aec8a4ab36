"""Dual curricula: the monotone annotated/rejected sets plus thresholds.

Set A holds user-annotated samples (frozen to the annotation-flag side of
the solver), set B holds user-rejected ones (frozen out of training).  Both
only ever grow.  The per-class thresholds lambda rise on a validation-driven
schedule for at most tau updates; gamma stays fixed for a run unless the
caller supplies a schedule hook.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Hyperparameters
from .solver import Membership

ACCURACY_FLOOR = 1e-3


class ConflictingAnnotationError(ValueError):
    """A sample cannot be both annotated and rejected, or relabeled."""


@dataclass
class CurriculumState:
    annotations: dict[int, int]          # sample id -> category (set A)
    rejections: set[int]                 # sample ids (set B)
    lam: np.ndarray                      # per-class thresholds, nats
    gamma: float
    q: int = 0                           # lambda updates applied so far
    iteration: int = 0                   # global mini-batch counter
    gamma_schedule: Optional[Callable[[int], float]] = field(
        default=None, repr=False)

    @classmethod
    def init(cls, hyper: Hyperparameters,
             seed_annotations: list[tuple[int, int]]) -> "CurriculumState":
        """Fresh state from the initial human-labeled seeds."""
        if not seed_annotations:
            raise ValueError("seed annotation list must not be empty")
        annotations = {}
        for sample_id, category in seed_annotations:
            if not 0 <= category < hyper.m:
                raise ValueError(f"seed category {category} out of range")
            annotations[int(sample_id)] = int(category)
        return cls(
            annotations=annotations,
            rejections=set(),
            lam=np.full(hyper.m, hyper.lambda0, dtype=float),
            gamma=hyper.gamma,
        )

    @property
    def m(self) -> int:
        return len(self.lam)

    def membership(self, sample_id: int) -> Membership:
        if sample_id in self.annotations:
            return Membership.IN_A
        if sample_id in self.rejections:
            return Membership.IN_B
        return Membership.FREE

    def membership_array(self, sample_ids: np.ndarray) -> np.ndarray:
        return np.array([self.membership(int(i)) for i in sample_ids],
                        dtype=object)

    def commit_annotation(self, sample_id: int, category: int) -> "CurriculumState":
        if not 0 <= category < self.m:
            raise ValueError(f"category {category} out of range for m={self.m}")
        if sample_id in self.rejections:
            raise ConflictingAnnotationError(
                f"sample {sample_id} was already rejected")
        existing = self.annotations.get(sample_id)
        if existing is not None and existing != category:
            raise ConflictingAnnotationError(
                f"sample {sample_id} already annotated as {existing}")
        self.annotations[sample_id] = category
        return self

    def commit_rejection(self, sample_id: int) -> "CurriculumState":
        if sample_id in self.annotations:
            raise ConflictingAnnotationError(
                f"sample {sample_id} was already annotated")
        self.rejections.add(sample_id)
        return self

    def update_lambda(self, per_class_accuracy: np.ndarray, alpha: float,
                      tau: int) -> "CurriculumState":
        """Raise thresholds by alpha times the negative log accuracy.

        Only the first tau updates take effect; afterwards lambda is frozen
        so late-run pseudo-labeling does not loosen without bound.
        """
        if self.q + 1 <= tau:
            acc = np.clip(np.asarray(per_class_accuracy, dtype=float),
                          ACCURACY_FLOOR, 1.0)
            self.lam = self.lam + alpha * (-np.log(acc))
            self.q += 1
        return self

    def current_gamma(self) -> float:
        if self.gamma_schedule is not None:
            return float(self.gamma_schedule(self.iteration))
        return self.gamma

    # -- snapshot -----------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "annotations": {str(k): v for k, v in sorted(self.annotations.items())},
            "rejections": sorted(self.rejections),
            "lambda": self.lam.tolist(),
            "gamma": self.gamma,
            "q": self.q,
            "iteration": self.iteration,
        })

    @classmethod
    def from_json(cls, text: str) -> "CurriculumState":
        data = json.loads(text)
        return cls(
            annotations={int(k): int(v) for k, v in data["annotations"].items()},
            rejections=set(int(i) for i in data["rejections"]),
            lam=np.asarray(data["lambda"], dtype=float),
            gamma=float(data["gamma"]),
            q=int(data["q"]),
            iteration=int(data["iteration"]),
        )
