"""The alternating mining loop.

Each outer round runs T mini-batches, each of which (1) fine-tunes the
model on the previous step's annotated + self-labeled samples, (2) solves
the closed-form assignment for the fresh batch, and (3) pseudo-labels the
self-labeled members for the *next* fine-tune.  Pseudo-labels live exactly
one step; committed annotations persist.  Between rounds the engine builds
a queue of annotation candidates, feeds it to whatever annotation source
it was given (simulated oracle, HTTP channel, recorded log), and applies
the decisions before training resumes.
"""

from __future__ import annotations

import enum
import queue as queue_mod
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from . import labeling, learner
from .core import (Decision, Hyperparameters, Pool, SampleStatus,
                   all_negative, positive_index, single_positive)
from .curriculum import CurriculumState
from .learner import (SgdConfig, SgdOptimizer, TrainingDivergedError,
                      assignment_weights)
from .oracle import BUDGET_EXHAUSTED, SimulatedAnnotator
from .solver import Membership, compute_epsilon, solve_batch


class Mode(enum.Enum):
    ASM = "asm"
    SL_ONLY = "sl_only"
    AL_ONLY = "al_only"
    RAND = "rand"
    SL_THEN_AL = "sl_then_al"
    AL_THEN_SL = "al_then_sl"


_TWO_PHASE = (Mode.SL_THEN_AL, Mode.AL_THEN_SL)


@dataclass
class Strategy:
    mode: Mode
    annotation_budget: int
    phase_switch: Optional[int] = None   # iteration count for the two-phase modes

    def __post_init__(self):
        if isinstance(self.mode, str):
            self.mode = Mode(self.mode)
        if self.annotation_budget < 0:
            raise ValueError("annotation_budget must be >= 0")
        if self.mode in _TWO_PHASE and self.phase_switch is None:
            raise ValueError(f"mode {self.mode.value} requires phase_switch")
        if self.mode not in _TWO_PHASE and self.phase_switch is not None:
            raise ValueError("phase_switch only applies to two-phase modes")


@dataclass
class EngineConfig:
    minibatches_per_round: int = 50
    max_rounds: int = 40
    max_iterations: int = 100_000
    warmup_iterations: int = 200        # seed-only steps before mining starts
    queue_patience: int = 3             # empty annotation rounds before stopping
    sgd: SgdConfig = field(default_factory=SgdConfig)
    model: str = "linear"               # "linear" | "mlp"
    hidden_units: int = 32
    standardize: bool = True            # z-score features from pool statistics
    init_checkpoint: Optional[str] = None

    def __post_init__(self):
        if self.minibatches_per_round < 1:
            raise ValueError("minibatches_per_round must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.warmup_iterations < 0:
            raise ValueError("warmup_iterations must be >= 0")
        if self.queue_patience < 1:
            raise ValueError("queue_patience must be >= 1")
        if self.model not in ("linear", "mlp"):
            raise ValueError("model must be 'linear' or 'mlp'")


@dataclass
class QueueItem:
    sample_id: int
    features: np.ndarray
    predictions: np.ndarray
    total_loss: float

    def to_json_dict(self) -> dict:
        return {
            "sample_id": int(self.sample_id),
            "features": [float(x) for x in self.features],
            "predictions": [float(p) for p in self.predictions],
            "total_loss": float(self.total_loss),
        }


class StopReason(enum.Enum):
    QUEUE_EMPTY = "queue_empty"
    BUDGET_EXHAUSTED = "budget_exhausted"
    STOPPED_BY_CAP = "stopped_by_cap"
    MAX_ROUNDS = "max_rounds"
    DIVERGED = "diverged"


def _fmt(x: float) -> str:
    return f"{x:.10g}"


@dataclass
class RunMetrics:
    """Per-iteration history plus run-level tallies."""

    m: int
    rows: list = field(default_factory=list)
    val_history: list = field(default_factory=list)
    stop_reason: Optional[StopReason] = None
    seed_count: int = 0
    annotated_total: int = 0
    rejected_total: int = 0
    queries_used: int = 0
    unique_pseudo_ids: set = field(default_factory=set)
    final_round_pseudo: dict = field(default_factory=dict)
    final_test_accuracy: float = float("nan")
    aborted: bool = False

    CSV_PREFIX = ("iteration", "annotated", "rejected", "pseudo", "discarded",
                  "test_acc")

    def add_row(self, iteration: int, annotated: int, rejected: int,
                pseudo: int, discarded: int, test_acc: float,
                lam: np.ndarray) -> None:
        self.rows.append((iteration, annotated, rejected, pseudo, discarded,
                          test_acc, tuple(lam)))

    @property
    def pseudo_total(self) -> int:
        return sum(r[3] for r in self.rows)

    def to_csv_text(self) -> str:
        header = list(self.CSV_PREFIX) + [f"lambda_{j}" for j in range(self.m)]
        lines = [",".join(header)]
        for it, ann, rej, pseudo, disc, acc, lam in self.rows:
            cells = [str(it), str(ann), str(rej), str(pseudo), str(disc),
                     _fmt(acc)] + [_fmt(v) for v in lam]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "iterations": self.rows[-1][0] if self.rows else 0,
            "stop_reason": self.stop_reason.value if self.stop_reason else None,
            "aborted": self.aborted,
            "seed_count": self.seed_count,
            "annotated_total": self.annotated_total,
            "rejected_total": self.rejected_total,
            "queries_used": self.queries_used,
            "unique_pseudo_count": len(self.unique_pseudo_ids),
            "pseudo_assignments": self.pseudo_total,
            "final_test_accuracy": self.final_test_accuracy,
            "final_round_pseudo": {str(k): int(v)
                                   for k, v in sorted(self.final_round_pseudo.items())},
            "validation_history": [
                {"iteration": it, "per_class": [float(a) for a in accs]}
                for it, accs in self.val_history],
        }


class OracleAnnotationSource:
    """Synchronous source backed by the simulated annotator."""

    def __init__(self, annotator: SimulatedAnnotator) -> None:
        self.annotator = annotator

    def collect(self, items: Iterable[QueueItem],
                budget_left: int) -> Iterator[tuple[int, Decision]]:
        answered = 0
        for item in items:
            if answered >= budget_left:
                return
            result = self.annotator.annotate(item.sample_id)
            if result is BUDGET_EXHAUSTED:
                return
            answered += 1
            yield item.sample_id, result


class MiningEngine:
    """Owns the model, the curriculum, and the training loop."""

    def __init__(self, pool: Pool, hyper: Hyperparameters, strategy: Strategy,
                 config: EngineConfig,
                 seed_decisions: list[tuple[int, Decision]],
                 val_features: Optional[np.ndarray] = None,
                 val_truth: Optional[np.ndarray] = None,
                 test_features: Optional[np.ndarray] = None,
                 test_truth: Optional[np.ndarray] = None):
        self.pool = pool
        self.hyper = hyper
        self.strategy = strategy
        self.config = config
        self.val_features = val_features
        self.val_truth = val_truth
        self.test_features = test_features
        self.test_truth = test_truth

        seeds = np.random.SeedSequence(hyper.seed).spawn(3)
        self._shuffle_rng = np.random.default_rng(seeds[0])
        self._queue_rng = np.random.default_rng(seeds[1])
        self._init_rng = np.random.default_rng(seeds[2])

        # The model trains on z-scored features so the default SGD
        # settings behave across pools of any raw scale; published queue
        # items keep the raw coordinates.
        if config.standardize:
            mu = pool.features.mean(axis=0)
            sd = pool.features.std(axis=0)
            sd = np.where(sd < 1e-8, 1.0, sd)
        else:
            mu = np.zeros(pool.dim)
            sd = np.ones(pool.dim)
        self._scale = (mu, sd)
        self._X = (pool.features - mu) / sd
        self._val_X = None if val_features is None else \
            (np.asarray(val_features, dtype=float) - mu) / sd
        self._test_X = None if test_features is None else \
            (np.asarray(test_features, dtype=float) - mu) / sd

        pool.init_labels(hyper.m)
        labeled = [(i, d.category) for i, d in seed_decisions if not d.is_reject]
        rejected = [i for i, d in seed_decisions if d.is_reject]
        self.curriculum = CurriculumState.init(hyper, labeled)
        for sample_id, category in labeled:
            self._apply_annotation(sample_id, category)
        for sample_id in rejected:
            self.curriculum.commit_rejection(sample_id)
            self._apply_rejection(sample_id)

        if config.init_checkpoint:
            self.params = learner.load_checkpoint(config.init_checkpoint)
            if self.params.input_dim != pool.dim or self.params.n_classes != hyper.m:
                raise ValueError("checkpoint dimensions do not match the pool")
        elif config.model == "linear":
            self.params = learner.init_linear(pool.dim, hyper.m, self._init_rng)
        else:
            self.params = learner.init_mlp(pool.dim, hyper.m,
                                           config.hidden_units, self._init_rng)
        self.optimizer = SgdOptimizer(config.sgd)

        self.metrics = RunMetrics(m=hyper.m)
        self.metrics.seed_count = len(seed_decisions)
        self.iteration = 0
        self.decisions: dict[int, Decision] = {}
        self._pending = None            # (X, labels, weights) for next step
        self._epoch_order: list[int] = []
        self._published_queue: list[QueueItem] = []
        self._commit_channel = None     # drained between mini-batches
        self._state = "running"
        self._status_lock = threading.Lock()
        self._status: dict = {}
        self._publish_status()

    def attach_commit_channel(self, channel) -> None:
        """Register the serialized channel late decisions arrive over.

        Decisions an annotation round did not live to consume are applied
        between subsequent mini-batches instead of being dropped.
        """
        self._commit_channel = channel

    def _drain_commits(self) -> None:
        if self._commit_channel is None:
            return
        while True:
            try:
                sample_id, decision = self._commit_channel.get_nowait()
            except queue_mod.Empty:
                return
            if self.budget_remaining > 0:
                self.apply_decision(sample_id, decision)

    # -- public snapshots (safe to call from other threads) -----------------

    def status(self) -> dict:
        with self._status_lock:
            return dict(self._status)

    def queue_snapshot(self) -> list[QueueItem]:
        with self._status_lock:
            return [item for item in self._published_queue
                    if item.sample_id not in self.decisions]

    def decision_for(self, sample_id: int) -> Optional[Decision]:
        with self._status_lock:
            return self.decisions.get(sample_id)

    def _publish_status(self) -> None:
        test_acc = self.metrics.rows[-1][5] if self.metrics.rows else float("nan")
        snapshot = {
            "iteration": self.iteration,
            "annotated": len(self.curriculum.annotations),
            "rejected": len(self.curriculum.rejections),
            "pseudo": len(self.metrics.unique_pseudo_ids),
            "budget_remaining": self.budget_remaining,
            "test_accuracy": None if np.isnan(test_acc) else float(test_acc),
            "state": self._state,
        }
        with self._status_lock:
            self._status = snapshot

    @property
    def budget_remaining(self) -> int:
        return self.strategy.annotation_budget - self.metrics.queries_used

    # -- phase logic ---------------------------------------------------------

    def _pseudo_active(self) -> bool:
        mode = self.strategy.mode
        if mode in (Mode.ASM, Mode.SL_ONLY):
            return True
        if mode is Mode.SL_THEN_AL:
            return self.iteration < self.strategy.phase_switch
        if mode is Mode.AL_THEN_SL:
            return self.iteration >= self.strategy.phase_switch
        return False

    def _annotation_active(self) -> bool:
        mode = self.strategy.mode
        if mode in (Mode.ASM, Mode.AL_ONLY, Mode.RAND):
            return True
        if mode is Mode.SL_THEN_AL:
            return self.iteration >= self.strategy.phase_switch
        if mode is Mode.AL_THEN_SL:
            return self.iteration < self.strategy.phase_switch
        return False

    def _may_still_annotate_later(self) -> bool:
        """True while a later phase could still request annotations."""
        return (self.strategy.mode is Mode.AL_THEN_SL
                and self.iteration < self.strategy.phase_switch)

    # -- commits -------------------------------------------------------------

    def _apply_annotation(self, sample_id: int, category: int) -> None:
        self.pool.labels[sample_id] = single_positive(self.hyper.m, category)
        self.pool.statuses[sample_id] = SampleStatus.ANNOTATED

    def _apply_rejection(self, sample_id: int) -> None:
        self.pool.labels[sample_id] = all_negative(self.hyper.m)
        self.pool.statuses[sample_id] = SampleStatus.REJECTED

    def apply_decision(self, sample_id: int, decision: Decision) -> bool:
        """Commit one annotator decision; returns False on duplicates."""
        if sample_id in self.decisions:
            return False
        if decision.is_reject:
            self.curriculum.commit_rejection(sample_id)
            self._apply_rejection(sample_id)
        else:
            self.curriculum.commit_annotation(sample_id, decision.category)
            self._apply_annotation(sample_id, decision.category)
        self.decisions[sample_id] = decision
        self.metrics.queries_used += 1
        return True

    # -- batching ------------------------------------------------------------

    def _next_batch(self) -> np.ndarray:
        size = self.config.sgd.batch_size
        if len(self._epoch_order) < size:
            self._epoch_order.extend(
                self._shuffle_rng.permutation(len(self.pool)).tolist())
        batch, self._epoch_order = (self._epoch_order[:size],
                                    self._epoch_order[size:])
        return np.asarray(batch, dtype=int)

    def _annotated_only_pending(self, batch_ids: np.ndarray):
        is_annotated = np.array(
            [i in self.curriculum.annotations for i in batch_ids])
        ids = batch_ids[is_annotated]
        if len(ids) == 0:
            return None
        return (self._X[ids], self.pool.labels[ids],
                np.ones((len(ids), self.hyper.m)))

    # -- the inner step ------------------------------------------------------

    def minibatch_step(self, batch_ids: np.ndarray) -> dict:
        """Fine-tune on the previous assignment set, then re-assign the batch."""
        if len(batch_ids) == 0:
            return {"pseudo": 0, "discarded": 0, "flagged": 0, "trained": 0}

        pending = self._pending
        if pending is None:
            pending = self._annotated_only_pending(batch_ids)
        trained = 0
        if pending is not None and len(pending[0]) > 0:
            self.params = self.optimizer.step(self.params, *pending)
            trained = len(pending[0])

        feats = self._X[batch_ids]
        labels = self.pool.labels[batch_ids]
        phi = learner.predict(self.params, feats)
        losses = learner.loss_matrix(labels, phi)
        membership = self.curriculum.membership_array(batch_ids)
        epsilon = compute_epsilon(losses, self.curriculum.lam)
        gamma = self.curriculum.current_gamma()
        u, v, discarded = solve_batch(losses, gamma, self.curriculum.lam,
                                      epsilon, membership)

        annotated_mask = np.array(
            [mem is Membership.IN_A for mem in membership])
        rejected_mask = np.array(
            [mem is Membership.IN_B for mem in membership])
        ambiguous = labeling.ambiguous_mask(phi)

        n_pseudo = 0
        if self._pseudo_active():
            pseudo_labels, has_weight = labeling.assign_labels_batch(phi, v)
            eligible = ((u == 0) & ~discarded & ~annotated_mask
                        & ~rejected_mask & ~ambiguous & has_weight)
        else:
            pseudo_labels = None
            eligible = np.zeros(len(batch_ids), dtype=bool)

        # Assemble the training set the *next* step consumes: annotated
        # members at unit weight plus freshly pseudo-labeled members at
        # their solver weights.
        train_labels = self.pool.labels[batch_ids].copy()
        if pseudo_labels is not None:
            train_labels[eligible] = pseudo_labels[eligible]
        u_eff = u.copy()
        u_eff[~eligible & ~annotated_mask] = 1   # excluded from training
        u_eff[eligible] = 0
        weights = assignment_weights(u_eff, v, discarded, annotated_mask)
        keep = weights.sum(axis=1) > 0
        self._pending = (feats[keep], train_labels[keep], weights[keep])

        for idx in np.flatnonzero(eligible):
            sample_id = int(batch_ids[idx])
            n_pseudo += 1
            self.metrics.unique_pseudo_ids.add(sample_id)
            self.metrics.final_round_pseudo[sample_id] = positive_index(
                pseudo_labels[idx])
            self.pool.statuses[sample_id] = SampleStatus.PSEUDO
        free = ~annotated_mask & ~rejected_mask
        for idx in np.flatnonzero(free & discarded):
            self.pool.statuses[int(batch_ids[idx])] = SampleStatus.MARGIN_SKIPPED
        for idx in np.flatnonzero(free & ~discarded & ~eligible):
            self.pool.statuses[int(batch_ids[idx])] = SampleStatus.UNLABELED

        return {
            "pseudo": n_pseudo,
            "discarded": int(np.sum(discarded & free)),
            "flagged": int(np.sum((u == 1) & free)),
            "trained": trained,
        }

    # -- the AL queue ---------------------------------------------------------

    def _free_ids(self) -> np.ndarray:
        taken = set(self.curriculum.annotations) | self.curriculum.rejections
        return np.array([i for i in range(len(self.pool)) if i not in taken],
                        dtype=int)

    def build_al_queue(self) -> list[QueueItem]:
        """Annotation candidates, most uncertain first."""
        free = self._free_ids()
        if len(free) == 0 or not self._annotation_active():
            return []
        k = self.hyper.al_batch_size

        feats = self._X[free]
        phi = learner.predict(self.params, feats)
        losses = learner.loss_matrix(self.pool.labels[free], phi)
        total = losses.sum(axis=1)

        if self.strategy.mode is Mode.RAND:
            chosen = self._queue_rng.choice(
                len(free), size=min(k, len(free)), replace=False)
            order = chosen
        else:
            epsilon = compute_epsilon(losses, self.curriculum.lam)
            gamma = self.curriculum.current_gamma()
            flagged = total > gamma / (1.0 - epsilon)
            ambiguous = labeling.ambiguous_mask(phi)
            candidates = np.flatnonzero(flagged | ambiguous)
            if len(candidates) == 0:
                return []
            by_loss = candidates[np.argsort(-total[candidates], kind="stable")]
            order = by_loss[:k]

        return [QueueItem(sample_id=int(free[i]),
                          features=self.pool.features[free[i]].copy(),
                          predictions=phi[i].copy(),
                          total_loss=float(total[i]))
                for i in order]

    # -- evaluation -----------------------------------------------------------

    def _test_accuracy(self) -> float:
        if self._test_X is None or len(self._test_X) == 0:
            return float("nan")
        return learner.overall_accuracy(self.params, self._test_X,
                                        self.test_truth)

    def _maybe_update_lambda(self) -> None:
        if self.iteration % self.hyper.beta != 0:
            return
        if self._val_X is None or len(self._val_X) == 0:
            return
        accs = learner.validation_accuracy(self.params, self._val_X,
                                           self.val_truth)
        self.curriculum.update_lambda(accs, self.hyper.alpha, self.hyper.tau)
        self.metrics.val_history.append((self.iteration,
                                         [float(a) for a in accs]))

    # -- the outer loop ---------------------------------------------------------

    def _warmup(self) -> None:
        """Fit the fresh model to the seed annotations before mining.

        The desk-scale stand-in for starting from a pre-trained network:
        the first assignment pass should not run on random-initialization
        confidences."""
        seed_ids = np.fromiter(self.curriculum.annotations, dtype=int)
        if len(seed_ids) == 0:
            return
        size = self.config.sgd.batch_size
        order: list[int] = []
        for _ in range(self.config.warmup_iterations):
            if len(order) < size:
                order.extend(seed_ids[
                    self._shuffle_rng.permutation(len(seed_ids))].tolist())
            batch, order = np.asarray(order[:size], dtype=int), order[size:]
            self.params = self.optimizer.step(
                self.params, self._X[batch],
                self.pool.labels[batch],
                np.ones((len(batch), self.hyper.m)))

    def run(self, source) -> RunMetrics:
        """Alternate mini-batch training with annotation rounds until done."""
        try:
            self._warmup()
            self._run_loop(source)
        except TrainingDivergedError:
            self.metrics.stop_reason = StopReason.DIVERGED
            self.metrics.aborted = True
        self._state = "done"
        self.metrics.annotated_total = len(self.curriculum.annotations)
        self.metrics.rejected_total = len(self.curriculum.rejections)
        self.metrics.final_test_accuracy = (
            self.metrics.rows[-1][5] if self.metrics.rows else float("nan"))
        self._publish_status()
        return self.metrics

    def _run_loop(self, source) -> None:
        dry_rounds = 0
        for _ in range(self.config.max_rounds):
            self.metrics.final_round_pseudo.clear()
            for _ in range(self.config.minibatches_per_round):
                if self.iteration >= self.config.max_iterations:
                    self.metrics.stop_reason = StopReason.STOPPED_BY_CAP
                    return
                summary = self.minibatch_step(self._next_batch())
                self.iteration += 1
                self.curriculum.iteration = self.iteration
                self._drain_commits()
                self._maybe_update_lambda()
                self.metrics.add_row(
                    self.iteration, len(self.curriculum.annotations),
                    len(self.curriculum.rejections), summary["pseudo"],
                    summary["discarded"], self._test_accuracy(),
                    self.curriculum.lam)
                self._publish_status()

            if not self._annotation_active():
                continue

            if self.budget_remaining <= 0:
                if self._may_still_annotate_later():
                    continue
                self.metrics.stop_reason = StopReason.BUDGET_EXHAUSTED
                return
            queue = self.build_al_queue()
            if not queue:
                if self._may_still_annotate_later():
                    continue
                # One dry snapshot of a moving model is not convergence;
                # stop only once the queue stays empty round after round.
                dry_rounds += 1
                if dry_rounds >= self.config.queue_patience:
                    self.metrics.stop_reason = StopReason.QUEUE_EMPTY
                    return
                continue
            dry_rounds = 0

            with self._status_lock:
                self._published_queue = queue
            self._state = "awaiting_labels"
            self._publish_status()
            self._pending = None     # round boundary: pseudo-labels expire
            for sample_id, decision in source.collect(queue,
                                                      self.budget_remaining):
                self.apply_decision(sample_id, decision)
                self._publish_status()
            with self._status_lock:
                self._published_queue = []
            self._state = "running"
            self._publish_status()

        self.metrics.stop_reason = StopReason.MAX_ROUNDS
