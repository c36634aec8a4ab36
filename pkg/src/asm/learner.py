"""Shared-parameter model with m independent logistic heads.

Heads are one-vs-rest on purpose: a sample every head rejects lands in the
undefined category, which softmax could never express.  Two representations
are supported, a linear map and a one-hidden-layer ReLU network, both
trained by momentum SGD on the weighted per-class log loss

    sum_i sum_j w_ij * l(y_ij, phi_j(x_i))

where annotated samples carry unit weights and self-labeled samples carry
their solver weights.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .core import UNDEFINED

PROB_CLIP = 1e-7
CHECKPOINT_MAGIC = b"ASMW"


class TrainingDivergedError(RuntimeError):
    """Raised when the objective or its gradient stops being finite."""


@dataclass
class SgdConfig:
    learning_rate: float = 0.001
    weight_decay: float = 0.0005
    momentum: float = 0.9
    batch_size: int = 32

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class ModelParameters:
    """Either a linear map (W, b) or a one-hidden-layer ReLU net."""

    kind: str                                   # "linear" | "mlp"
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        key = "W" if self.kind == "linear" else "W1"
        return self.arrays[key].shape[0]

    @property
    def n_classes(self) -> int:
        key = "W" if self.kind == "linear" else "W2"
        return self.arrays[key].shape[1]

    def copy(self) -> "ModelParameters":
        return ModelParameters(self.kind,
                               {k: v.copy() for k, v in self.arrays.items()})


def init_linear(d: int, m: int, rng: np.random.Generator,
                scale: float = 0.01) -> ModelParameters:
    return ModelParameters("linear", {
        "W": rng.normal(0.0, scale, size=(d, m)),
        "b": np.zeros(m),
    })


def init_mlp(d: int, m: int, hidden: int, rng: np.random.Generator,
             scale: float = 0.5) -> ModelParameters:
    return ModelParameters("mlp", {
        "W1": rng.normal(0.0, scale, size=(d, hidden)),
        "b1": np.zeros(hidden),
        "W2": rng.normal(0.0, scale, size=(hidden, m)),
        "b2": np.zeros(m),
    })


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward(params: ModelParameters, X: np.ndarray):
    """Logits plus the hidden activation needed for backprop."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.shape[1] != params.input_dim:
        raise ValueError(
            f"feature dim {X.shape[1]} does not match model ({params.input_dim})")
    if params.kind == "linear":
        return X @ params.arrays["W"] + params.arrays["b"], X, None
    hidden = np.maximum(0.0, X @ params.arrays["W1"] + params.arrays["b1"])
    return hidden @ params.arrays["W2"] + params.arrays["b2"], X, hidden


def predict(params: ModelParameters, X: np.ndarray) -> np.ndarray:
    """Per-head probabilities, clipped into the open interval (0, 1)."""
    logits, _, _ = _forward(params, X)
    phi = _sigmoid(logits)
    out = np.clip(phi, PROB_CLIP, 1.0 - PROB_CLIP)
    return out[0] if np.asarray(X).ndim == 1 else out


def class_loss(y: int, phi: float) -> float:
    """Log loss of one head: -log(phi) for a positive, -log(1-phi) otherwise."""
    phi = min(max(float(phi), PROB_CLIP), 1.0 - PROB_CLIP)
    if y == 1:
        return -np.log(phi)
    if y == -1:
        return -np.log(1.0 - phi)
    raise ValueError("label must be -1 or +1")


def loss_matrix(labels: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Per-class losses for an (n, m) label matrix against predictions."""
    labels = np.asarray(labels, dtype=float)
    phi = np.clip(np.asarray(phi, dtype=float), PROB_CLIP, 1.0 - PROB_CLIP)
    targets = (1.0 + labels) / 2.0
    return -(targets * np.log(phi) + (1.0 - targets) * np.log(1.0 - phi))


def per_class_losses(params: ModelParameters, X: np.ndarray,
                     labels: np.ndarray) -> np.ndarray:
    return loss_matrix(labels, predict(params, X))


def weighted_objective(params: ModelParameters, X: np.ndarray,
                       labels: np.ndarray, weights: np.ndarray) -> float:
    """Weighted sum of per-class losses; an empty batch scores zero."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return 0.0
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (X.shape[0], np.asarray(labels).shape[1]):
        raise ValueError("weights shape must match (batch, classes)")
    return float(np.sum(weights * per_class_losses(params, X, labels)))


def objective_gradient(params: ModelParameters, X: np.ndarray,
                       labels: np.ndarray,
                       weights: np.ndarray) -> dict[str, np.ndarray]:
    """Analytic gradient of the weighted objective w.r.t. every array."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return {k: np.zeros_like(v) for k, v in params.arrays.items()}
    labels = np.asarray(labels, dtype=float)
    weights = np.asarray(weights, dtype=float)

    logits, X, hidden = _forward(params, X)
    phi = _sigmoid(logits)
    targets = (1.0 + labels) / 2.0
    g = weights * (phi - targets)            # d objective / d logits
    if params.kind == "linear":
        return {"W": X.T @ g, "b": g.sum(axis=0)}
    g_hidden = (g @ params.arrays["W2"].T) * (hidden > 0)
    return {
        "W1": X.T @ g_hidden,
        "b1": g_hidden.sum(axis=0),
        "W2": hidden.T @ g,
        "b2": g.sum(axis=0),
    }


class SgdOptimizer:
    """Plain momentum SGD with decoupled-from-nothing weight decay: the
    decay term is added to the gradient before the velocity update."""

    def __init__(self, config: SgdConfig):
        self.config = config
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params: ModelParameters, X: np.ndarray, labels: np.ndarray,
             weights: np.ndarray) -> ModelParameters:
        grads = objective_gradient(params, X, labels, weights)
        new_arrays = {}
        for key, value in params.arrays.items():
            g = grads[key] + self.config.weight_decay * value
            if not np.all(np.isfinite(g)):
                raise TrainingDivergedError(f"non-finite gradient in {key}")
            vel = self.velocity.get(key)
            vel = g if vel is None else self.config.momentum * vel + g
            self.velocity[key] = vel
            new_arrays[key] = value - self.config.learning_rate * vel
        return ModelParameters(params.kind, new_arrays)


def sgd_step(params: ModelParameters, X: np.ndarray, labels: np.ndarray,
             weights: np.ndarray, config: SgdConfig) -> ModelParameters:
    """Single momentum-free-state step (fresh optimizer); handy in tests."""
    return SgdOptimizer(config).step(params, X, labels, weights)


def assignment_weights(u: np.ndarray, v: np.ndarray, discarded: np.ndarray,
                       annotated: np.ndarray) -> np.ndarray:
    """Training weights from latent assignments.

    Annotated rows weigh 1 on every class; self-labeled rows (u=0) weigh
    their solver v; annotation-flagged and margin-band rows contribute
    nothing this round.
    """
    u = np.asarray(u)
    v = np.asarray(v, dtype=float)
    discarded = np.asarray(discarded, dtype=bool)
    annotated = np.asarray(annotated, dtype=bool)
    if not (len(u) == len(v) == len(discarded) == len(annotated)):
        raise ValueError("assignment arrays must share one length")
    weights = np.where(((u == 0) & ~discarded)[:, np.newaxis], v, 0.0)
    weights[annotated] = 1.0
    return weights


def classify(params: ModelParameters, X: np.ndarray) -> np.ndarray:
    """Most confident head if it clears 0.5, else the undefined category."""
    phi = predict(params, np.asarray(X, dtype=float))
    best = np.argmax(phi, axis=1)
    confident = phi[np.arange(len(phi)), best] > 0.5
    return np.where(confident, best, UNDEFINED)


def overall_accuracy(params: ModelParameters, X: np.ndarray,
                     truth: np.ndarray) -> float:
    if len(X) == 0:
        raise ValueError("empty evaluation set")
    return float(np.mean(classify(params, X) == np.asarray(truth)))


def validation_accuracy(params: ModelParameters, X: np.ndarray,
                        truth: np.ndarray) -> np.ndarray:
    """Per-class accuracy of the one-vs-rest decision phi_j > 0.5."""
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise ValueError("empty validation set")
    truth = np.asarray(truth)
    phi = predict(params, X)
    m = phi.shape[1]
    decisions = phi > 0.5
    actual = truth[:, np.newaxis] == np.arange(m)[np.newaxis, :]
    return np.mean(decisions == actual, axis=0)


# ---------------------------------------------------------------------------
# Checkpoint format: b"ASMW" | kind tag (u8) | dims (u32 LE) | float64 LE data
# ---------------------------------------------------------------------------

_KIND_TAGS = {"linear": 0, "mlp": 1}
_ARRAY_ORDER = {"linear": ("W", "b"), "mlp": ("W1", "b1", "W2", "b2")}


def save_checkpoint(params: ModelParameters, path) -> None:
    kind = params.kind
    if kind == "linear":
        dims = (params.arrays["W"].shape[0], params.arrays["W"].shape[1])
    else:
        dims = (params.arrays["W1"].shape[0], params.arrays["W1"].shape[1],
                params.arrays["W2"].shape[1])
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<B", _KIND_TAGS[kind]))
        fh.write(struct.pack("<B", len(dims)))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        for key in _ARRAY_ORDER[kind]:
            fh.write(params.arrays[key].astype("<f8").tobytes())


def load_checkpoint(path) -> ModelParameters:
    with open(path, "rb") as fh:
        if fh.read(4) != CHECKPOINT_MAGIC:
            raise ValueError("not a model checkpoint (bad magic)")
        tag = struct.unpack("<B", fh.read(1))[0]
        ndims = struct.unpack("<B", fh.read(1))[0]
        dims = struct.unpack(f"<{ndims}I", fh.read(4 * ndims))
        kind = {v: k for k, v in _KIND_TAGS.items()}.get(tag)
        if kind is None or (kind == "linear") != (ndims == 2):
            raise ValueError("corrupt checkpoint header")
        if kind == "linear":
            d, m = dims
            shapes = {"W": (d, m), "b": (m,)}
        else:
            d, h, m = dims
            shapes = {"W1": (d, h), "b1": (h,), "W2": (h, m), "b2": (m,)}
        arrays = {}
        for key in _ARRAY_ORDER[kind]:
            shape = shapes[key]
            count = int(np.prod(shape))
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError("truncated checkpoint")
            arrays[key] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return ModelParameters(kind, arrays)
