"""Per-sample min-max assignment of annotation flags and pseudo-label weights.

Each free sample x with per-class losses l solves

    max_{u in {0,1}}  min_{v in [0,eps]^m}
        sum_j max(u, v_j) l_j  -  gamma u  +  sum_j (lambda_j / 2)(v_j^2 - 2 v_j)

which has a threshold closed form in S = sum_j l_j:

    S > gamma / (1 - eps)  ->  u = 1, v = eps        (query a human)
    S < gamma              ->  u = 0, v per class:   (weight for self-labeling)
                                 v_j = 0             if l_j > lambda_j
                                 v_j = 1 - l_j/lambda_j
                                                     if lambda_j(1-eps) <= l_j <= lambda_j
                                 v_j = eps           if l_j < lambda_j(1-eps)
    gamma <= S <= gamma/(1-eps)  ->  inside the margin band; the sample is
                                     discarded for this selection round.

Samples already annotated (IN_A) or rejected (IN_B) are frozen to (1, 0^m)
and (0, 0^m) respectively.  A brute-force grid/fixed-point oracle is kept
alongside the closed form so the two can be cross-checked on random inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import validate_loss_matrix

EPSILON_MIN = 0.01
EPSILON_MAX = 0.99


class Membership(enum.Enum):
    FREE = "free"
    IN_A = "in_a"
    IN_B = "in_b"


@dataclass(frozen=True)
class LatentAssignment:
    u: int                  # 1 = flagged for human annotation
    v: np.ndarray           # per-class pseudo-label weights in [0, eps]
    discarded: bool = False # margin-band member, skipped this round

    def selector(self) -> np.ndarray:
        """Per-class selector max(u, v_j): 1 routes to annotation, v_j weighs
        the self-labeling loss."""
        return np.maximum(self.u, self.v)


def compute_epsilon(losses: np.ndarray, lam: np.ndarray) -> float:
    """Adaptive weight ceiling: max over all (sample, class) of 1 - l/lambda.

    Clamped into [EPSILON_MIN, EPSILON_MAX] so the margin band
    [gamma, gamma/(1-eps)] stays finite and non-degenerate.
    """
    losses = validate_loss_matrix(losses)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("all lambda entries must be > 0")
    raw = np.max(1.0 - losses / lam[np.newaxis, :])
    return float(np.clip(raw, EPSILON_MIN, EPSILON_MAX))


def _check_inputs(losses_i, lam, gamma, epsilon):
    losses_i = np.asarray(losses_i, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(losses_i)):
        raise ValueError("losses must be finite")
    if np.any(losses_i < 0):
        raise ValueError("losses must be non-negative")
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if np.any(lam <= 0):
        raise ValueError("all lambda entries must be > 0")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return losses_i, lam


def weights_given_self_labeled(losses_i: np.ndarray, lam: np.ndarray,
                               epsilon: float) -> np.ndarray:
    """Optimal v for a u=0 sample: per-class piecewise-linear in the loss."""
    losses_i = np.asarray(losses_i, dtype=float)
    lam = np.asarray(lam, dtype=float)
    v = 1.0 - losses_i / lam
    v[losses_i > lam] = 0.0
    v[losses_i < lam * (1.0 - epsilon)] = epsilon
    return v


def solve_sample(losses_i: np.ndarray, gamma: float, lam: np.ndarray,
                 epsilon: float,
                 membership: Membership = Membership.FREE) -> LatentAssignment:
    """Closed-form assignment for one sample (see module docstring)."""
    losses_i, lam = _check_inputs(losses_i, lam, gamma, epsilon)
    m = len(losses_i)
    if membership is Membership.IN_A:
        return LatentAssignment(u=1, v=np.zeros(m))
    if membership is Membership.IN_B:
        return LatentAssignment(u=0, v=np.zeros(m))

    total = float(np.sum(losses_i))
    if total > gamma / (1.0 - epsilon):
        return LatentAssignment(u=1, v=np.full(m, epsilon))
    if total < gamma:
        return LatentAssignment(
            u=0, v=weights_given_self_labeled(losses_i, lam, epsilon))
    # Boundary values fall in the band as well: the closed form only covers
    # the open set outside [gamma, gamma/(1-eps)].
    return LatentAssignment(u=0, v=np.zeros(m), discarded=True)


def solve_batch(losses: np.ndarray, gamma: float, lam: np.ndarray,
                epsilon: float, membership: np.ndarray):
    """Vectorized solve over an n-by-m loss matrix.

    membership holds Membership values per row.  Returns (u, v, discarded)
    arrays of shapes (n,), (n, m), (n,).
    """
    losses = validate_loss_matrix(losses)
    n, m = losses.shape
    lam = np.asarray(lam, dtype=float)
    membership = np.asarray(membership, dtype=object)

    total = losses.sum(axis=1)
    u = np.zeros(n, dtype=np.int8)
    v = np.zeros((n, m))
    discarded = np.zeros(n, dtype=bool)

    free = np.array([mem is Membership.FREE for mem in membership])
    in_a = np.array([mem is Membership.IN_A for mem in membership])

    u[in_a] = 1
    hi = free & (total > gamma / (1.0 - epsilon))
    lo = free & (total < gamma)
    band = free & ~hi & ~lo

    u[hi] = 1
    v[hi] = epsilon
    if np.any(lo):
        vw = 1.0 - losses[lo] / lam[np.newaxis, :]
        vw[losses[lo] > lam[np.newaxis, :]] = 0.0
        vw[losses[lo] < (lam * (1.0 - epsilon))[np.newaxis, :]] = epsilon
        v[lo] = vw
    discarded[band] = True
    return u, v, discarded


# ---------------------------------------------------------------------------
# Brute-force verification oracle
# ---------------------------------------------------------------------------

def _instance_energy(u: int, v: np.ndarray, losses_i: np.ndarray,
                     gamma: float, lam: np.ndarray) -> float:
    """The per-sample saddle objective evaluated at an explicit (u, v)."""
    selector = np.maximum(u, v)
    return float(np.sum(selector * losses_i) - gamma * u
                 + 0.5 * np.sum(lam * (v * v - 2.0 * v)))


def _grid_min_v(u: int, losses_i: np.ndarray, gamma: float, lam: np.ndarray,
                epsilon: float, grid_step: float) -> tuple[np.ndarray, float]:
    """Minimize the energy over v on a uniform grid of [0, eps]^m.

    The energy separates across classes once u is fixed, so the joint grid
    minimum equals the per-class grid minimum; evaluating class by class
    keeps the search exact while avoiding the |grid|^m blow-up.
    """
    n_steps = int(np.floor(epsilon / grid_step))
    grid = np.concatenate([np.arange(n_steps + 1) * grid_step, [epsilon]])
    grid = np.unique(np.clip(grid, 0.0, epsilon))
    # Per class: max(u, v) * l + (lam/2)(v^2 - 2v) over the grid.
    sel = np.maximum(u, grid[np.newaxis, :])                    # (m, G)
    energy = (sel * losses_i[:, np.newaxis]
              + 0.5 * lam[:, np.newaxis] * (grid[np.newaxis, :] ** 2
                                            - 2.0 * grid[np.newaxis, :]))
    best = np.argmin(energy, axis=1)
    v_best = grid[best]
    total = float(np.sum(energy[np.arange(len(losses_i)), best])) - gamma * u
    return v_best, total


def _best_u_given_v(v: np.ndarray, losses_i: np.ndarray, gamma: float,
                    lam: np.ndarray) -> int:
    e1 = _instance_energy(1, v, losses_i, gamma, lam)
    e0 = _instance_energy(0, v, losses_i, gamma, lam)
    return 1 if e1 > e0 else 0


def _best_v_given_u(u: int, losses_i: np.ndarray, lam: np.ndarray,
                    epsilon: float) -> np.ndarray:
    if u == 1:
        # Energy in v reduces to sum (lam/2)(v^2-2v), decreasing on [0, eps].
        return np.full(len(losses_i), epsilon)
    return weights_given_self_labeled(losses_i, lam, epsilon)


def iterate_fixed_point(losses_i: np.ndarray, gamma: float, lam: np.ndarray,
                        epsilon: float, u0: int,
                        rounds: int = 2) -> tuple[list[int], np.ndarray]:
    """Alternate exact v- and u-updates from initialization u0.

    Returns the u trajectory (length `rounds`) and the final v.  Outside
    the margin band the trajectory stabilizes by the second step.
    """
    losses_i, lam = _check_inputs(losses_i, lam, gamma, epsilon)
    u = int(u0)
    trajectory = []
    v = np.zeros(len(losses_i))
    for _ in range(rounds):
        v = _best_v_given_u(u, losses_i, lam, epsilon)
        u = _best_u_given_v(v, losses_i, gamma, lam)
        trajectory.append(u)
    return trajectory, v


def brute_force_oracle(losses_i: np.ndarray, gamma: float, lam: np.ndarray,
                       epsilon: float,
                       grid_step: float = 1e-3) -> LatentAssignment:
    """Independent reference solution via exhaustive grid search.

    Evaluates the saddle energy for u in {0,1} with v minimized on a
    uniform grid of [0, eps]^m and keeps the u with the larger minimized
    energy.  Also runs the alternating fixed-point iteration from both
    initializations; if the two runs fail to stabilize on one u within two
    steps, the instance sits in the margin band and is reported discarded.
    """
    losses_i, lam = _check_inputs(losses_i, lam, gamma, epsilon)
    if not 0 < grid_step <= epsilon / 10.0:
        raise ValueError("grid_step must lie in (0, epsilon/10]")
    if len(losses_i) > 5:
        raise ValueError("oracle is limited to m <= 5")

    v0, e0 = _grid_min_v(0, losses_i, gamma, lam, epsilon, grid_step)
    v1, e1 = _grid_min_v(1, losses_i, gamma, lam, epsilon, grid_step)
    if e1 > e0:
        u_star, v_star = 1, v1
    else:
        u_star, v_star = 0, v0

    stable_u = []
    for u_init in (0, 1):
        traj, _ = iterate_fixed_point(losses_i, gamma, lam, epsilon, u_init)
        stable_u.append(traj[-1] if traj[-1] == traj[-2] else None)
    unstable = (stable_u[0] is None or stable_u[1] is None
                or stable_u[0] != stable_u[1])
    return LatentAssignment(u=u_star, v=v_star, discarded=unstable)
