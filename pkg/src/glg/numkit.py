"""Dense numeric kernel: pseudoinverse, least squares, Adam, assignment, RNG.

Everything runs in float64. All randomness flows through an explicit
``numpy.random.Generator`` so that a seed fully determines every draw.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NumericError, ShapeError

__all__ = [
    "AdamState",
    "adam_step",
    "as_matrix",
    "hungarian_assign",
    "least_squares",
    "make_rng",
    "pseudoinverse",
    "sample_bernoulli",
    "sample_gaussian",
    "sample_uniform_int",
]

# Relative singular-value cutoff. The closed-form recoveries assume exact
# rank, so the default is tight rather than the usual eps*max(m,n).
DEFAULT_PINV_TOL = 1e-10


def as_matrix(a, name="matrix"):
    """Coerce to a 2-D float64 array and reject non-finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{name} contains NaN or Inf")
    return m


def pseudoinverse(m, tol=DEFAULT_PINV_TOL):
    """Moore-Penrose pseudoinverse via SVD.

    Singular values at or below ``tol * sigma_max`` are treated as zero.
    """
    m = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]))
    inv = np.where(s > tol * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return (vt.T * inv) @ u.T


def least_squares(a, b):
    """Minimum-norm solution of ``a @ x ~= b``."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"row mismatch: a has {a.shape[0]}, b has {b.shape[0]}")
    x, _, _, _ = np.linalg.lstsq(a, b, rcond=None)
    return x


@dataclass
class AdamState:
    """Adam moment buffers for one optimized variable."""

    lr: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)


def adam_step(state, var, grad):
    """One bias-corrected Adam update; returns the updated variable."""
    var = np.asarray(var, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if var.shape != grad.shape:
        raise ShapeError(f"variable {var.shape} vs gradient {grad.shape}")
    if state.m is None:
        state.m = np.zeros_like(var)
        state.v = np.zeros_like(var)
    if state.m.shape != var.shape:
        raise ShapeError(f"Adam buffers {state.m.shape} vs variable {var.shape}")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return var - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def hungarian_assign(cost):
    """Minimum-cost assignment of rows to columns of a square cost matrix.

    Returns ``perm`` with row ``i`` assigned to column ``perm[i]``.
    """
    cost = as_matrix(cost, "cost")
    if cost.shape[0] != cost.shape[1]:
        raise ShapeError(f"cost matrix must be square, got {cost.shape}")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm


def make_rng(seed):
    """Seeded generator; identical seed gives an identical draw sequence."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_gaussian(rng, rows, cols):
    """Matrix of i.i.d. standard-normal entries."""
    return rng.standard_normal((rows, cols))


def sample_bernoulli(rng, probs):
    """Entrywise Bernoulli draw; ``probs`` entries must lie in [0, 1]."""
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ValueError("bernoulli probabilities must lie in [0, 1]")
    return (rng.random(probs.shape) < probs).astype(np.float64)


def sample_uniform_int(rng, lo, hi):
    """Uniform integer in ``[lo, hi)``."""
    if hi <= lo:
        raise ValueError(f"empty range [{lo}, {hi})")
    return int(rng.integers(lo, hi))
