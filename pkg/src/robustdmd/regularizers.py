"""Constraint and regularization terms with their prox operators.

Three pieces: a half-plane bound on the real parts of the exponents, the
capped-simplex constraint on the trimming weights, and an optional smooth
separable penalty on the coefficient columns (zero by default).
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import InvalidConfigError, InvalidInputError


@dataclass(frozen=True)
class HalfPlaneConstraint:
    """Feasible set ``real(alpha_j) <= gamma`` for every exponent."""

    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma):
            raise InvalidConfigError(f"gamma must be finite, got {self.gamma}")


@dataclass(frozen=True)
class CappedSimplex:
    """Weight set ``{0 <= w_j <= 1, sum_j w_j = h}`` for integer ``h >= 1``."""

    h: int

    def __post_init__(self):
        if int(self.h) != self.h or self.h < 1:
            raise InvalidConfigError(f"h must be a positive integer, got {self.h}")
        object.__setattr__(self, "h", int(self.h))


def _zero_value(b):
    return 0.0


def _zero_grad(b):
    return np.zeros_like(np.asarray(b, dtype=complex))


@dataclass(frozen=True)
class SmoothSeparableReg:
    """Smooth convex penalty applied independently to each coefficient column.

    ``value`` maps a k-vector to a real number; ``grad`` returns a complex
    k-vector whose real/imaginary parts are the partials with respect to the
    real/imaginary parts of the column.  The default is identically zero.
    """

    value: Callable[[np.ndarray], float] = _zero_value
    grad: Callable[[np.ndarray], np.ndarray] = _zero_grad

    @property
    def is_zero(self) -> bool:
        return self.value is _zero_value and self.grad is _zero_grad


ZERO_REG = SmoothSeparableReg()


def prox_halfplane(alpha: np.ndarray, constraint: HalfPlaneConstraint) -> np.ndarray:
    """Project exponents onto the shifted left half-plane.

    Clips real parts at ``gamma``; imaginary parts pass through.  Idempotent.
    """
    alpha = np.asarray(alpha, dtype=complex)
    _check_finite(alpha, "alpha")
    return np.minimum(alpha.real, constraint.gamma) + 1j * alpha.imag


def _check_finite(x, name):
    if not np.all(np.isfinite(np.asarray(x))):
        raise InvalidInputError(f"{name} contains non-finite entries")


def project_capped_simplex(w: np.ndarray, cap: CappedSimplex) -> np.ndarray:
    """Euclidean projection onto ``{0 <= w_j <= 1, sum w_j = h}``.

    The projection is ``clip(w - lam, 0, 1)`` for the Lagrange shift ``lam``
    solving ``sum_j clip(w_j - lam, 0, 1) = h``.  That sum is a continuous,
    piecewise-linear, nonincreasing function of ``lam`` with breakpoints at
    ``w_j - 1`` and ``w_j``, so the shift is found exactly by scanning the
    sorted breakpoints and interpolating within the crossing segment.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise InvalidInputError(f"weights must be 1-D, got shape {w.shape}")
    _check_finite(w, "weights")
    n = w.size
    h = cap.h
    if h > n:
        raise InvalidConfigError(f"h = {h} exceeds the number of columns ({n})")
    if h == n:
        return np.ones(n)

    bps = np.unique(np.concatenate([w - 1.0, w]))
    gvals = np.clip(w[None, :] - bps[:, None], 0.0, 1.0).sum(axis=1)
    # gvals is nonincreasing from n (at the left) to 0; locate the first
    # breakpoint where it drops to h or below.
    p = int(np.searchsorted(-gvals, -float(h), side="left"))
    if gvals[p] == h:
        lam = bps[p]
    else:
        g_hi, g_lo = gvals[p - 1], gvals[p]
        lam = bps[p - 1] + (g_hi - h) * (bps[p] - bps[p - 1]) / (g_hi - g_lo)
    return np.clip(w - lam, 0.0, 1.0)


def hard_select_weights(losses: np.ndarray, cap: CappedSimplex) -> np.ndarray:
    """0/1 weights keeping the ``h`` columns with the smallest losses.

    Ties are broken toward the lower column index so repeated runs are
    reproducible.
    """
    losses = np.asarray(losses, dtype=float)
    _check_finite(losses, "losses")
    n = losses.size
    if cap.h > n:
        raise InvalidConfigError(f"h = {cap.h} exceeds the number of columns ({n})")
    w = np.zeros(n)
    order = np.argsort(losses, kind="stable")
    w[order[: cap.h]] = 1.0
    return w


def prox_weight_update(w: np.ndarray, losses: np.ndarray, step: float, cap: CappedSimplex) -> np.ndarray:
    """One proximal step on the weights: project ``w - step * losses``."""
    if not (np.isfinite(step) and step > 0):
        raise InvalidInputError(f"step must be positive, got {step}")
    w = np.asarray(w, dtype=float)
    losses = np.asarray(losses, dtype=float)
    if w.shape != losses.shape:
        raise InvalidInputError(f"weights shape {w.shape} does not match losses shape {losses.shape}")
    return project_capped_simplex(w - step * losses, cap)
