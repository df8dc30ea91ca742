"""Elementwise residual penalties and their complex derivatives.

Two penalties are provided: plain least squares and the Huber penalty,
which is quadratic for residual moduli below a threshold ``kappa`` and
grows linearly beyond it.  Derivatives are reported in the Wirtinger sense
(partial with respect to ``z`` holding ``conj(z)`` fixed); the gradient
with respect to the real pair ``(Re z, Im z)`` of a real-valued objective
is ``2 * conj(d/dz)``, which is what the solvers consume via
:func:`influence`.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError

LEAST_SQUARES = "least-squares"
HUBER = "huber"


@dataclass(frozen=True)
class Penalty:
    """Penalty family tag plus the Huber threshold.

    ``kappa`` is in the same units as the residual entries and is ignored
    for least squares.
    """

    kind: str
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in (LEAST_SQUARES, HUBER):
            raise InvalidInputError(f"unknown penalty kind {self.kind!r}")
        if self.kind == HUBER and not (np.isfinite(self.kappa) and self.kappa > 0):
            raise InvalidInputError(f"huber threshold must be positive and finite, got {self.kappa}")


def least_squares() -> Penalty:
    return Penalty(LEAST_SQUARES)


def huber(kappa: float) -> Penalty:
    return Penalty(HUBER, float(kappa))


def _check_finite(z, name="z"):
    if not np.all(np.isfinite(np.asarray(z))):
        raise InvalidInputError(f"{name} contains non-finite entries")


def rho_value(penalty: Penalty, z: complex) -> float:
    """Penalty of a single residual entry.

    Least squares gives ``|z|^2 / 2``.  Huber gives ``|z|^2 / 2`` for
    ``|z| < kappa`` and ``kappa |z| - kappa^2 / 2`` beyond; the two branches
    agree at the threshold.
    """
    _check_finite(z)
    a = abs(z)
    if penalty.kind == LEAST_SQUARES or a < penalty.kappa:
        return 0.5 * a * a
    return penalty.kappa * a - 0.5 * penalty.kappa**2


def rho_wirtinger_deriv(penalty: Penalty, z: complex) -> complex:
    """Wirtinger derivative d(rho)/dz of the penalty at ``z``.

    ``conj(z) / 2`` in the quadratic regime; for the saturated Huber branch
    ``kappa * conj(z) / (2 |z|)``.  Continuous across ``|z| = kappa``.
    """
    _check_finite(z)
    z = complex(z)
    a = abs(z)
    if penalty.kind == LEAST_SQUARES or a < penalty.kappa:
        return 0.5 * z.conjugate()
    return 0.5 * penalty.kappa * z.conjugate() / a


def _rho_values(penalty: Penalty, R: np.ndarray) -> np.ndarray:
    """Entrywise penalty without input validation; overflow yields inf.

    Line searches probe wild trial points on purpose and reject non-finite
    values, so this path must not raise.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        a = np.abs(np.asarray(R))
        if penalty.kind == LEAST_SQUARES:
            return 0.5 * a * a
        return np.where(a < penalty.kappa, 0.5 * a * a, penalty.kappa * a - 0.5 * penalty.kappa**2)


def rho_matrix(penalty: Penalty, R: np.ndarray) -> np.ndarray:
    """Entrywise penalty of a residual matrix (vectorized ``rho_value``)."""
    R = np.asarray(R)
    _check_finite(R, "residual matrix")
    return _rho_values(penalty, R)


def column_losses(penalty: Penalty, R: np.ndarray) -> np.ndarray:
    """Per-column penalty totals: entry j is ``sum_i rho(R[i, j])``."""
    R = np.asarray(R)
    _check_finite(R, "residual matrix")
    return _rho_values(penalty, R).sum(axis=0)


def influence(penalty: Penalty, R: np.ndarray) -> np.ndarray:
    """``2 * conj(d rho / dz)`` applied entrywise.

    This is the residual itself for least squares and the residual clipped
    to modulus ``kappa`` for Huber.  Stacking real and imaginary parts of
    the result gives the gradient of ``rho`` in real coordinates.
    """
    R = np.asarray(R)
    if penalty.kind == LEAST_SQUARES:
        return R.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        a = np.abs(R)
        scale = np.ones_like(a)
        sat = a >= penalty.kappa
        scale[sat] = penalty.kappa / a[sat]
        return R * scale


def fd_wirtinger_deriv(penalty: Penalty, z: complex, eps: float = 1e-6) -> complex:
    """Finite-difference estimate of the Wirtinger derivative.

    Central differences along the real and imaginary axes, assembled as
    ``(d/dx - i d/dy) / 2``.  Used to cross-check the analytic formulas.
    """
    z = complex(z)
    dx = (rho_value(penalty, z + eps) - rho_value(penalty, z - eps)) / (2 * eps)
    dy = (rho_value(penalty, z + 1j * eps) - rho_value(penalty, z - 1j * eps)) / (2 * eps)
    return 0.5 * (dx - 1j * dy)
