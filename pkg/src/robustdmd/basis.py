"""Exponential time-dynamics basis.

The fitted model is ``X ~ Phi(alpha; t) @ B`` where ``Phi[i, j] =
exp(alpha_j * t[i])``.  This module builds ``Phi`` and its derivative with
respect to each exponent, which is the same matrix scaled by the sample
times.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import BasisOverflowError, InvalidInputError

# exp() of anything beyond this overflows float64
EXP_ARG_LIMIT = 700.0


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Sample times of the snapshot rows.

    Times may be non-equispaced but must be finite and pairwise distinct.
    """

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise InvalidInputError(f"times must be a nonempty 1-D array, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise InvalidInputError("times contain non-finite entries")
        if np.unique(t).size != t.size:
            raise InvalidInputError("duplicate sample times are not allowed")
        object.__setattr__(self, "t", _as_readonly(t))

    @property
    def m(self) -> int:
        return self.t.size


@dataclass(frozen=True)
class BasisMatrix:
    """``Phi(alpha; t)`` together with the exponents and grid it came from."""

    values: np.ndarray  # (m, k) complex
    alpha: np.ndarray  # (k,) complex
    grid: TimeGrid

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


def build_phi(alpha, grid: TimeGrid) -> BasisMatrix:
    """Build the m-by-k matrix with entries ``exp(alpha_j * t_i)``.

    Raises
    ------
    InvalidInputError
        if any exponent is non-finite.
    BasisOverflowError
        if ``real(alpha_j) * t_i > 700`` for some entry, i.e. the
        exponential would overflow; the message names the offending entry.
    """
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(np.asarray(grid))
    alpha = np.asarray(alpha, dtype=complex)
    if alpha.ndim != 1 or alpha.size < 1:
        raise InvalidInputError(f"alpha must be a nonempty 1-D array, got shape {alpha.shape}")
    if not np.all(np.isfinite(alpha)):
        raise InvalidInputError("alpha contains non-finite entries")

    arg_real = np.outer(grid.t, alpha.real)
    if np.any(arg_real > EXP_ARG_LIMIT):
        i, j = np.unravel_index(int(np.argmax(arg_real)), arg_real.shape)
        raise BasisOverflowError(
            f"exp overflow at entry ({i}, {j}): real(alpha_{j}) * t_{i} = {arg_real[i, j]:.6g} > {EXP_ARG_LIMIT:g}"
        )
    values = np.exp(np.outer(grid.t, alpha))
    return BasisMatrix(values=_as_readonly(values), alpha=_as_readonly(alpha), grid=grid)


def phi_time_scaled(basis: BasisMatrix) -> np.ndarray:
    """Entrywise time-scaled basis, ``t_i * exp(alpha_j * t_i)``.

    This is the derivative of each basis entry with respect to its exponent
    and appears as the ``Diag(t) Phi`` factor of the exponent gradient.
    """
    return basis.grid.t[:, None] * basis.values
