"""Snapshot container: complex data samples on a time grid."""

from dataclasses import dataclass

import numpy as np

from .basis import TimeGrid
from .exceptions import InvalidInputError


@dataclass(frozen=True)
class SnapshotMatrix:
    """m-by-n complex data whose rows are system states at ``grid.t``."""

    values: np.ndarray  # (m, n) complex
    grid: TimeGrid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2:
            raise InvalidInputError(f"snapshot data must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("snapshot data contains non-finite entries")
        if values.shape[0] != self.grid.m:
            raise InvalidInputError(
                f"snapshot rows ({values.shape[0]}) do not match time grid length ({self.grid.m})"
            )
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def t(self) -> np.ndarray:
        return self.grid.t
