"""Synthetic test systems and corruption models.

Two generators: a two-channel periodic linear system (eigenvalues +/- i)
and a translating two-wave field whose fast-decaying component hides a
second eigenvalue pair.  Corruption adds Gaussian background noise plus
one of three defect types: elementwise sparse spikes, spikes confined to a
fixed sensor subset ("broken sensors"), or a smooth localized bump.

All randomness flows through a seeded PCG64 generator, so any trial is
reproducible from its seed alone.
"""

import math
from dataclasses import dataclass

import numpy as np

from .basis import TimeGrid
from .exceptions import InvalidConfigError
from .snapshots import SnapshotMatrix

SPARSE = "sparse"
BROKEN_SENSOR = "broken-sensor"
BUMP = "bump"


@dataclass(frozen=True)
class PeriodicSystemSpec:
    """x' = [[1, -2], [1, -1]] x sampled every ``dt`` from x(0) = (1, 0.1)."""

    dt: float = 0.1
    m: int = 128

    @property
    def truth_eigs(self) -> np.ndarray:
        return np.array([-1j, 1j])


@dataclass(frozen=True)
class HiddenDynamicsSpec:
    """Sum of two translating sine waves, one growing and one decaying.

    Signal: ``sin(k1 y - w1 t) e^(g1 t) + sin(k2 y - w2 t) e^(g2 t)`` on a
    uniform y-grid, sampled so the snapshots cover [0, pi/2].
    """

    k1: float = 1.0
    omega1: float = 1.0
    gamma1: float = 1.0
    k2: float = 0.4
    omega2: float = 3.7
    gamma2: float = -0.2
    ny: int = 300
    y_min: float = 0.0
    y_max: float = 15.0
    dt: float = math.pi / (2**8 - 2)
    m: int = 2**7

    def y_grid(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def truth_eigs(self) -> np.ndarray:
        return np.array(
            [
                self.gamma1 + 1j * self.omega1,
                self.gamma1 - 1j * self.omega1,
                self.gamma2 + 1j * self.omega2,
                self.gamma2 - 1j * self.omega2,
            ]
        )


@dataclass(frozen=True)
class NoiseSpec:
    """Corruption parameters: background sigma plus one defect model.

    sparse: every entry gets ``mu * Bernoulli(p) * N(0,1)`` spikes.
    broken-sensor: a sensor subset (each sensor broken with probability p,
        drawn once per trial) gets ``mu * N(0,1)`` spikes at all times.
    bump: a Gaussian blob of height ``bump_height`` and width
        ``bump_width`` (in grid-spacing units) centered at ``bump_center``
        (grid midpoints when omitted).
    """

    kind: str
    sigma: float = 0.0
    mu: float = 0.0
    p: float = 0.0
    bump_height: float = 0.0
    bump_width: float = 1.0
    bump_center: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (SPARSE, BROKEN_SENSOR, BUMP):
            raise InvalidConfigError(f"unknown noise kind {self.kind!r}")
        if not (self.sigma >= 0.0):
            raise InvalidConfigError(f"sigma must be nonnegative, got {self.sigma}")
        if not (0.0 <= self.p <= 1.0):
            raise InvalidConfigError(f"p must lie in [0, 1], got {self.p}")
        if self.kind == BUMP and not (self.bump_width > 0.0):
            raise InvalidConfigError(f"bump width must be positive, got {self.bump_width}")


def gen_periodic(spec: PeriodicSystemSpec, m: int | None = None) -> SnapshotMatrix:
    """Clean snapshots of the periodic system.

    The system matrix squares to -I, so the propagator is exactly
    ``cos(t) I + sin(t) A``; no integrator is involved.
    """
    m = spec.m if m is None else int(m)
    if m < 1:
        raise InvalidConfigError(f"need at least one snapshot, got m = {m}")
    A = np.array([[1.0, -2.0], [1.0, -1.0]])
    x0 = np.array([1.0, 0.1])
    t = spec.dt * np.arange(m)
    X = np.cos(t)[:, None] * x0[None, :] + np.sin(t)[:, None] * (A @ x0)[None, :]
    return SnapshotMatrix(X.astype(complex), TimeGrid(t))


def gen_hidden(spec: HiddenDynamicsSpec) -> SnapshotMatrix:
    """Clean snapshots of the hidden-dynamics field (rows are time samples)."""
    y = spec.y_grid()
    t = spec.dt * np.arange(spec.m)
    X = np.sin(spec.k1 * y[None, :] - spec.omega1 * t[:, None]) * np.exp(spec.gamma1 * t)[:, None]
    X = X + np.sin(spec.k2 * y[None, :] - spec.omega2 * t[:, None]) * np.exp(spec.gamma2 * t)[:, None]
    return SnapshotMatrix(X.astype(complex), TimeGrid(t))


def corrupt(snap: SnapshotMatrix, noise: NoiseSpec, y: np.ndarray | None = None) -> SnapshotMatrix:
    """Apply background noise plus the configured defect; fully seeded.

    ``y`` supplies spatial coordinates for the bump model (defaults to the
    column index).  Zero amplitudes skip their draws entirely, so a
    zero-noise spec returns the data bit-identically.
    """
    rng = np.random.default_rng(np.random.PCG64(noise.seed))
    m, n = snap.m, snap.n
    X = snap.values.copy()

    if noise.sigma > 0.0:
        X = X + noise.sigma * rng.standard_normal((m, n))

    if noise.kind == SPARSE:
        if noise.mu != 0.0 and noise.p > 0.0:
            mask = rng.random((m, n)) < noise.p
            spikes = rng.standard_normal((m, n))
            X = X + noise.mu * (mask * spikes)
    elif noise.kind == BROKEN_SENSOR:
        if noise.mu != 0.0 and noise.p > 0.0:
            sensors = rng.random(n) < noise.p
            spikes = rng.standard_normal((m, n))
            X = X + noise.mu * (spikes * sensors[None, :])
    else:  # bump
        if noise.bump_height != 0.0:
            yy = np.arange(n, dtype=float) if y is None else np.asarray(y, dtype=float)
            if yy.shape != (n,):
                raise InvalidConfigError(f"y grid shape {yy.shape} does not match column count {n}")
            t = snap.t
            dy = yy[1] - yy[0] if n > 1 else 1.0
            dt = t[1] - t[0] if m > 1 else 1.0
            if noise.bump_center is None:
                yb = 0.5 * (yy[0] + yy[-1])
                tb = 0.5 * (t[0] + t[-1])
            else:
                yb, tb = noise.bump_center
            bump = np.exp(
                -(((yb - yy[None, :]) / (noise.bump_width * dy)) ** 2)
                - ((tb - t[:, None]) / (noise.bump_width * dt)) ** 2
            )
            X = X + noise.bump_height * bump

    return SnapshotMatrix(X, snap.grid)
