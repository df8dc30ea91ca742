"""Exponent initializers.

The reduced objective is highly non-convex, so the quality of the starting
exponents decides which basin a fit lands in.  Three families are
provided: the exact-DMD eigenvalues (the standard warm start), dominant
DFT frequencies (robust to sparse corruption, which spreads its energy
flat across the spectrum), and seeded randomized conjugate pairs for
multi-start sweeps.
"""

import numpy as np

from .baselines import exact_dmd
from .exceptions import InvalidInputError
from .snapshots import SnapshotMatrix


def dmd_init(snap: SnapshotMatrix, rank: int, seed: int = 0) -> np.ndarray:
    """Continuous-time exact-DMD eigenvalues; random fallback when the
    sampling is not equispaced."""
    try:
        return exact_dmd(snap, rank).cont_eigs
    except InvalidInputError:
        rng = np.random.default_rng(np.random.PCG64(seed))
        span = float(np.ptp(snap.t)) or 1.0
        return (rng.standard_normal(rank) + 1j * rng.standard_normal(rank)) / span


def fft_init(snap: SnapshotMatrix, rank: int) -> np.ndarray:
    """Purely oscillatory exponents at the strongest DFT frequencies.

    Column means are removed, per-column power spectra are averaged, and
    the top distinct frequency magnitudes are used as conjugate pairs
    (plus a zero exponent when the rank is odd).  Requires equispaced
    times.
    """
    t = snap.t
    dt = np.diff(t)
    if t.size < 2 or np.any(np.abs(dt - dt[0]) > 1e-9):
        raise InvalidInputError("fft init requires equispaced sample times")
    X = snap.values - snap.values.mean(axis=0, keepdims=True)
    power = np.mean(np.abs(np.fft.fft(X, axis=0)) ** 2, axis=1)
    freqs = 2.0 * np.pi * np.fft.fftfreq(t.size, d=float(dt[0]))
    order = np.argsort(power)[::-1]
    pairs_needed = rank // 2
    chosen = []
    for idx in order:
        w = abs(freqs[idx])
        if w == 0.0 or any(abs(w - c) < 1e-12 for c in chosen):
            continue
        chosen.append(w)
        if len(chosen) == pairs_needed:
            break
    while len(chosen) < pairs_needed:  # degenerate spectra: pad with harmonics
        chosen.append((len(chosen) + 1) * (chosen[0] if chosen else 1.0))
    alpha = []
    for w in chosen:
        alpha.extend([1j * w, -1j * w])
    if rank % 2:
        alpha.append(0.0 + 0.0j)
    return np.array(alpha, dtype=complex)


def randomized_inits(snap: SnapshotMatrix, rank: int, count: int, seed: int = 0) -> list:
    """Seeded random starts: conjugate pairs with log-uniform frequencies.

    Frequencies span from a small fraction of the Nyquist rate up to half
    of it; real parts are drawn at the 1/timespan scale.
    """
    rng = np.random.default_rng(np.random.PCG64(seed))
    t = snap.t
    span = float(np.ptp(t)) or 1.0
    dt_med = float(np.median(np.diff(np.sort(t)))) if t.size > 1 else 1.0
    w_max = np.pi / dt_med / 2.0
    w_min = w_max / 100.0
    starts = []
    for _ in range(count):
        alpha = []
        for _ in range(rank // 2):
            w = np.exp(rng.uniform(np.log(w_min), np.log(w_max)))
            re = rng.standard_normal() / span
            alpha.extend([re + 1j * w, re - 1j * w])
        if rank % 2:
            alpha.append(complex(rng.standard_normal() / span))
        starts.append(np.array(alpha, dtype=complex))
    return starts
