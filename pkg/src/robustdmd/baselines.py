"""Exact DMD baseline and the eigenvalue-error metric.

Exact DMD is the shift-invariant regression between successive equispaced
snapshots; it doubles as the default initializer for the nonlinear fits.
Eigenvalue accuracy is scored as the minimum over pairings of the summed
moduli of the differences, so the metric is permutation invariant.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import InvalidInputError
from .snapshots import SnapshotMatrix

EQUISPACING_TOL = 1e-9


@dataclass(frozen=True)
class ExactDmdResult:
    cont_eigs: np.ndarray  # (k,) continuous-time eigenvalues, log(discrete)/dt
    disc_eigs: np.ndarray  # (k,) discrete-time eigenvalues
    modes: np.ndarray  # (n, k)


def _uniform_dt(t: np.ndarray) -> float:
    dt = np.diff(t)
    if t.size < 2 or np.any(np.abs(dt - dt[0]) > EQUISPACING_TOL):
        raise InvalidInputError("exact DMD requires equispaced sample times")
    return float(dt[0])


def exact_dmd(snap: SnapshotMatrix, rank: int) -> ExactDmdResult:
    """Rank-``rank`` exact DMD of equispaced snapshots.

    Regresses each snapshot on its predecessor through a rank-truncated
    SVD, eigendecomposes the reduced operator, and maps the discrete
    eigenvalues to continuous time with the principal log branch.
    Frequencies outside ``(-pi/dt, pi/dt]`` alias and are not corrected.
    """
    dt = _uniform_dt(snap.t)
    m, n = snap.m, snap.n
    if rank < 1 or rank > min(m - 1, n):
        raise InvalidInputError(f"rank {rank} out of range for {m}x{n} data")
    V0 = snap.values[:-1, :].T  # (n, m-1): columns are snapshots
    V1 = snap.values[1:, :].T
    U, s, Vh = np.linalg.svd(V0, full_matrices=False)
    Ur = U[:, :rank]
    sr = s[:rank]
    Vr = Vh.conj().T[:, :rank]
    atilde = Ur.conj().T @ V1 @ (Vr / sr)
    disc, W = np.linalg.eig(atilde)
    modes = V1 @ (Vr / sr) @ W
    order = np.lexsort((disc.imag, disc.real))
    disc = disc[order]
    modes = modes[:, order]
    cont = np.log(disc) / dt
    return ExactDmdResult(cont_eigs=cont, disc_eigs=disc, modes=modes)


def eig_error_l1(estimated: np.ndarray, truth: np.ndarray) -> float:
    """Best-match l1 eigenvalue error.

    Minimum over pairings of ``sum_j |estimated[pi(j)] - truth[j]|``;
    exhaustive over permutations up to k = 8, assignment solver beyond.
    """
    estimated = np.asarray(estimated, dtype=complex)
    truth = np.asarray(truth, dtype=complex)
    if estimated.shape != truth.shape or estimated.ndim != 1:
        raise InvalidInputError(
            f"eigenvalue lists must be 1-D with equal length, got {estimated.shape} vs {truth.shape}"
        )
    k = estimated.size
    cost = np.abs(estimated[:, None] - truth[None, :])
    if k <= 8:
        best = np.inf
        for perm in itertools.permutations(range(k)):
            total = cost[list(perm), range(k)].sum()
            if total < best:
                best = total
        return float(best)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def median_over_trials(errors) -> float:
    """Median of a nonempty list (mean of the central pair for even counts)."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise InvalidInputError("median of an empty list")
    return float(np.median(errors))
