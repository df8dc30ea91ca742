"""Per-column coefficient solves at fixed exponents.

For exponents ``alpha`` and weights ``w`` the coefficient fit decouples
into n independent column subproblems

    min_b  w_j * sum_i rho(x[i, j] - (Phi b)_i) + q(b).

Least squares with no column regularizer has the closed-form minimum-norm
solution ``pinv(Phi) x_j``; everything else is solved by BFGS over the 2k
stacked real coordinates.  The BFGS inverse-Hessian approximation can be
chained from one column to the next ("warm" policy): neighboring columns
share ``Phi`` and tend to have similar curvature, which cuts iterations
substantially on spatially smooth data.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coords import pack, unpack
from .exceptions import InvalidInputError, SolverError
from .penalties import Penalty, _rho_values, influence
from .regularizers import ZERO_REG, SmoothSeparableReg

INNER_TOL = 1e-8
INNER_MAX_ITER = 200
ARMIJO_C1 = 1e-4
MAX_HALVINGS = 50
CURVATURE_MIN = 1e-12


@dataclass
class ColumnSubproblem:
    """One column's data, basis, weight, penalty, and regularizer."""

    x: np.ndarray  # (m,) complex
    phi: np.ndarray  # (m, k) complex
    weight: float
    penalty: Penalty
    reg: SmoothSeparableReg = field(default_factory=lambda: ZERO_REG)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=complex)
        self.phi = np.asarray(self.phi, dtype=complex)
        if self.phi.ndim != 2 or self.x.shape != (self.phi.shape[0],):
            raise InvalidInputError(
                f"column of length {self.x.shape} does not match basis shape {self.phi.shape}"
            )
        if not (0.0 <= self.weight <= 1.0):
            raise InvalidInputError(f"column weight must lie in [0, 1], got {self.weight}")


@dataclass
class BfgsState:
    """BFGS internals carried across warm-started solves.

    ``hess_inv`` lives on the 2k stacked real coordinates and is reset to
    the identity whenever the curvature condition fails, keeping it
    symmetric positive definite.
    """

    hess_inv: np.ndarray
    iterate: np.ndarray
    gradient: np.ndarray
    iterations: int = 0
    degenerate: bool = False
    stalled: bool = False


@dataclass
class InnerSweepInfo:
    """Work counters for one sweep over the columns."""

    iterations: int = 0  # total BFGS iterations
    solves: int = 0  # column subproblems actually solved
    degenerate: tuple = ()


def solve_column_ls(x: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares coefficients ``pinv(Phi) x``."""
    sol, *_ = np.linalg.lstsq(np.asarray(phi, dtype=complex), np.asarray(x, dtype=complex), rcond=None)
    return sol


def _column_value(prob: ColumnSubproblem, b: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        r = prob.x - prob.phi @ b
        val = prob.weight * float(_rho_values(prob.penalty, r).sum())
    if not prob.reg.is_zero:
        val += float(prob.reg.value(b))
    return val


def _column_value_grad(prob: ColumnSubproblem, u: np.ndarray):
    b = unpack(u)
    with np.errstate(over="ignore", invalid="ignore"):
        r = prob.x - prob.phi @ b
        val = prob.weight * float(_rho_values(prob.penalty, r).sum())
        gc = -prob.weight * (prob.phi.conj().T @ influence(prob.penalty, r))
    if not prob.reg.is_zero:
        val += float(prob.reg.value(b))
        gc = gc + np.asarray(prob.reg.grad(b), dtype=complex)
    return val, pack(gc)


def solve_column_bfgs(
    prob: ColumnSubproblem,
    init: np.ndarray,
    warm: BfgsState | None = None,
    tol: float = INNER_TOL,
    max_iter: int = INNER_MAX_ITER,
):
    """BFGS solve of one column subproblem.

    Returns ``(b, state)``.  ``state.hess_inv`` can seed the next column's
    solve.  A zero-weight column with no regularizer has no well-defined
    minimizer (it exerts no influence on the fit), so ``init`` is returned
    unchanged with ``state.degenerate`` set.
    """
    init = np.asarray(init, dtype=complex)
    k = prob.phi.shape[1]
    if init.shape != (k,):
        raise InvalidInputError(f"init shape {init.shape} does not match rank {k}")
    dim = 2 * k

    if prob.weight == 0.0 and prob.reg.is_zero:
        u = pack(init)
        return init, BfgsState(np.eye(dim), u, np.zeros(dim), degenerate=True)

    u = pack(init)
    f, g = _column_value_grad(prob, u)
    if warm is not None and warm.hess_inv.shape == (dim, dim):
        H = warm.hess_inv.copy()
        fresh = False
    else:
        H = np.eye(dim)
        fresh = True  # rescale on the first curvature pair (identity has no scale information)
    iters = 0
    stalled = False

    while iters < max_iter and np.linalg.norm(g) > tol * (1.0 + abs(f)):
        d = -H @ g
        dd = float(d @ g)
        if dd >= 0.0:
            H = np.eye(dim)
            fresh = True
            d = -g
            dd = -float(g @ g)
            if dd == 0.0:
                break
        step = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            u_new = u + step * d
            f_new = _column_value(prob, unpack(u_new))
            if np.isfinite(f_new) and f_new <= f + ARMIJO_C1 * step * dd:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            stalled = True
            break
        f_old, g_old = f, g
        f, g = _column_value_grad(prob, u_new)
        s = u_new - u
        y = g - g_old
        sy = float(s @ y)
        if sy <= CURVATURE_MIN:
            H = np.eye(dim)
            fresh = True
        else:
            if fresh:
                H = (sy / float(y @ y)) * np.eye(dim)
                fresh = False
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * np.outer(s, Hy) - rho * np.outer(Hy, s) + rho * (1.0 + rho * float(y @ Hy)) * np.outer(s, s)
            H = 0.5 * (H + H.T)
        u = u_new
        iters += 1

    return unpack(u), BfgsState(H, u, g, iterations=iters, stalled=stalled)


def _batch_value(Xs, phi, ws, penalty, U):
    k = phi.shape[1]
    with np.errstate(over="ignore", invalid="ignore"):
        B = U[:k] + 1j * U[k:]
        R = Xs - phi @ B
        return ws * _rho_values(penalty, R).sum(axis=0)


def _batch_value_grad(Xs, phi, ws, penalty, U):
    k = phi.shape[1]
    with np.errstate(over="ignore", invalid="ignore"):
        B = U[:k] + 1j * U[k:]
        R = Xs - phi @ B
        F = ws * _rho_values(penalty, R).sum(axis=0)
        Gc = -(phi.conj().T @ influence(penalty, R)) * ws
        return F, np.concatenate([Gc.real, Gc.imag], axis=0)


def _solve_columns_batch(Xs, phi, ws, penalty, U0, tol, max_iter):
    """Lockstep BFGS over many columns at once.

    Each column follows exactly the trajectory the per-column solver would
    produce; columns that converge or stall are frozen while the rest
    continue.  Only valid for a zero column regularizer.
    """
    dim, nc = U0.shape
    eye = np.eye(dim)
    U = U0.copy()
    F, G = _batch_value_grad(Xs, phi, ws, penalty, U)
    H = np.broadcast_to(eye, (nc, dim, dim)).copy()
    iters = np.zeros(nc, dtype=int)
    fresh = np.ones(nc, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        done = np.linalg.norm(G, axis=0) <= tol * (1.0 + np.abs(F))
        _batch_loop(Xs, phi, ws, penalty, U, F, G, H, iters, done, fresh, tol, max_iter, eye)
    return U, int(iters.sum())


def _batch_loop(Xs, phi, ws, penalty, U, F, G, H, iters, done, fresh, tol, max_iter, eye):
    while not done.all():
        idx = np.flatnonzero(~done)
        Ga = G[:, idx]
        D = -np.einsum("nab,bn->an", H[idx], Ga)
        dd = np.einsum("an,an->n", D, Ga)
        bad = dd >= 0.0
        if bad.any():
            H[idx[bad]] = eye
            fresh[idx[bad]] = True
            D[:, bad] = -Ga[:, bad]
            dd[bad] = -np.einsum("an,an->n", Ga[:, bad], Ga[:, bad])

        step = np.ones(idx.size)
        searching = np.ones(idx.size, dtype=bool)
        U_new = U[:, idx].copy()
        F_new = F[idx].copy()
        for _ in range(MAX_HALVINGS + 1):
            pend = np.flatnonzero(searching)
            if pend.size == 0:
                break
            cols = idx[pend]
            U_try = U[:, cols] + step[pend] * D[:, pend]
            F_try = _batch_value(Xs[:, cols], phi, ws[cols], penalty, U_try)
            ok = np.isfinite(F_try) & (F_try <= F[cols] + ARMIJO_C1 * step[pend] * dd[pend])
            took = pend[ok]
            U_new[:, took] = U_try[:, ok]
            F_new[took] = F_try[ok]
            searching[took] = False
            step[pend[~ok]] *= 0.5

        if searching.any():
            done[idx[searching]] = True  # line search stalled; freeze at current point
        moved = np.flatnonzero(~searching)
        if moved.size == 0:
            continue
        cols = idx[moved]
        F_acc, G_acc = _batch_value_grad(Xs[:, cols], phi, ws[cols], penalty, U_new[:, moved])
        S = U_new[:, moved] - U[:, cols]
        Y = G_acc - G[:, cols]
        sy = np.einsum("an,an->n", S, Y)

        flat = sy <= CURVATURE_MIN
        if flat.any():
            H[cols[flat]] = eye
            fresh[cols[flat]] = True
        upd = np.flatnonzero(~flat)
        if upd.size:
            c = cols[upd]
            sel = fresh[c]  # first pair after a reset: set the identity's scale
            if sel.any():
                yy = np.einsum("an,an->n", Y[:, upd[sel]], Y[:, upd[sel]])
                H[c[sel]] = (sy[upd[sel]] / yy)[:, None, None] * eye
                fresh[c[sel]] = False
            rho = 1.0 / sy[upd]
            Su, Yu = S[:, upd], Y[:, upd]
            Hy = np.einsum("nab,bn->an", H[c], Yu)
            yHy = np.einsum("an,an->n", Yu, Hy)
            Hn = (
                H[c]
                - rho[:, None, None] * np.einsum("an,bn->nab", Su, Hy)
                - rho[:, None, None] * np.einsum("an,bn->nab", Hy, Su)
                + (rho * (1.0 + rho * yHy))[:, None, None] * np.einsum("an,bn->nab", Su, Su)
            )
            H[c] = 0.5 * (Hn + np.transpose(Hn, (0, 2, 1)))

        U[:, cols] = U_new[:, moved]
        F[cols] = F_acc
        G[:, cols] = G_acc
        iters[cols] += 1
        conv = np.linalg.norm(G_acc, axis=0) <= tol * (1.0 + np.abs(F_acc))
        done[cols] = conv | (iters[cols] >= max_iter)


def _worker_count() -> int:
    env = os.environ.get("RDMD_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return min(8, os.cpu_count() or 1)


def solve_all_columns(
    X: np.ndarray,
    phi: np.ndarray,
    w: np.ndarray,
    penalty: Penalty,
    reg: SmoothSeparableReg = ZERO_REG,
    warm_policy: str = "cold",
    b_init: np.ndarray | None = None,
    tol: float = INNER_TOL,
    max_iter: int = INNER_MAX_ITER,
):
    """Solve every column subproblem; returns ``(B, InnerSweepInfo)``.

    ``warm_policy="chain"`` runs columns sequentially, seeding each BFGS
    solve with the previous column's inverse-Hessian approximation;
    ``"cold"`` solves columns independently (vectorized when the column
    regularizer is zero, otherwise a thread pool capped by RDMD_THREADS).
    Least squares with a zero regularizer short-circuits to the closed
    form.  Zero-weight columns keep their initial coefficients and are
    reported as degenerate.
    """
    X = np.asarray(X, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    w = np.asarray(w, dtype=float)
    m, n = X.shape
    if phi.shape[0] != m:
        raise InvalidInputError(f"basis rows {phi.shape[0]} do not match data rows {m}")
    if w.shape != (n,):
        raise InvalidInputError(f"weights shape {w.shape} does not match column count {n}")
    if warm_policy not in ("cold", "chain"):
        raise InvalidInputError(f"unknown warm policy {warm_policy!r}")
    k = phi.shape[1]

    if b_init is None:
        B = solve_column_ls(X, phi)  # lstsq broadcasts over columns
        init_solved = True
    else:
        B = np.array(b_init, dtype=complex, copy=True)
        if B.shape != (k, n):
            raise InvalidInputError(f"b_init shape {B.shape} does not match ({k}, {n})")
        init_solved = False

    pos = np.flatnonzero(w > 0.0)
    degenerate = tuple(int(j) for j in np.flatnonzero(w == 0.0)) if reg.is_zero else ()

    if penalty.kind == "least-squares" and reg.is_zero:
        # closed form; the minimizer does not depend on the (positive) weight
        if not init_solved:
            if pos.size:
                B[:, pos] = solve_column_ls(X[:, pos], phi)
        return B, InnerSweepInfo(iterations=0, solves=int(pos.size), degenerate=degenerate)

    if warm_policy == "chain":
        total = 0
        state = None
        for j in range(n):
            prob = ColumnSubproblem(X[:, j], phi, float(w[j]), penalty, reg)
            try:
                b, state = solve_column_bfgs(prob, B[:, j], warm=state, tol=tol, max_iter=max_iter)
            except Exception as exc:  # pragma: no cover - defensive
                raise SolverError(f"column {j}: {exc}") from exc
            B[:, j] = b
            total += state.iterations
        return B, InnerSweepInfo(iterations=total, solves=int(pos.size), degenerate=degenerate)

    if reg.is_zero:
        if pos.size:
            U0 = np.concatenate([B[:, pos].real, B[:, pos].imag], axis=0)
            U, total = _solve_columns_batch(X[:, pos], phi, w[pos], penalty, U0, tol, max_iter)
            B[:, pos] = U[:k] + 1j * U[k:]
        else:
            total = 0
        return B, InnerSweepInfo(iterations=total, solves=int(pos.size), degenerate=degenerate)

    # custom regularizer: per-column solves, optionally threaded
    total = 0

    def run(j):
        try:
            prob = ColumnSubproblem(X[:, j], phi, float(w[j]), penalty, reg)
            return j, solve_column_bfgs(prob, B[:, j], tol=tol, max_iter=max_iter)
        except Exception as exc:
            raise SolverError(f"column {j}: {exc}") from exc

    workers = _worker_count()
    results = []
    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(n)))
    else:
        results = [run(j) for j in range(n)]
    for j, (b, state) in results:
        B[:, j] = b
        total += state.iterations
    return B, InnerSweepInfo(iterations=total, solves=n, degenerate=())
