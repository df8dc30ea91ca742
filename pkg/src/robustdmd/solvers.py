"""Variable-projection drivers over the exponents and trimming weights.

The coefficient matrix is always eliminated by partial minimization (the
inner solves of :mod:`robustdmd.inner`); the drivers here move the
exponents ``alpha`` (and weights ``w``) on the reduced objective

    f(alpha, w) = sum_j w_j rho(x_j - Phi(alpha) b_j(alpha, w)) + q(b_j)

whose exponent gradient, by the envelope theorem, is the partial gradient
of the full objective evaluated at the inner minimizer.  In the complex
encoding used throughout (real part = partial w.r.t. real part, imaginary
part = partial w.r.t. imaginary part) the per-column contribution is

    gamma_j[l] = -conj(B[l, j]) * sum_i t_i conj(Phi[i, l]) psi(R[i, j])

with ``psi`` the penalty influence function; the full gradient is
``gamma @ w``.

Five drivers are provided: a quasi-Newton loop for smooth (or absent)
exponent regularizers, a proximal-gradient loop for prox-friendly
constraints, a variance-reduced stochastic loop that refreshes only a few
columns per step, and plain proximal-gradient / stochastic-proximal-
gradient baselines for benchmarking.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisMatrix, TimeGrid, build_phi
from .coords import pack, unpack
from .exceptions import BasisOverflowError, InvalidConfigError, InvalidInputError, SolverError
from .initializers import dmd_init
from .inner import INNER_MAX_ITER, INNER_TOL, InnerSweepInfo, solve_all_columns, solve_column_ls
from .penalties import Penalty, _rho_values, influence, least_squares
from .regularizers import (
    ZERO_REG,
    CappedSimplex,
    HalfPlaneConstraint,
    SmoothSeparableReg,
    hard_select_weights,
    prox_halfplane,
    prox_weight_update,
)
from .snapshots import SnapshotMatrix

ARMIJO_C1 = 1e-4
MAX_HALVINGS = 50
OBJECTIVE_STREAK = 3  # consecutive small relative changes that count as converged

SOLVERS = ("vp-bfgs", "vp-pg", "svrg", "pg", "spg")


@dataclass
class RobustDmdProblem:
    """Data plus the fit formulation: penalty, constraint, regularizer, trimming."""

    snapshots: SnapshotMatrix
    rank: int
    penalty: Penalty = field(default_factory=least_squares)
    constraint: HalfPlaneConstraint | None = None
    reg: SmoothSeparableReg = field(default_factory=lambda: ZERO_REG)
    cap: CappedSimplex | None = None  # None means h = n (no trimming)
    weight_rule: str = "hard"  # "hard" or "prox"
    eta_w: float = 1.0

    def __post_init__(self):
        m, n = self.snapshots.m, self.snapshots.n
        if not (1 <= self.rank <= min(m, n)):
            raise InvalidConfigError(f"rank {self.rank} out of range for {m}x{n} data")
        if self.cap is not None and self.cap.h > n:
            raise InvalidConfigError(f"h = {self.cap.h} exceeds column count {n}")
        if self.weight_rule not in ("hard", "prox"):
            raise InvalidConfigError(f"unknown weight rule {self.weight_rule!r}")
        if not (self.eta_w > 0):
            raise InvalidConfigError(f"eta_w must be positive, got {self.eta_w}")

    @property
    def n(self) -> int:
        return self.snapshots.n

    @property
    def h(self) -> int:
        return self.n if self.cap is None else self.cap.h


@dataclass
class OuterConfig:
    """Knobs for the outer loops; unused fields are ignored by each driver."""

    solver: str = "vp-bfgs"
    eta_alpha: float = 1.0  # quasi-Newton initial step / constant prox step
    max_outer: int = 100
    tol_objective: float = 1e-8
    tol_grad: float = 1e-7
    tau: int | None = None  # stochastic batch size; default max(1, n // 50)
    p_weight_update: float | None = None  # probability of a weight refresh; default 1/n
    eta0_alpha: float = 1e-7  # diminishing-step base for pg/spg/svrg
    step_k: int | None = 500  # step halves every K iterations; None keeps it constant
    seed: int = 0
    inner_budget: int | None = None  # stop once this many inner solves were spent
    trace_every: int = 0  # stochastic objective instrumentation interval (0 = ends only)
    warm_policy: str = "cold"

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise InvalidConfigError(f"unknown solver {self.solver!r}")
        if not (self.eta_alpha > 0):
            raise InvalidConfigError(f"eta_alpha must be positive, got {self.eta_alpha}")
        if self.tau is not None and self.tau < 1:
            raise InvalidConfigError(f"tau must be >= 1, got {self.tau}")
        if self.p_weight_update is not None and not (0.0 <= self.p_weight_update <= 1.0):
            raise InvalidConfigError(f"weight-update probability must lie in [0, 1]")
        if self.max_outer < 1:
            raise InvalidConfigError(f"max_outer must be >= 1, got {self.max_outer}")


@dataclass
class FitResult:
    """Converged variables plus traces and work counters."""

    alpha: np.ndarray
    modes: np.ndarray  # (k, n) coefficient matrix
    weights: np.ndarray
    objective_trace: np.ndarray
    alpha_trace: np.ndarray  # (iters, k), every recorded exponent iterate
    weights_trace: np.ndarray  # (iters, n)
    trace_solves: np.ndarray  # cumulative inner solves when each objective was recorded
    n_outer: int
    inner_solves: int
    inner_iterations: int
    termination: str
    solver: str


def dmd_alpha_init(problem: RobustDmdProblem, seed: int = 0) -> np.ndarray:
    """Default exponent initializer.

    Continuous-time eigenvalues of the exact DMD when the sampling is
    equispaced and the rank allows it; otherwise small random exponents
    scaled to the time span.
    """
    return dmd_init(problem.snapshots, problem.rank, seed)


def initial_weights(problem: RobustDmdProblem) -> np.ndarray:
    """Feasible starting weights: uniform h/n so every column participates."""
    n = problem.n
    if problem.h == n:
        return np.ones(n)
    return np.full(n, problem.h / n)


def _update_weights(problem: RobustDmdProblem, w: np.ndarray, losses: np.ndarray) -> np.ndarray:
    if problem.h == problem.n:
        return np.ones(problem.n)
    if problem.weight_rule == "hard":
        return hard_select_weights(losses, problem.cap)
    return prox_weight_update(w, losses, problem.eta_w, problem.cap)


def _prox_alpha(problem: RobustDmdProblem, alpha: np.ndarray) -> np.ndarray:
    if problem.constraint is None:
        return alpha
    return prox_halfplane(alpha, problem.constraint)


def _reg_total(problem: RobustDmdProblem, B: np.ndarray) -> float:
    if problem.reg.is_zero:
        return 0.0
    return float(sum(problem.reg.value(B[:, j]) for j in range(B.shape[1])))


def _sweep(problem, phi: BasisMatrix, w, B_init, inner_tol, inner_max_iter, warm_policy="cold", cols=None):
    """Inner solve over all columns (or a subset); returns B, losses, gamma, info.

    ``gamma`` is the (k, n_cols) matrix of unweighted per-column exponent
    gradients in the complex real-pair encoding.
    """
    X = problem.snapshots.values if cols is None else problem.snapshots.values[:, cols]
    wc = w if cols is None else w[cols]
    Bc = B_init if cols is None or B_init is None else B_init[:, cols]
    B, info = solve_all_columns(
        X,
        phi.values,
        wc,
        problem.penalty,
        reg=problem.reg,
        warm_policy=warm_policy,
        b_init=Bc,
        tol=inner_tol,
        max_iter=inner_max_iter,
    )
    with np.errstate(over="ignore", invalid="ignore"):
        R = X - phi.values @ B
        losses = _rho_values(problem.penalty, R).sum(axis=0)
        phi_t_conj = phi.values.conj() * phi.grid.t[:, None]
        gamma = -B.conj() * (phi_t_conj.T @ influence(problem.penalty, R))
    return B, losses, gamma, info


def reduced_objective_and_grad(
    problem: RobustDmdProblem,
    alpha: np.ndarray,
    w: np.ndarray | None = None,
    b_init: np.ndarray | None = None,
    warm_policy: str = "cold",
    inner_tol: float = INNER_TOL,
    inner_max_iter: int = INNER_MAX_ITER,
):
    """Reduced objective value, exponent gradient, and inner solution.

    The gradient is the complex real-pair encoding of the 2k-coordinate
    gradient of ``f(alpha, B(alpha, w), w)``.
    """
    alpha = np.asarray(alpha, dtype=complex)
    if w is None:
        w = np.ones(problem.n)
    w = np.asarray(w, dtype=float)
    phi = build_phi(alpha, problem.snapshots.grid)
    B, losses, gamma, _ = _sweep(problem, phi, w, b_init, inner_tol, inner_max_iter, warm_policy)
    value = float(w @ losses) + _reg_total(problem, B)
    return value, gamma @ w, B


def svrg_direction(gamma_new, gamma_store, w, subset):
    """Variance-reduced estimate of the full exponent gradient.

    ``gamma_new`` holds refreshed per-column gradients for ``subset``;
    the stored table supplies the anchor.  With the subset equal to all
    columns the correction cancels and the full gradient is returned.
    """
    n = w.size
    tau = len(subset)
    if tau == n:
        return gamma_new @ w[subset]
    anchor = gamma_store @ w
    corr = (gamma_new - gamma_store[:, subset]) @ w[subset]
    return (n / tau) * corr + anchor


class _Trace:
    def __init__(self):
        self.objective = []
        self.alpha = []
        self.weights = []
        self.solves = []

    def record(self, f, alpha, w, solves):
        self.objective.append(float(f))
        self.alpha.append(np.array(alpha))
        self.weights.append(np.array(w))
        self.solves.append(int(solves))


def _result(problem, alpha, B, w, trace, n_outer, solves, iters, termination, solver):
    return FitResult(
        alpha=np.asarray(alpha),
        modes=B,
        weights=np.asarray(w),
        objective_trace=np.array(trace.objective),
        alpha_trace=np.array(trace.alpha),
        weights_trace=np.array(trace.weights),
        trace_solves=np.array(trace.solves),
        n_outer=n_outer,
        inner_solves=solves,
        inner_iterations=iters,
        termination=termination,
        solver=solver,
    )


def fit_vp_bfgs(problem: RobustDmdProblem, config: OuterConfig, alpha0: np.ndarray | None = None) -> FitResult:
    """Quasi-Newton outer loop: inner sweep, weight update, BFGS step on alpha.

    Requires a smooth (here: absent) exponent regularizer; use
    :func:`fit_vp_pg` for the half-plane constraint.  The recorded
    objective trace is nonincreasing because every stage (inner solves,
    weight update, backtracked step) is a descent operation.
    """
    if problem.constraint is not None:
        raise InvalidConfigError("vp-bfgs handles smooth exponent regularizers only; use vp-pg for constraints")
    alpha = np.asarray(dmd_alpha_init(problem, config.seed) if alpha0 is None else alpha0, dtype=complex)
    k = problem.rank
    if alpha.shape != (k,):
        raise InvalidInputError(f"alpha0 shape {alpha.shape} does not match rank {k}")
    dim = 2 * k
    w = initial_weights(problem)
    B = None
    H = np.eye(dim)
    u = pack(alpha)
    u_prev = None
    g_prev = None
    f_prev = None
    streak = 0
    solves = 0
    iters = 0
    trace = _Trace()
    termination = "max-iterations"
    n_outer = 0

    for nu in range(config.max_outer):
        phi = build_phi(alpha, problem.snapshots.grid)
        B, losses, gamma, info = _sweep(problem, phi, w, B, INNER_TOL, INNER_MAX_ITER, config.warm_policy)
        solves += info.solves
        iters += info.iterations
        w = _update_weights(problem, w, losses)
        f = float(w @ losses) + _reg_total(problem, B)
        g = pack(gamma @ w)
        trace.record(f, alpha, w, solves)
        n_outer = nu + 1

        if not np.isfinite(f):
            termination = "diverged"
            break
        if np.linalg.norm(g) < config.tol_grad:
            termination = "converged-gradient"
            break
        if f_prev is not None:
            rel = abs(f - f_prev) / max(1.0, abs(f_prev))
            streak = streak + 1 if rel < config.tol_objective else 0
            if streak >= OBJECTIVE_STREAK:
                termination = "converged-objective"
                break

        if u_prev is not None:
            s = u - u_prev
            y = g - g_prev
            sy = float(s @ y)
            if sy <= 1e-12:
                H = np.eye(dim)
            else:
                rho = 1.0 / sy
                Hy = H @ y
                H = (
                    H
                    - rho * np.outer(s, Hy)
                    - rho * np.outer(Hy, s)
                    + rho * (1.0 + rho * float(y @ Hy)) * np.outer(s, s)
                )
                H = 0.5 * (H + H.T)

        d = -H @ g
        dd = float(d @ g)
        if dd >= 0.0:
            H = np.eye(dim)
            d = -g
            dd = -float(g @ g)

        step = config.eta_alpha
        accepted = False
        B_try = None
        for _ in range(MAX_HALVINGS + 1):
            alpha_try = unpack(u + step * d)
            try:
                phi_try = build_phi(alpha_try, problem.snapshots.grid)
                B_try, losses_try, _, info_try = _sweep(
                    problem, phi_try, w, B, INNER_TOL, INNER_MAX_ITER, config.warm_policy
                )
                solves += info_try.solves
                iters += info_try.iterations
                with np.errstate(over="ignore", invalid="ignore"):
                    f_try = float(w @ losses_try) + _reg_total(problem, B_try)
            except BasisOverflowError:
                f_try = np.inf
            if np.isfinite(f_try) and f_try <= f + ARMIJO_C1 * step * dd:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            termination = "stalled-line-search"
            break

        u_prev, g_prev, f_prev = u, g, f
        u = u + step * d
        alpha = unpack(u)
        B = B_try

    return _result(problem, alpha, B, w, trace, n_outer, solves, iters, termination, "vp-bfgs")


def _step_schedule(config: OuterConfig, base: float, nu: int) -> float:
    if config.step_k is None:
        return base
    return base / (math.floor(nu / config.step_k) + 1)


def _prox_gradient_loop(problem, config, alpha0, base_step, scheduled, solver_name):
    alpha = np.asarray(dmd_alpha_init(problem, config.seed) if alpha0 is None else alpha0, dtype=complex)
    if alpha.shape != (problem.rank,):
        raise InvalidInputError(f"alpha0 shape {alpha.shape} does not match rank {problem.rank}")
    alpha = _prox_alpha(problem, alpha)
    w = initial_weights(problem)
    B = None
    f_prev = None
    streak = 0
    solves = 0
    iters = 0
    trace = _Trace()
    termination = "max-iterations"
    n_outer = 0

    for nu in range(config.max_outer):
        if config.inner_budget is not None and solves >= config.inner_budget:
            termination = "budget-exhausted"
            break
        try:
            phi = build_phi(alpha, problem.snapshots.grid)
            B, losses, gamma, info = _sweep(problem, phi, w, B, INNER_TOL, INNER_MAX_ITER, config.warm_policy)
        except BasisOverflowError:
            termination = "diverged"
            break
        solves += info.solves
        iters += info.iterations
        w = _update_weights(problem, w, losses)
        f = float(w @ losses) + _reg_total(problem, B)
        grad = gamma @ w
        g = pack(grad)
        trace.record(f, alpha, w, solves)
        n_outer = nu + 1

        if not np.isfinite(f):
            termination = "diverged"
            break
        if np.linalg.norm(g) < config.tol_grad:
            termination = "converged-gradient"
            break
        if f_prev is not None:
            rel = abs(f - f_prev) / max(1.0, abs(f_prev))
            streak = streak + 1 if rel < config.tol_objective else 0
            if streak >= OBJECTIVE_STREAK:
                termination = "converged-objective"
                break
        f_prev = f

        eta = _step_schedule(config, base_step, nu) if scheduled else base_step
        alpha = _prox_alpha(problem, unpack(pack(alpha) - eta * g))

    return _result(problem, alpha, B, w, trace, n_outer, solves, iters, termination, solver_name)


def fit_vp_pg(problem: RobustDmdProblem, config: OuterConfig, alpha0: np.ndarray | None = None) -> FitResult:
    """Proximal-gradient outer loop with a constant step.

    Every recorded exponent iterate is feasible for the half-plane
    constraint: the initializer is projected and each update ends in the
    prox.
    """
    return _prox_gradient_loop(problem, config, alpha0, config.eta_alpha, scheduled=False, solver_name="vp-pg")


def fit_baseline_pg(problem: RobustDmdProblem, config: OuterConfig, alpha0: np.ndarray | None = None) -> FitResult:
    """Full-gradient proximal baseline with the diminishing step schedule."""
    return _prox_gradient_loop(problem, config, alpha0, config.eta0_alpha, scheduled=True, solver_name="pg")


def _stochastic_setup(problem, config, alpha0):
    alpha = np.asarray(dmd_alpha_init(problem, config.seed) if alpha0 is None else alpha0, dtype=complex)
    if alpha.shape != (problem.rank,):
        raise InvalidInputError(f"alpha0 shape {alpha.shape} does not match rank {problem.rank}")
    alpha = _prox_alpha(problem, alpha)
    n = problem.n
    tau = config.tau if config.tau is not None else max(1, n // 50)
    if tau > n:
        raise InvalidConfigError(f"tau = {tau} exceeds column count {n}")
    p_update = config.p_weight_update if config.p_weight_update is not None else 1.0 / n
    rng = np.random.default_rng(np.random.PCG64(config.seed))
    return alpha, tau, p_update, rng


def _true_objective(problem, alpha, w, B_init):
    """Instrumentation-only reduced objective; its solves are not counted."""
    phi = build_phi(alpha, problem.snapshots.grid)
    B, losses, _, _ = _sweep(problem, phi, w, B_init, INNER_TOL, INNER_MAX_ITER)
    return float(w @ losses) + _reg_total(problem, B)


def fit_svrg(problem: RobustDmdProblem, config: OuterConfig, alpha0: np.ndarray | None = None) -> FitResult:
    """Stochastic variance-reduced outer loop.

    Keeps one stored gradient per column plus their weighted sum as an
    anchor; each iteration refreshes ``tau`` sampled columns and steps
    along :func:`svrg_direction`.  Stored gradients are kept unweighted
    and recombined with the live weights, so a weight refresh (the rare
    ``J = 1`` event, which recomputes every column loss) immediately
    reweights the anchor as well.  objective_trace carries instrumentation
    values only (initial, every ``trace_every`` steps, final); the solves
    they need are excluded from the work counters.
    """
    alpha, tau, p_update, rng = _stochastic_setup(problem, config, alpha0)
    n = problem.n
    w = initial_weights(problem)

    phi = build_phi(alpha, problem.snapshots.grid)
    B, losses, gamma_store, info = _sweep(problem, phi, w, None, INNER_TOL, INNER_MAX_ITER)
    solves = info.solves
    iters = info.iterations
    trace = _Trace()
    trace.record(float(w @ losses) + _reg_total(problem, B), alpha, w, solves)
    termination = "max-iterations"
    n_outer = 0

    for nu in range(config.max_outer):
        if config.inner_budget is not None and solves >= config.inner_budget:
            termination = "budget-exhausted"
            break
        subset = np.sort(rng.choice(n, size=tau, replace=False))
        event = rng.random() < p_update

        try:
            phi = build_phi(alpha, problem.snapshots.grid)
            if tau == n or event:
                B_new, losses_new, gamma_full, info = _sweep(problem, phi, w, B, INNER_TOL, INNER_MAX_ITER)
                gamma_new = gamma_full[:, subset]
            else:
                B_sub, losses_sub, gamma_new, info = _sweep(
                    problem, phi, w, B, INNER_TOL, INNER_MAX_ITER, cols=subset
                )
        except BasisOverflowError:
            termination = "diverged"
            break
        solves += info.solves
        iters += info.iterations

        if event:
            # the full sweep above supplied fresh losses for every column
            w = _update_weights(problem, w, losses_new)

        direction = svrg_direction(gamma_new, gamma_store, w, subset)
        eta = _step_schedule(config, config.eta0_alpha, nu)
        alpha = _prox_alpha(problem, unpack(pack(alpha) - eta * pack(direction)))
        n_outer = nu + 1

        if tau == n or event:
            gamma_store = gamma_full
            B = B_new
        else:
            gamma_store[:, subset] = gamma_new
            B[:, subset] = B_sub

        if config.trace_every and (nu + 1) % config.trace_every == 0:
            trace.record(_true_objective(problem, alpha, w, B), alpha, w, solves)

    trace.record(_true_objective(problem, alpha, w, B), alpha, w, solves)
    return _result(problem, alpha, B, w, trace, n_outer, solves, iters, termination, "svrg")


def fit_baseline_spg(problem: RobustDmdProblem, config: OuterConfig, alpha0: np.ndarray | None = None) -> FitResult:
    """Stochastic proximal baseline: subsampled gradient, no variance anchor."""
    alpha, tau, p_update, rng = _stochastic_setup(problem, config, alpha0)
    n = problem.n
    w = initial_weights(problem)
    # plain least-squares coefficients as the (uncounted) warm-start buffer,
    # mirroring the internal initialization of a cold full sweep
    B = solve_column_ls(problem.snapshots.values, build_phi(alpha, problem.snapshots.grid).values)
    solves = 0
    iters = 0
    trace = _Trace()
    trace.record(_true_objective(problem, alpha, w, B), alpha, w, solves)
    termination = "max-iterations"
    n_outer = 0

    for nu in range(config.max_outer):
        if config.inner_budget is not None and solves >= config.inner_budget:
            termination = "budget-exhausted"
            break
        subset = np.sort(rng.choice(n, size=tau, replace=False))
        event = rng.random() < p_update

        try:
            phi = build_phi(alpha, problem.snapshots.grid)
            if tau == n or event:
                B_new, losses_new, gamma_full, info = _sweep(problem, phi, w, B, INNER_TOL, INNER_MAX_ITER)
                gamma_new = gamma_full[:, subset]
            else:
                B_sub, losses_sub, gamma_new, info = _sweep(
                    problem, phi, w, B, INNER_TOL, INNER_MAX_ITER, cols=subset
                )
        except BasisOverflowError:
            termination = "diverged"
            break
        solves += info.solves
        iters += info.iterations

        if event:
            w = _update_weights(problem, w, losses_new)

        direction = (n / tau) * (gamma_new @ w[subset])
        eta = _step_schedule(config, config.eta0_alpha, nu)
        alpha = _prox_alpha(problem, unpack(pack(alpha) - eta * pack(direction)))
        n_outer = nu + 1

        if tau == n or event:
            B = B_new
        else:
            B[:, subset] = B_sub

        if config.trace_every and (nu + 1) % config.trace_every == 0:
            trace.record(_true_objective(problem, alpha, w, B), alpha, w, solves)

    trace.record(_true_objective(problem, alpha, w, B), alpha, w, solves)
    return _result(problem, alpha, B, w, trace, n_outer, solves, iters, termination, "spg")


def fit(problem: RobustDmdProblem, config: OuterConfig, alpha0: np.ndarray | None = None) -> FitResult:
    """Dispatch on ``config.solver``."""
    driver = {
        "vp-bfgs": fit_vp_bfgs,
        "vp-pg": fit_vp_pg,
        "svrg": fit_svrg,
        "pg": fit_baseline_pg,
        "spg": fit_baseline_spg,
    }[config.solver]
    return driver(problem, config, alpha0)
