"""Robust, trimmed, regularized dynamic mode decomposition by variable projection."""

from .baselines import ExactDmdResult, eig_error_l1, exact_dmd, median_over_trials
from .basis import BasisMatrix, TimeGrid, build_phi, phi_time_scaled
from .exceptions import (
    BasisOverflowError,
    DataFormatError,
    InvalidConfigError,
    InvalidInputError,
    RobustDmdError,
    SolverError,
)
from .inner import (
    BfgsState,
    ColumnSubproblem,
    InnerSweepInfo,
    solve_all_columns,
    solve_column_bfgs,
    solve_column_ls,
)
from .penalties import (
    Penalty,
    column_losses,
    fd_wirtinger_deriv,
    huber,
    influence,
    least_squares,
    rho_matrix,
    rho_value,
    rho_wirtinger_deriv,
)
from .regularizers import (
    CappedSimplex,
    HalfPlaneConstraint,
    SmoothSeparableReg,
    ZERO_REG,
    hard_select_weights,
    project_capped_simplex,
    prox_halfplane,
    prox_weight_update,
)
from .snapshots import SnapshotMatrix
from .solvers import (
    FitResult,
    OuterConfig,
    RobustDmdProblem,
    dmd_alpha_init,
    fit,
    fit_baseline_pg,
    fit_baseline_spg,
    fit_svrg,
    fit_vp_bfgs,
    fit_vp_pg,
    reduced_objective_and_grad,
    svrg_direction,
)
from .synth import (
    HiddenDynamicsSpec,
    NoiseSpec,
    PeriodicSystemSpec,
    corrupt,
    gen_hidden,
    gen_periodic,
)

__version__ = "0.1.0"
