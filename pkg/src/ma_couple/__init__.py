"""Radial convex solutions of the power-coupled Monge-Ampere system on the unit ball.

    det D^2 u1 = lam (-u2)^alpha,  det D^2 u2 = mu (-u1)^beta,  u1 = u2 = 0 on the sphere.

Quick start::

    from ma_couple import ProblemSpec, SolveConfig, solve_system
    res = solve_system(ProblemSpec(N=2, alpha=1, beta=1))
    res.status, res.v1.values[0]
"""
from .analysis import (
    ResidualReport,
    ThresholdBracket,
    critical_radius,
    gamma_constant,
    ode_residual,
    pde_residual,
    reconstruct_ball,
    threshold_bracket,
    verify_bounds,
)
from .errors import (
    BalancedRegimeError,
    MaxIterExceeded,
    NegativeInputError,
    NonlinearityRangeError,
    NotInConeError,
    OutOfDomainError,
    WrongRegimeError,
    ZeroCollapseError,
)
from .operators import (
    Nonlinearity,
    ProblemSpec,
    Regime,
    apply_general,
    apply_T,
    apply_T1,
    apply_T2,
    apply_T_scaled,
    classify_general,
)
from .profile import ConeReport, Grid, RadialProfile, cone_report, inner_cumulative, outer_tail, sup_norm
from .solvers import (
    EigenResult,
    SolveConfig,
    SolveResult,
    Status,
    normalized_iteration,
    principal_constant,
    rescale_to_fixed_point,
    single_equation_eigen,
    solve_general,
    solve_picard_sublinear,
    solve_system,
)

__version__ = "0.1.0"
