"""Fixed-point and normalized (power-method) iterations for the radial system.

Regimes are set by the homogeneity degree p = alpha*beta/N^2 of the composite
operator T = T1 T2:

* p < 1: plain Picard iteration, which contracts toward the unique positive
  fixed point.
* p > 1: normalized iteration for the shape w with T(w) = kappa w, then the
  exact rescaling c w with c = kappa^(1/(1-p)).
* p = 1: the normalized iteration yields the principal factor kappa and the
  threshold C = kappa^(-N); a solution exists only when lambda mu^(alpha/N) = C.

No result is reported as converged unless an explicit fixed-point defect and
the residual checks of :mod:`ma_couple.analysis` pass.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .analysis import (
    ResidualReport,
    general_ode_residual,
    ode_residual,
    radius_from_constant,
    verify_bounds,
)
from .errors import BalancedRegimeError, MaxIterExceeded, WrongRegimeError, ZeroCollapseError
from .operators import (
    Nonlinearity,
    ProblemSpec,
    Regime,
    apply_general,
    apply_power_operator,
    apply_T2_scaled,
    apply_T_scaled,
    classify_general,
)
from .profile import Grid, RadialProfile, preset_profile, sup_norm

log = logging.getLogger(__name__)

RESIDUAL_GATE = 1e-5
GATE_REFERENCE_NODES = 2048
THRESHOLD_RTOL = 1e-6
EIGEN_TOL = 1e-12
RATIO_CUTOFF = 1e-6


class Status(str, enum.Enum):
    CONVERGED = "converged"
    NONEXISTENCE = "nonexistence_certified"
    MAX_ITER = "max_iter_exceeded"
    GATE_FAILED = "residual_gate_failed"


@dataclass
class SolveConfig:
    grid: Grid = field(default_factory=Grid.default)
    tol_fixpoint: float = 1e-10
    max_iter: int = 10000
    initial_profile: str | RadialProfile = "parabola"
    residual_gate: float | None = None
    check_bounds: bool = False

    def __post_init__(self):
        if isinstance(self.grid, int):
            self.grid = Grid(self.grid)
        if not self.tol_fixpoint > 0:
            raise ValueError("tol_fixpoint must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        if isinstance(self.initial_profile, RadialProfile) and self.initial_profile.grid != self.grid:
            raise ValueError("initial profile must live on the configured grid")

    @property
    def gate(self) -> float:
        """Residual gate: 1e-5 at 2048 nodes, relaxed like h^2 on coarser grids."""
        if self.residual_gate is not None:
            return self.residual_gate
        ratio = (GATE_REFERENCE_NODES - 1) / (self.grid.n_nodes - 1)
        return RESIDUAL_GATE * max(1.0, ratio * ratio)

    @property
    def initial_name(self) -> str:
        return self.initial_profile if isinstance(self.initial_profile, str) else "custom"

    def start(self) -> RadialProfile:
        if isinstance(self.initial_profile, RadialProfile):
            return self.initial_profile
        return preset_profile(self.initial_profile, self.grid)

    def summary(self) -> dict:
        return {
            "grid": self.grid.n_nodes,
            "tol_fixpoint": self.tol_fixpoint,
            "max_iter": int(self.max_iter),
            "initial_profile": self.initial_name,
            "residual_gate": self.gate,
        }


@dataclass
class EigenResult:
    N: int
    alpha: float
    beta: float
    kappa: float
    C: float
    eigen_shape: RadialProfile
    critical_radius: float
    iterations: int
    ratio_spread: float
    final_change: float = 0.0
    trace: list = field(default_factory=list)

    def as_dict(self, include_shape: bool = False):
        d = {
            "kappa": self.kappa,
            "C": self.C,
            "critical_radius": self.critical_radius,
            "iterations": self.iterations,
            "ratio_spread": self.ratio_spread,
            "final_change": self.final_change,
        }
        if include_shape:
            d["eigen_shape"] = self.eigen_shape.values.tolist()
        return d


@dataclass
class SolveResult:
    spec: ProblemSpec | None
    regime: Regime | None
    status: Status
    v1: RadialProfile | None = None
    v2: RadialProfile | None = None
    iterations: int = 0
    final_change: float = math.nan
    residual_sup: float = math.nan
    fixed_point_defect: float = math.nan
    residuals: ResidualReport | None = None
    eigen: EigenResult | None = None
    trace: list = field(default_factory=list)
    message: str = ""
    bound_violations: int = 0
    classification: object = None

    @property
    def u1(self) -> RadialProfile | None:
        return None if self.v1 is None else self.v1.negated()

    @property
    def u2(self) -> RadialProfile | None:
        return None if self.v2 is None else self.v2.negated()

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


class NormalizedIteration(NamedTuple):
    shape: RadialProfile
    kappa: float
    trace: list
    iterations: int
    final_change: float


def _bounds_hook(spec, cfg, counter):
    if not cfg.check_bounds or spec is None:
        return None

    def check(v):
        if not verify_bounds(v, spec).passed:
            counter[0] += 1

    return check


def _picard(op: Callable[[RadialProfile], RadialProfile], v: RadialProfile, cfg: SolveConfig, hook=None):
    trace = []
    change = math.inf
    for k in range(1, int(cfg.max_iter) + 1):
        if hook is not None:
            hook(v)
        w = op(v)
        nw = sup_norm(w)
        if not nw > 0 or not math.isfinite(nw):
            raise ZeroCollapseError(f"iterate collapsed at iteration {k}")
        change = sup_norm(w - v) / nw
        trace.append(change)
        v = w
        if change < cfg.tol_fixpoint:
            return v, k, change, trace
    raise MaxIterExceeded(f"no convergence in {cfg.max_iter} iterations (last change {change:.3e})",
                          v, int(cfg.max_iter), change, trace)


def normalized_iteration(spec: ProblemSpec | None, cfg: SolveConfig, start: RadialProfile | None = None,
                         op: Callable[[RadialProfile], RadialProfile] | None = None,
                         tol: float | None = None, hook=None) -> NormalizedIteration:
    """Iterate w <- T(w) / |T(w)| until the sup-norm change drops below ``tol``.

    ``kappa`` is |T(w)| for the last input w, so T(shape) = kappa * shape up to
    the final change. ``op`` overrides the scaled composite operator of ``spec``.
    """
    if op is None:
        op = lambda v: apply_T_scaled(v, spec)  # noqa: E731
    tol = cfg.tol_fixpoint if tol is None else tol
    w = cfg.start() if start is None else start
    nw = sup_norm(w)
    if not nw > 0:
        raise ZeroCollapseError("starting profile is zero")
    w = w.scaled(1.0 / nw)
    trace = []
    change = math.inf
    kappa = math.nan
    for k in range(1, int(cfg.max_iter) + 1):
        if hook is not None:
            hook(w)
        Tw = op(w)
        kappa = sup_norm(Tw)
        if not kappa > 1e-300 or not math.isfinite(kappa):
            raise ZeroCollapseError(f"|T(w)| = {kappa!r} at iteration {k}")
        w_new = Tw.scaled(1.0 / kappa)
        change = sup_norm(w_new - w)
        trace.append(kappa)
        w = w_new
        if change < tol:
            return NormalizedIteration(w, kappa, trace, k, change)
    raise MaxIterExceeded(f"normalized iteration did not settle in {cfg.max_iter} steps (change {change:.3e})",
                          w, int(cfg.max_iter), change, trace)


def rescale_to_fixed_point(shape: RadialProfile, kappa: float, spec: ProblemSpec) -> RadialProfile:
    """Return c * shape with c = kappa^(1/(1-p)); then T(c w) = c w by homogeneity."""
    if spec.regime is Regime.BALANCED:
        raise BalancedRegimeError("degree p = 1: rescaling cannot produce a fixed point")
    p = spec.degree
    return shape.scaled(kappa ** (1.0 / (1.0 - p)))


def _ratio_spread(shape: RadialProfile, image: RadialProfile, cutoff: float = RATIO_CUTOFF) -> float:
    mask = shape.values > cutoff
    ratios = image.values[mask] / shape.values[mask]
    return float(ratios.max() - ratios.min())


def _finish(spec, cfg, v1, iterations, change, trace, fp_tol, message="", eigen=None, violations=0):
    v2 = apply_T2_scaled(v1, spec)
    defect = sup_norm(apply_T_scaled(v1, spec) - v1) / sup_norm(v1)
    report = ode_residual(v1, v2, spec)
    residual = max(report.ode_residual_sup, report.relative_boundary_defect / max(sup_norm(v1), 1e-300))
    if defect > fp_tol:
        status = Status.GATE_FAILED
        message = (message + f" fixed-point defect {defect:.3e} exceeds {fp_tol:.3e}.").strip()
    elif report.ode_residual_sup > cfg.gate:
        status = Status.GATE_FAILED
        message = (message + f" ODE residual {report.ode_residual_sup:.3e} exceeds gate {cfg.gate:.1e}.").strip()
    else:
        status = Status.CONVERGED
    return SolveResult(spec, spec.regime, status, v1, v2, iterations, change, report.ode_residual_sup,
                       defect, report, eigen, trace, message, violations)


def solve_picard_sublinear(spec: ProblemSpec, cfg: SolveConfig | None = None) -> SolveResult:
    """Picard iteration v <- T(v) for alpha*beta < N^2 (unique positive fixed point)."""
    cfg = cfg or SolveConfig()
    if spec.regime is not Regime.SUBLINEAR:
        raise WrongRegimeError(f"Picard solver needs alpha*beta < N^2, got regime {spec.regime.value}")
    counter = [0]
    v1, its, change, trace = _picard(lambda v: apply_T_scaled(v, spec), cfg.start(), cfg,
                                     _bounds_hook(spec, cfg, counter))
    return _finish(spec, cfg, v1, its, change, trace, 10 * cfg.tol_fixpoint, violations=counter[0])


def _solve_superlinear(spec, cfg):
    counter = [0]
    # the fixed-point defect after rescaling is roughly p times the shape change
    tol = min(cfg.tol_fixpoint, EIGEN_TOL)
    it = normalized_iteration(spec, cfg, tol=tol, hook=_bounds_hook(spec, cfg, counter))
    v1 = rescale_to_fixed_point(it.shape, it.kappa, spec)
    return _finish(spec, cfg, v1, it.iterations, it.final_change, it.trace, 10 * cfg.tol_fixpoint,
                   violations=counter[0])


def _eigen_for(spec: ProblemSpec, cfg: SolveConfig, tol=None) -> EigenResult:
    base = spec.unscaled()
    tol = min(cfg.tol_fixpoint, EIGEN_TOL) if tol is None else tol
    it = normalized_iteration(base, cfg, tol=tol, op=lambda v: apply_T_scaled(v, base))
    image = apply_T_scaled(it.shape, base)
    C = it.kappa ** (-spec.N)
    return EigenResult(spec.N, spec.alpha, spec.beta, it.kappa, C, it.shape,
                       radius_from_constant(C, spec.N, spec.alpha), it.iterations,
                       _ratio_spread(it.shape, image), it.final_change, it.trace)


def _solve_balanced(spec, cfg):
    eig = _eigen_for(spec, cfg)
    target = spec.threshold_product
    C = eig.C
    gap = abs(target - C)
    if gap > THRESHOLD_RTOL * C:
        if spec.lam == 1.0 and spec.mu == 1.0:
            verdict = (f"balanced regime alpha*beta = N^2 on the unit ball: threshold C = {C:.12g} > 1, "
                       "so the system admits no radial convex solution")
        else:
            verdict = (f"balanced regime alpha*beta = N^2: lambda*mu^(alpha/N) = {target:.12g} differs from "
                       f"C = {C:.12g} (relative gap {gap / C:.3e}); no convex solution")
        return SolveResult(spec, Regime.BALANCED, Status.NONEXISTENCE, iterations=eig.iterations,
                           final_change=eig.final_change, eigen=eig, trace=eig.trace, message=verdict)
    # T_scaled(w) = (target/C)^(1/N) * kappa-normalized w, so any multiple of w solves the scaled
    # system; v2 = mu^(1/N) T2(w) is the substitution that undoes the mu-normalization.
    mismatch = abs((target / C) ** (1.0 / spec.N) - 1.0)
    msg = f"balanced regime tuned to the threshold C = {C:.12g}; eigen shape used as v1."
    return _finish(spec, cfg, eig.eigen_shape, eig.iterations, eig.final_change, eig.trace,
                   10 * cfg.tol_fixpoint + mismatch, msg, eig)


def solve_system(spec: ProblemSpec, cfg: SolveConfig | None = None) -> SolveResult:
    """Classify by regime and solve, certify nonexistence, or report failure."""
    cfg = cfg or SolveConfig()
    try:
        if spec.regime is Regime.SUBLINEAR:
            return solve_picard_sublinear(spec, cfg)
        if spec.regime is Regime.SUPERLINEAR:
            return _solve_superlinear(spec, cfg)
        return _solve_balanced(spec, cfg)
    except MaxIterExceeded as exc:
        return SolveResult(spec, spec.regime, Status.MAX_ITER, iterations=exc.iterations,
                           final_change=exc.change, trace=exc.trace, message=str(exc))


def principal_constant(N: int, alpha: float, cfg: SolveConfig | None = None) -> EigenResult:
    """Principal factor kappa of T for beta = N^2/alpha and the threshold C = kappa^-N."""
    cfg = cfg or SolveConfig()
    return _eigen_for(ProblemSpec.balanced(N, alpha), cfg)


def single_equation_eigen(N: int, cfg: SolveConfig | None = None, tol: float | None = None) -> float:
    """Principal eigenvalue of det D^2 u = |lambda u|^N on the unit ball (radial).

    Power iteration on S(v) = int_t^1 (int_0^s N tau^(N-1) v^N)^(1/N), which is
    homogeneous of degree one; lambda_1 = 1/kappa_S. ``N = 1`` is accepted as a
    test oracle (lambda_1 = pi^2/4).
    """
    cfg = cfg or SolveConfig()
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    tol = min(cfg.tol_fixpoint, EIGEN_TOL) if tol is None else tol
    it = normalized_iteration(None, cfg, tol=tol, op=lambda v: apply_power_operator(v, N, N))
    return 1.0 / it.kappa


def solve_general(f: Nonlinearity, g: Nonlinearity, N: int, cfg: SolveConfig | None = None,
                  theta: float = 1.0, min_theta: float = 2.0 ** -10) -> SolveResult:
    """Damped Picard iteration for det D^2 u1 = f(-u2), det D^2 u2 = g(-u1).

    ``theta`` is halved whenever the increments of |v| change sign twice in a
    row. Collapse to zero or blow-up ends the run with ``max_iter_exceeded``;
    those runs never carry a convergence certificate.
    """
    cfg = cfg or SolveConfig()
    N = int(N)
    cls = classify_general(f, g, N)

    def op(v):
        return apply_general(apply_general(v, g, N), f, N)

    v = cfg.start()
    trace = []
    increments = []
    change = math.inf
    norm = sup_norm(v)
    for k in range(1, int(cfg.max_iter) + 1):
        w = op(v)
        w = v.scaled(1.0 - theta) + w.scaled(theta) if theta < 1.0 else w
        nw = sup_norm(w)
        if not math.isfinite(nw) or nw < 1e-150 or nw > 1e150:
            return SolveResult(None, None, Status.MAX_ITER, iterations=k, final_change=change, trace=trace,
                               message=f"iterate norm drifted to {nw:.3e}; no positive fixed point found",
                               classification=cls)
        change = sup_norm(w - v) / nw
        trace.append(change)
        increments.append(nw - norm)
        norm = nw
        v = w
        if len(increments) >= 3 and increments[-1] * increments[-2] < 0 and increments[-2] * increments[-3] < 0:
            if theta > min_theta:
                theta *= 0.5
                log.info("oscillation at iteration %d; damping factor -> %g", k, theta)
            increments.clear()
        if change < cfg.tol_fixpoint:
            break
    else:
        return SolveResult(None, None, Status.MAX_ITER, iterations=int(cfg.max_iter), final_change=change,
                           trace=trace, message=f"no convergence in {cfg.max_iter} iterations",
                           classification=cls)

    v1 = v
    v2 = apply_general(v1, g, N)
    defect = sup_norm(apply_general(v2, f, N) - v1) / sup_norm(v1)
    report = general_ode_residual(v1, v2, f, g, N)
    status = Status.CONVERGED
    message = f"classification {cls.label}"
    if defect > 10 * cfg.tol_fixpoint or report.ode_residual_sup > cfg.gate:
        status = Status.GATE_FAILED
        message += f"; certificate failed (defect {defect:.3e}, residual {report.ode_residual_sup:.3e})"
    return SolveResult(None, None, status, v1, v2, k, change, report.ode_residual_sup, defect, report,
                       None, trace, message, 0, cls)
