"""Verification tools: the constant Gamma, norm bounds, residuals and reconstruction.

Residuals deliberately avoid the solver's quadrature. Integrals of the source
terms are recomputed from a cubic-spline interpolant of the sampled profile
with a 6-point Gauss rule per cell, and derivatives of the profiles come from
second-order finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import NotInConeError, OutOfDomainError
from .operators import Nonlinearity, ProblemSpec, apply_T_scaled
from .profile import RadialProfile, cone_report, sup_norm

BOUND_SLACK = 1e-9
DEFAULT_T_CUT = 0.1
_RESIDUAL_GAUSS_POINTS = 6


def gamma_constant(N: int) -> float:
    """Gamma(N) = int_{1/4}^{3/4} (s^N - 4^-N)^(1/N) ds.

    The integrand behaves like (s - 1/4)^(1/N) at the left end, so that factor
    is handed to QUADPACK's algebraic-weight routine and the smooth remainder
    ``(sum_k s^k 4^-(N-1-k))^(1/N)`` is integrated.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    a = 0.25

    def remainder(s):
        return sum(s ** k * a ** (N - 1 - k) for k in range(N)) ** (1.0 / N)

    val, _ = quad(remainder, a, 0.75, weight="alg", wvar=(1.0 / N, 0.0), epsabs=0.0, epsrel=1e-13, limit=200)
    return float(val)


def gamma1_constant(N: int, alpha: float, beta: float) -> float:
    """Lower-bound constant: Gamma^(1 + alpha/N) * 4^(-alpha/N - alpha*beta/N^2)."""
    g = gamma_constant(N)
    return g ** (1.0 + alpha / N) * 4.0 ** (-alpha / N - alpha * beta / (N * N))


@dataclass(frozen=True)
class ThresholdBracket:
    lower: float
    upper: float
    gamma: float
    gamma1: float

    def contains(self, C: float) -> bool:
        return self.lower <= C <= self.upper


def threshold_bracket(N: int, alpha: float) -> ThresholdBracket:
    """Enclosure [1, (4/Gamma)^(N+alpha)] of the balanced threshold constant C."""
    g = gamma_constant(N)
    beta = N * N / alpha
    return ThresholdBracket(1.0, (4.0 / g) ** (N + alpha), g, gamma1_constant(N, alpha, beta))


@dataclass(frozen=True)
class BoundsCheck:
    norm_v: float
    norm_Tv: float
    lower_margin: float | None
    upper_margin: float
    in_cone: bool
    passed: bool


def verify_bounds(v: RadialProfile, spec: ProblemSpec, strict: bool = False) -> BoundsCheck:
    """Check Gamma1 |v|^p <= |T v| <= |v|^p (times the lambda/mu scale factor).

    The lower bound needs ``v`` in the cone K; outside it only the upper bound
    is checked, unless ``strict`` is set, which raises instead.
    """
    p = spec.degree
    c = spec.scale_factor
    nv = sup_norm(v)
    nT = sup_norm(apply_T_scaled(v, spec))
    upper = c * nv ** p - nT
    in_cone = cone_report(v).passes
    if in_cone:
        lower = nT - c * gamma1_constant(spec.N, spec.alpha, spec.beta) * nv ** p
    elif strict:
        raise NotInConeError("profile is not in the cone K; lower bound does not apply")
    else:
        lower = None
    ok = upper >= -BOUND_SLACK and (lower is None or lower >= -BOUND_SLACK)
    return BoundsCheck(nv, nT, lower, upper, in_cone, ok)


def _signed_power(x, N):
    return np.sign(x) * np.abs(x) ** N


def spline_cumulative(v: RadialProfile, source: Callable[[np.ndarray], np.ndarray], N: int,
                      coef: float = 1.0) -> np.ndarray:
    """Independent quadrature of ``t -> coef * int_0^t N tau^(N-1) source(v(tau)) dtau``."""
    t = v.grid.nodes
    h = v.grid.spacing
    x, w = np.polynomial.legendre.leggauss(_RESIDUAL_GAUSS_POINTS)
    tau = t[:-1, None] + h * (0.5 * (x + 1.0))[None, :]
    vq = np.maximum(CubicSpline(t, v.values)(tau), 0.0)
    cells = (N * tau ** (N - 1) * source(vq) * (0.5 * h * w)).sum(axis=1)
    out = np.zeros_like(t)
    np.cumsum(cells, out=out[1:])
    return coef * out


def _power_source(gamma):
    def f(x):
        out = np.zeros_like(x)
        m = x > 0
        out[m] = x[m] ** gamma
        return out

    return f


def _integrated_defect(v_out: RadialProfile, v_in: RadialProfile, source, N, coef) -> float:
    """sup |(-v_out')^N - coef int_0^t N tau^(N-1) source(v_in)| / sup of the integral."""
    slope = CubicSpline(v_out.grid.nodes, v_out.values)(v_out.grid.nodes, 1)
    flux = _signed_power(-slope, N)
    cum = spline_cumulative(v_in, source, N, coef)
    scale = float(np.max(np.abs(cum)))
    defect = float(np.max(np.abs(flux - cum)[1:-1]))
    if scale == 0.0:
        return defect
    return defect / scale


def _slope_at_origin(v: RadialProfile) -> float:
    x = v.values
    return (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * v.grid.spacing)


@dataclass(frozen=True)
class ResidualReport:
    ode_residual_sup: float
    boundary_defect: tuple  # (|v1(1)|, |v2(1)|, |v1'(0)|, |v2'(0)|)
    pde_residual_sup: float
    ode_residuals: tuple = ()  # per equation

    @property
    def relative_boundary_defect(self) -> float:
        return max(self.boundary_defect) if self.boundary_defect else 0.0

    def as_dict(self):
        return {
            "ode": self.ode_residual_sup,
            "ode_per_equation": list(self.ode_residuals),
            "pde": self.pde_residual_sup,
            "boundary": list(self.boundary_defect),
        }


def _residual_report(v1, v2, source1, source2, N, coef1, coef2, t_cut) -> ResidualReport:
    r1 = _integrated_defect(v1, v2, source1, N, coef1)
    r2 = _integrated_defect(v2, v1, source2, N, coef2)
    rhs1 = v2.with_values(coef1 * source1(np.maximum(v2.values, 0.0)))
    rhs2 = v1.with_values(coef2 * source2(np.maximum(v1.values, 0.0)))
    pde = max(pde_residual(v1, rhs1, N, t_cut), pde_residual(v2, rhs2, N, t_cut))
    boundary = tuple(float(abs(x)) for x in (v1.values[-1], v2.values[-1], _slope_at_origin(v1), _slope_at_origin(v2)))
    return ResidualReport(max(r1, r2), boundary, pde, (r1, r2))


def ode_residual(v1: RadialProfile, v2: RadialProfile, spec: ProblemSpec,
                 t_cut: float = DEFAULT_T_CUT) -> ResidualReport:
    """Residual of ((-v1')^N)' = lam N t^(N-1) v2^alpha and ((-v2')^N)' = mu N t^(N-1) v1^beta.

    The equations are checked in once-integrated form, which is equivalent
    given v'(0) = 0; the boundary defects are reported alongside.
    """
    if v1.grid != v2.grid:
        raise ValueError("profiles must share a grid")
    return _residual_report(v1, v2, _power_source(spec.alpha), _power_source(spec.beta),
                            spec.N, spec.lam, spec.mu, t_cut)


def general_ode_residual(v1: RadialProfile, v2: RadialProfile, f: Nonlinearity, g: Nonlinearity, N: int,
                         t_cut: float = DEFAULT_T_CUT) -> ResidualReport:
    return _residual_report(v1, v2, f, g, int(N), 1.0, 1.0, t_cut)


def pde_residual(v: RadialProfile, rhs: RadialProfile, N: int, t_cut: float = DEFAULT_T_CUT) -> float:
    """Relative defect of det D^2 u = rhs for u(x) = -v(|x|), sampled on t >= t_cut.

    The radial Hessian has eigenvalue u'' once and u'/t with multiplicity N-1.
    u'' comes from the integral representation
    ``u'' = I^(1/N - 1) t^(N-1) rhs`` with ``I = int_0^t N tau^(N-1) rhs``;
    u' comes from a cubic spline of the profile.
    """
    if not 0 < t_cut <= 0.25:
        raise ValueError("t_cut must lie in (0, 1/4]")
    t = v.grid.nodes
    r = rhs.values
    scale = float(np.max(np.abs(r)))
    cum = spline_cumulative(rhs, lambda x: x, N)
    mask = t >= t_cut
    tm, cm, rm = t[mask], cum[mask], r[mask]
    upp = np.zeros_like(tm)
    pos = cm > 0
    upp[pos] = cm[pos] ** (1.0 / N - 1.0) * tm[pos] ** (N - 1) * rm[pos]
    up = -CubicSpline(t, v.values)(tm, 1)
    det = upp * (up / tm) ** (N - 1)
    defect = float(np.max(np.abs(det - rm)))
    return defect / scale if scale > 0 else defect


def reconstruct_ball(v: RadialProfile, dim: int, sample_points) -> np.ndarray:
    """Evaluate u(x) = -v(|x|) at points of the closed unit ball in R^dim.

    Uses monotone cubic (PCHIP) interpolation of the evenly extended profile.
    """
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.shape[-1] != dim:
        raise ValueError(f"points must have {dim} coordinates")
    # sorting the squares makes |x| exactly invariant under coordinate permutations
    r = np.sqrt(np.sum(np.sort(pts * pts, axis=-1), axis=-1))
    if np.any(r > 1.0 + 1e-12):
        raise OutOfDomainError(f"point with |x| = {r.max():.6g} lies outside the unit ball")
    r = np.minimum(r, 1.0)
    t = v.grid.nodes
    interp = PchipInterpolator(np.concatenate([-t[:0:-1], t]), np.concatenate([v.values[:0:-1], v.values]))
    return 0.0 - interp(r)


def critical_radius(N: int, alpha: float, cfg=None) -> float:
    """Radius R* at which the unit-coefficient balanced system on B_R becomes solvable."""
    from .solvers import principal_constant

    return principal_constant(N, alpha, cfg).critical_radius


def radius_from_constant(C: float, N: int, alpha: float) -> float:
    return C ** (1.0 / (2.0 * (N + alpha)))


def empirical_order(hs: Sequence[float], values: Sequence[float]) -> list[float]:
    """Observed convergence orders from consecutive triples of a refinement sequence.

    Solves (q1 - q2) / (q2 - q3) = (h1^p - h2^p) / (h2^p - h3^p) for p, which
    handles slightly non-constant refinement ratios.
    """
    from scipy.optimize import brentq

    orders = []
    for i in range(len(values) - 2):
        h1, h2, h3 = hs[i:i + 3]
        q1, q2, q3 = values[i:i + 3]
        target = (q1 - q2) / (q2 - q3)

        def fn(p):
            return (h1 ** p - h2 ** p) / (h2 ** p - h3 ** p) - target

        try:
            orders.append(brentq(fn, 0.1, 8.0))
        except ValueError:
            orders.append(math.nan)
    return orders
