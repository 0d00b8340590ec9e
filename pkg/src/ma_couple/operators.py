"""Cone operators T1, T2, their composite T and the lambda/mu-scaled variants.

For a nonnegative profile ``v``::

    T_gamma(v)(t) = int_t^1 ( int_0^s N tau^(N-1) coef * v(tau)^gamma dtau )^(1/N) ds

with ``(gamma, coef) = (alpha, lambda)`` for T1 and ``(beta, mu)`` for T2.
The unscaled operators use ``coef = 1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .errors import InvalidSpecError, NonlinearityRangeError
from .profile import RadialProfile, clamp_nonnegative, quadrature_table


class Regime(str, enum.Enum):
    SUBLINEAR = "sublinear"
    BALANCED = "balanced"
    SUPERLINEAR = "superlinear"


@dataclass(frozen=True)
class ProblemSpec:
    N: int
    alpha: float
    beta: float
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise InvalidSpecError(f"dimension N must be an integer >= 2, got {self.N!r}")
        for name in ("alpha", "beta", "lam", "mu"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise InvalidSpecError(f"{name} must be a positive finite number, got {val!r}")
        object.__setattr__(self, "N", int(self.N))
        for name in ("alpha", "beta", "lam", "mu"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def balanced(cls, N: int, alpha: float, lam: float = 1.0, mu: float = 1.0) -> "ProblemSpec":
        return cls(N, alpha, N * N / alpha, lam, mu)

    @property
    def degree(self) -> float:
        """Homogeneity degree p = alpha * beta / N^2 of the composite operator."""
        return self.alpha * self.beta / (self.N * self.N)

    @property
    def regime(self) -> Regime:
        prod, target = self.alpha * self.beta, float(self.N * self.N)
        if math.isclose(prod, target, rel_tol=1e-12):
            return Regime.BALANCED
        return Regime.SUBLINEAR if prod < target else Regime.SUPERLINEAR

    @property
    def scale_factor(self) -> float:
        """lambda^(1/N) * mu^(alpha/N^2): scaled composite = scale_factor * unscaled."""
        N = self.N
        return self.lam ** (1.0 / N) * self.mu ** (self.alpha / (N * N))

    @property
    def threshold_product(self) -> float:
        """lambda * mu^(alpha/N), the quantity compared against C."""
        return self.lam * self.mu ** (self.alpha / self.N)

    def unscaled(self) -> "ProblemSpec":
        return ProblemSpec(self.N, self.alpha, self.beta)

    def as_dict(self):
        return {"N": self.N, "alpha": self.alpha, "beta": self.beta, "lambda": self.lam, "mu": self.mu}


def _apply_power(v: RadialProfile, gamma: float, coef: float, N: int) -> RadialProfile:
    vals = clamp_nonnegative(v.values)
    s, W = quadrature_table(v.grid.n_nodes, N)
    out = kernels.power_operator(vals, gamma, coef, N, s, W, v.grid.spacing)
    return RadialProfile(v.grid, out)


def apply_power_operator(v: RadialProfile, gamma: float, N: int, coef: float = 1.0) -> RadialProfile:
    """Single-exponent operator; T1/T2 and the scalar eigen map are special cases."""
    return _apply_power(v, float(gamma), float(coef), int(N))


def apply_T1(v: RadialProfile, spec: ProblemSpec) -> RadialProfile:
    return _apply_power(v, spec.alpha, 1.0, spec.N)


def apply_T2(v: RadialProfile, spec: ProblemSpec) -> RadialProfile:
    return _apply_power(v, spec.beta, 1.0, spec.N)


def apply_T(v: RadialProfile, spec: ProblemSpec) -> RadialProfile:
    return apply_T1(apply_T2(v, spec), spec)


def apply_T1_scaled(v: RadialProfile, spec: ProblemSpec) -> RadialProfile:
    return _apply_power(v, spec.alpha, spec.lam, spec.N)


def apply_T2_scaled(v: RadialProfile, spec: ProblemSpec) -> RadialProfile:
    return _apply_power(v, spec.beta, spec.mu, spec.N)


def apply_T_scaled(v: RadialProfile, spec: ProblemSpec) -> RadialProfile:
    """Composite with lambda and mu kept inside the integrands (no factorization shortcut)."""
    return apply_T1_scaled(apply_T2_scaled(v, spec), spec)


@dataclass(frozen=True)
class Nonlinearity:
    """A source term ``f: [0, inf) -> [0, inf)``; ``evaluator`` must accept numpy arrays."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    monotone_nondecreasing: bool = True
    name: str = "f"

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(self.evaluator(x), dtype=float)
        if y.shape != x.shape:
            y = np.broadcast_to(y, x.shape).astype(float)
        if not np.all(np.isfinite(y)):
            raise NonlinearityRangeError(f"{self.name} returned a non-finite value")
        if np.any(y < 0):
            raise NonlinearityRangeError(f"{self.name} returned a negative value ({y.min():.3e})")
        return y

    @classmethod
    def power(cls, exponent: float) -> "Nonlinearity":
        e = float(exponent)

        def f(x):
            out = np.zeros_like(x)
            mask = x > 0
            out[mask] = np.exp(e * np.log(np.maximum(x[mask], 1e-300)))
            return out

        return cls(f, True, f"x^{e:g}")


def apply_general(v: RadialProfile, f: Nonlinearity, N: int, coef: float = 1.0) -> RadialProfile:
    """``t -> int_t^1 (int_0^s N tau^(N-1) f(v(tau)) dtau)^(1/N) ds`` for a user source."""
    N = int(N)
    vals = clamp_nonnegative(v.values)
    s, W = quadrature_table(v.grid.n_nodes, N)
    vl = vals[:-1, None] * (1.0 - s) + vals[1:, None] * s
    g = kernels.inner_root_source(f(vl), float(coef), N, W)
    return RadialProfile(v.grid, kernels.outer_tail(g, v.grid.spacing))


@dataclass(frozen=True)
class Classification:
    label: str  # "case1", "case2" or "indeterminate"
    q_lo: float
    q_hi: float
    probe_lo: float
    probe_hi: float
    small: float
    large: float
    monotone_violations: int

    def as_dict(self):
        return dict(self.__dict__)


def composite_ratio(f: Nonlinearity, g: Nonlinearity, N: int, x) -> np.ndarray:
    """q(x) = f^(1/N)(g^(1/N)(x)) / x."""
    x = np.asarray(x, dtype=float)
    inner = g(x) ** (1.0 / N)
    return f(inner) ** (1.0 / N) / x


def classify_general(f: Nonlinearity, g: Nonlinearity, N: int, probe_lo: float = 1e-6,
                     probe_hi: float = 1e6, small: float = 0.1, large: float = 10.0,
                     seed: int = 0) -> Classification:
    """Advisory check of the limits of q(x) at 0 and infinity using finite probes."""
    if not 0 < probe_lo < probe_hi:
        raise ValueError("need 0 < probe_lo < probe_hi")
    q_lo, q_hi = (float(q) for q in composite_ratio(f, g, N, [probe_lo, probe_hi]))
    if q_lo < small and q_hi > large:
        label = "case1"
    elif q_lo > large and q_hi < small:
        label = "case2"
    else:
        label = "indeterminate"
    return Classification(label, q_lo, q_hi, probe_lo, probe_hi, small, large,
                          monotone_spot_check(f, probe_lo, probe_hi, seed)
                          + monotone_spot_check(g, probe_lo, probe_hi, seed + 1))


def monotone_spot_check(f: Nonlinearity, lo: float, hi: float, seed: int = 0, pairs: int = 64) -> int:
    """Count violations of f(a) <= f(b) over random log-uniform pairs a < b."""
    rng = np.random.default_rng(seed)
    ab = np.sort(np.exp(rng.uniform(np.log(lo), np.log(hi), size=(pairs, 2))), axis=1)
    fa, fb = f(ab[:, 0]), f(ab[:, 1])
    return int(np.count_nonzero(fa > fb * (1 + 1e-12)))
