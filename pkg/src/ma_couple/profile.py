"""Radial grids, sampled profiles and the quadrature primitives behind every operator.

The inner integral ``s -> (int_0^s N tau^(N-1) v(tau)^gamma dtau)^(1/N)`` is
discretized per cell by interpolating the profile linearly and applying an
``m``-point Gauss-Legendre rule to ``N tau^(N-1) v_lin(tau)^gamma``; ``m`` is
large enough that the kernel ``N tau^(N-1)`` alone is integrated exactly, so a
constant profile reproduces ``s`` to rounding. The outer integral is the
composite trapezoid rule swept from ``t = 1``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import NegativeInputError

MIN_NODES = 16
DEFAULT_NODES = 2048
GRID_ENV = "MA_COUPLE_GRID"
CLAMP_RTOL = 1e-12


def default_grid_size() -> int:
    raw = os.environ.get(GRID_ENV)
    return int(raw) if raw else DEFAULT_NODES


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, 1] with ``n_nodes`` nodes (both endpoints included)."""

    n_nodes: int

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < MIN_NODES:
            raise ValueError(f"n_nodes must be an integer >= {MIN_NODES}, got {self.n_nodes!r}")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))

    @property
    def nodes(self) -> np.ndarray:
        return _nodes(self.n_nodes)

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n_nodes - 1)

    def profile(self, values) -> "RadialProfile":
        return RadialProfile(self, values)

    def evaluate(self, func) -> "RadialProfile":
        return RadialProfile(self, func(self.nodes))

    @classmethod
    def default(cls) -> "Grid":
        return cls(default_grid_size())


@lru_cache(maxsize=32)
def _nodes(n):
    t = np.linspace(0.0, 1.0, n)
    t.flags.writeable = False
    return t


def gauss_order(N: int) -> int:
    """Points per cell: exact for the degree N-1 kernel, never fewer than two."""
    return max(2, (N + 1) // 2)


@lru_cache(maxsize=64)
def quadrature_table(n_nodes: int, N: int):
    """Per-cell Gauss abscissae ``s`` (fractions of a cell) and weights ``W``.

    ``W[i, q]`` already contains the kernel ``N tau^(N-1)`` and the cell
    Jacobian, so a cell contributes ``sum_q W[i, q] * f(v_lin(t_i + h s_q))``.
    """
    m = gauss_order(N)
    x, w = np.polynomial.legendre.leggauss(m)
    s = 0.5 * (x + 1.0)
    h = 1.0 / (n_nodes - 1)
    t = _nodes(n_nodes)
    tau = t[:-1, None] + h * s[None, :]
    W = N * tau ** (N - 1) * (0.5 * h * w)[None, :]
    s.flags.writeable = False
    W.flags.writeable = False
    return s, W


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A function on [0, 1] sampled at the nodes of a :class:`Grid`."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] != self.grid.n_nodes:
            raise ValueError(f"expected {self.grid.n_nodes} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("profile values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def nodes(self):
        return self.grid.nodes

    def __len__(self):
        return self.grid.n_nodes

    def __repr__(self):
        return f"RadialProfile(n={self.grid.n_nodes}, sup={sup_norm(self):.6g})"

    def with_values(self, values) -> "RadialProfile":
        return RadialProfile(self.grid, values)

    def scaled(self, c: float) -> "RadialProfile":
        return RadialProfile(self.grid, c * self.values)

    def negated(self) -> "RadialProfile":
        # 0.0 - v keeps +0.0 where v == 0 (no "-0" in exports)
        return RadialProfile(self.grid, 0.0 - self.values)

    def __sub__(self, other):
        return RadialProfile(self.grid, self.values - _values_on(other, self.grid))

    def __add__(self, other):
        return RadialProfile(self.grid, self.values + _values_on(other, self.grid))

    def __mul__(self, c):
        return self.scaled(float(c))

    __rmul__ = __mul__


def _values_on(p, grid):
    if isinstance(p, RadialProfile):
        if p.grid != grid:
            raise ValueError("profiles live on different grids")
        return p.values
    return np.asarray(p, dtype=float)


def sup_norm(v) -> float:
    vals = v.values if isinstance(v, RadialProfile) else np.asarray(v, dtype=float)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def clamp_nonnegative(values: np.ndarray, what: str = "profile") -> np.ndarray:
    """Zero out round-off negatives; reject anything below ``-1e-12 * sup``."""
    values = np.asarray(values, dtype=float)
    lo = values.min()
    if lo >= 0.0:
        return values
    tol = CLAMP_RTOL * float(np.max(np.abs(values)))
    if lo < -tol:
        raise NegativeInputError(f"{what} has value {lo:.3e} below clamp tolerance {tol:.1e}")
    return np.maximum(values, 0.0)


def inner_cumulative(v: RadialProfile, gamma: float, N: int, coef: float = 1.0) -> RadialProfile:
    """``s -> (coef * int_0^s N tau^(N-1) v^gamma dtau)^(1/N)``; nondecreasing, zero at 0."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    vals = clamp_nonnegative(v.values)
    s, W = quadrature_table(v.grid.n_nodes, int(N))
    return RadialProfile(v.grid, kernels.inner_root_power(vals, float(gamma), float(coef), int(N), s, W))


def outer_tail(w: RadialProfile) -> RadialProfile:
    """``t -> int_t^1 w(s) ds`` by the trapezoid rule from the right end."""
    return RadialProfile(w.grid, kernels.outer_tail(w.values, w.grid.spacing))


@dataclass(frozen=True)
class ConeReport:
    nonnegative: bool
    concave_within_tol: bool
    harnack_ratio: float
    tolerance_used: float
    max_second_difference: float = 0.0

    @property
    def passes(self) -> bool:
        return self.nonnegative and self.harnack_ratio >= 0.25 - self.tolerance_used


def cone_report(v: RadialProfile, tol: float | None = None) -> ConeReport:
    """Membership diagnostics for K = {v >= 0, min over [1/4, 3/4] >= sup/4}.

    Second differences and negativity are measured relative to the sup norm;
    the default tolerance is ``10 * spacing**2``.
    """
    if tol is None:
        tol = 10.0 * v.grid.spacing ** 2
    vals = v.values
    sup = sup_norm(v)
    scale = sup if sup > 0 else 1.0
    d2 = vals[:-2] - 2.0 * vals[1:-1] + vals[2:]
    max_d2 = float(d2.max()) / scale if d2.size else 0.0
    t = v.grid.nodes
    mid = (t >= 0.25) & (t <= 0.75)
    # the zero profile satisfies the Harnack condition vacuously
    ratio = float(vals[mid].min()) / sup if sup > 0 else 1.0
    return ConeReport(
        nonnegative=bool(vals.min() >= -tol * scale),
        concave_within_tol=bool(max_d2 <= tol),
        harnack_ratio=ratio,
        tolerance_used=float(tol),
        max_second_difference=max_d2,
    )


PRESETS = ("parabola", "linear", "constant-on-cone")


def preset_profile(name: str, grid: Grid) -> RadialProfile:
    t = grid.nodes
    if name == "parabola":
        return RadialProfile(grid, 1.0 - t * t)
    if name == "linear":
        return RadialProfile(grid, 1.0 - t)
    if name == "constant-on-cone":
        # the constant 1 already satisfies the Harnack condition of K
        return RadialProfile(grid, np.ones_like(t))
    raise ValueError(f"unknown initial profile {name!r}; choose from {PRESETS}")
