"""Pure numpy implementation of the quadrature kernels.

Mirrors ``_kernels.pyx`` exactly in summation order; the two backends agree to
a few ulps (libm vs numpy transcendental functions).
"""
import numpy as np

_TINY = 1e-300
MAX_INT_POWER = 16


def integer_exponent(gamma):
    """Small positive integer exponents take the multiplication path, else -1."""
    k = int(gamma)
    return k if k == gamma and 1 <= k <= MAX_INT_POWER else -1


def _int_power(x, k):
    # binary powering, same multiplication order as the compiled kernel
    result = np.ones_like(x)
    base = x.copy()
    while k:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


def _positive_power(x, gamma):
    k = integer_exponent(gamma)
    if k > 0:
        # x is clamped nonnegative upstream, so 0 maps to 0 without masking
        return _int_power(np.maximum(x, 0.0), k)
    out = np.zeros_like(x)
    mask = x > 0.0
    out[mask] = np.exp(gamma * np.log(np.maximum(x[mask], _TINY)))
    return out


def _root(cum, coef, N):
    scaled = coef * cum
    out = np.zeros_like(scaled)
    mask = scaled > 0.0
    out[mask] = np.sqrt(scaled[mask]) if N == 2 else np.power(scaled[mask], 1.0 / N)
    return out


def cell_sums(fq, W):
    """Cumulative sum of per-cell quadrature contributions, starting at 0."""
    cum = np.empty(fq.shape[0] + 1)
    cum[0] = 0.0
    np.cumsum((fq * W).sum(axis=1), out=cum[1:])
    return cum


def inner_root_power(v, gamma, coef, N, s, W):
    v = np.ascontiguousarray(v, dtype=float)
    vl = v[:-1, None] * (1.0 - s) + v[1:, None] * s
    return _root(cell_sums(_positive_power(vl, gamma), W), coef, N)


def inner_root_source(fq, coef, N, W):
    return _root(cell_sums(np.asarray(fq, dtype=float), W), coef, N)


def outer_tail(g, h):
    g = np.ascontiguousarray(g, dtype=float)
    out = np.empty_like(g)
    out[-1] = 0.0
    inc = 0.5 * h * (g[1:] + g[:-1])
    np.cumsum(inc[::-1], out=out[-2::-1])
    return out


def power_operator(v, gamma, coef, N, s, W, h):
    return outer_tail(inner_root_power(v, gamma, coef, N, s, W), h)
