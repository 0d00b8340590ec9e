"""Backend selection for the hot quadrature kernels.

The compiled Cython module is used when it was built; otherwise the numpy
implementation is loaded. Setting ``MA_COUPLE_PURE_PYTHON=1`` forces the
fallback at import time; :func:`use_backend` switches temporarily.
"""
import contextlib
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

if os.environ.get("MA_COUPLE_PURE_PYTHON", "") not in ("", "0") or _compiled is None:
    _impl = _kernels_py
else:
    _impl = _compiled


def backend_name():
    return "cython" if _impl is _compiled and _compiled is not None else "python"


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})") from None


@contextlib.contextmanager
def use_backend(name):
    global _impl
    previous = _impl
    _impl = get_backend(name)
    try:
        yield _impl
    finally:
        _impl = previous


def inner_root_power(v, gamma, coef, N, s, W):
    return _impl.inner_root_power(v, gamma, coef, N, s, W)


def inner_root_source(fq, coef, N, W):
    return _impl.inner_root_source(fq, coef, N, W)


def outer_tail(g, h):
    return _impl.outer_tail(g, h)


def power_operator(v, gamma, coef, N, s, W, h):
    return _impl.power_operator(v, gamma, coef, N, s, W, h)
