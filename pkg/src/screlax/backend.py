"""Kernel dispatch: compiled extension with a pure-NumPy fallback.

The solver's hot loop is five small kernels; both implementations are
exchangeable and the test suite checks them against each other.  The
``SCRELAX_BACKEND`` environment variable picks one at import time:
``auto`` (default, compiled when the extension built), ``python`` or
``compiled``.

Kernel contracts (all float64; matrices Fortran-ordered):

    descent(corr_c, corr_p, x, xp, lam, forced, eps, omega, step)
        -> (x_new, v): one extrapolated prox step from the cached
        residual correlations at the two latest iterates; ``forced``
        (bool mask or None) pins coordinates at 0.
    residual(A, x, y)        -> y - A @ x
    adjoint(A, c)            -> A.T @ c
    hinge_sq(h, mask)        -> sum of max(h, 0)^2 over mask (None = all)
    certificate(A, y, lam, eps, x)
        -> (resid, corr, primal, dual) for the full problem at x.
"""

import os

import numpy as np

__all__ = ["Backend", "HAVE_COMPILED", "available_backends", "get_backend"]

try:
    from . import _kernels

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None
    HAVE_COMPILED = False

_EMPTY_U8 = np.empty(0, dtype=np.uint8)


class Backend:
    """A named bundle of the five hot-loop kernels."""

    def __init__(self, name, descent, residual, adjoint, hinge_sq, certificate):
        self.name = name
        self.descent = descent
        self.residual = residual
        self.adjoint = adjoint
        self.hinge_sq = hinge_sq
        self.certificate = certificate

    def __repr__(self):
        return f"Backend({self.name!r})"


def _descent_np(corr_c, corr_p, x, xp, lam, forced, eps, omega, step):
    v = x + omega * (x - xp)
    grad = omega * corr_p - (1.0 + omega) * corr_c + eps * v
    x_new = np.maximum(v - step * (grad + lam), 0.0)
    if forced is not None:
        x_new[forced] = 0.0
    return x_new, v


def _residual_np(A, x, y):
    if x.shape[0] == 0:
        return y.copy()
    return y - A @ x


def _adjoint_np(A, c):
    return A.T @ c


def _hinge_sq_np(h, mask=None):
    z = h if mask is None else h[mask]
    z = np.maximum(z, 0.0)
    return float(z @ z)


def _certificate_np(A, y, lam, eps, x):
    resid = y - A @ x
    corr = A.T @ resid
    ax = y - resid
    primal = 0.5 * float(resid @ resid) + float(lam @ x) + 0.5 * eps * float(x @ x)
    pen = _hinge_sq_np(corr - lam)
    dual = 0.5 * float(y @ y) - 0.5 * float(ax @ ax) - pen / (2.0 * eps)
    return resid, corr, primal, dual


_PYTHON = Backend(
    "python", _descent_np, _residual_np, _adjoint_np, _hinge_sq_np, _certificate_np
)


def _descent_cy(corr_c, corr_p, x, xp, lam, forced, eps, omega, step):
    n = x.shape[0]
    if n == 0:
        return np.empty(0), np.empty(0)
    f = _EMPTY_U8 if forced is None else np.ascontiguousarray(forced, dtype=np.uint8)
    return _kernels.descent(corr_c, corr_p, x, xp, lam, f, eps, omega, step)


def _residual_cy(A, x, y):
    if x.shape[0] == 0 or A.shape[0] == 0:
        return y.copy()
    return _kernels.residual(A, x, y)


def _adjoint_cy(A, c):
    m, n = A.shape
    if n == 0:
        return np.empty(0)
    if m == 0:
        return np.zeros(n)
    return _kernels.adjoint(A, c)


def _hinge_sq_cy(h, mask=None):
    if h.shape[0] == 0:
        return 0.0
    f = _EMPTY_U8 if mask is None else np.ascontiguousarray(mask, dtype=np.uint8)
    return _kernels.hinge_sq(h, f)


def _certificate_cy(A, y, lam, eps, x):
    if A.shape[0] == 0 or A.shape[1] == 0:
        return _certificate_np(A, y, lam, eps, x)
    return _kernels.certificate(A, y, lam, eps, x)


def _compiled_backend():
    return Backend(
        "compiled", _descent_cy, _residual_cy, _adjoint_cy, _hinge_sq_cy,
        _certificate_cy,
    )


def available_backends():
    """Names of the backends importable in this installation."""
    return ("python", "compiled") if HAVE_COMPILED else ("python",)


def get_backend(name=None):
    """Resolve a backend by name, or from SCRELAX_BACKEND when None.

    ``auto`` prefers the compiled extension and falls back to python.
    Asking for ``compiled`` when the extension is missing raises.
    """
    if name is None:
        name = os.environ.get("SCRELAX_BACKEND", "auto")
    name = name.lower()
    if name == "auto":
        return _compiled_backend() if HAVE_COMPILED else _PYTHON
    if name == "python":
        return _PYTHON
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError(
                "compiled backend requested but the extension is not built"
            )
        return _compiled_backend()
    raise ValueError(f"unknown backend {name!r} (use auto, python or compiled)")
