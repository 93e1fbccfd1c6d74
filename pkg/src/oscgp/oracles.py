"""Independent numerical references used by ``series-check`` and the test suite.

These deliberately avoid the series and closed forms in :mod:`oscgp.core`.
"""

import math

import numpy as np
from scipy import LowLevelCallable, integrate

__all__ = ["orthant_moment_quadrature", "orthant_sweep"]


def _python_integrand(y, x, m, n, a):
    b = 1.0 - a * a
    return x ** m * y ** n * math.exp(-(x * x + y * y - 2.0 * a * x * y) / (2.0 * b)) / (
        2.0 * math.pi * math.sqrt(b)
    )


def _compiled_integrand():
    try:
        import numba
        from numba import types
    except ImportError:  # pragma: no cover - numba is an optional speed-up
        return None

    @numba.cfunc(types.double(types.intc, types.CPointer(types.double)))
    def f(_n, xx):
        y, x, m, n, a = xx[0], xx[1], xx[2], xx[3], xx[4]
        b = 1.0 - a * a
        return x ** m * y ** n * math.exp(-(x * x + y * y - 2.0 * a * x * y) / (2.0 * b)) / (
            2.0 * math.pi * math.sqrt(b)
        )

    return LowLevelCallable(f.ctypes)


_LLC = None


def orthant_moment_quadrature(m, n, a, epsabs=1e-12, epsrel=1e-12):
    """``E[N1^m N2^n 1{N1>0, N2>0}]`` by 2-D adaptive quadrature of the bivariate density."""
    global _LLC
    if not abs(a) < 1:
        raise ValueError("correlation must satisfy |a| < 1")
    if _LLC is None:
        _LLC = _compiled_integrand() or _python_integrand
    opts = {"epsabs": epsabs, "epsrel": epsrel, "limit": 200}
    val, _ = integrate.nquad(
        _LLC, [[0, np.inf], [0, np.inf]], args=(float(m), float(n), float(a)), opts=opts
    )
    return val


def orthant_sweep(max_mn=4, a_step=0.05, a_max=0.95, tol=1e-8, series_tol=1e-12):
    """Compare the series against quadrature on a grid; returns a list of records.

    ``tol`` is the acceptance threshold on the absolute difference;
    ``series_tol`` is the truncation tolerance handed to the series.
    """
    from .core import orthant_moment_series

    n_a = int(round(2 * a_max / a_step))
    grid = np.round(np.linspace(-a_max, a_max, n_a + 1), 12)
    out = []
    for a in grid:
        for m in range(max_mn + 1):
            for n in range(m, max_mn + 1):
                ref = float(orthant_moment_quadrature(m, n, a))
                val = float(orthant_moment_series(m, n, a, tol=series_tol))
                err = abs(val - ref)
                rec = {"m": m, "n": n, "a": float(a), "series": val, "quadrature": ref, "abs_err": err,
                       "ok": bool(err <= tol)}
                out.append(rec)
                if m != n:
                    # (N1, N2) is exchangeable, so the quadrature value is shared
                    val = float(orthant_moment_series(n, m, a, tol=series_tol))
                    err = abs(val - ref)
                    out.append(dict(rec, m=n, n=m, series=val, abs_err=err, ok=bool(err <= tol)))
    return out
