"""Scalar bisection and golden-section search used by the solvers.

Both routines report non-convergence instead of silently truncating.
"""
from __future__ import annotations

import math

from .errors import ConvergenceError

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def bisect_root(f, lo: float, hi: float, xtol: float, max_iter: int = 200) -> float:
    """Root of f on [lo, hi] given f(lo) and f(hi) of opposite sign.

    Returns the bracket midpoint once hi - lo <= xtol.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise ValueError(f"no sign change on [{lo!r}, {hi!r}]")
    for _ in range(max_iter):
        if hi - lo <= xtol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == (flo > 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    raise ConvergenceError(
        f"bisection did not reach xtol={xtol} within {max_iter} iterations"
    )


def golden_section_min(
    f, a: float, b: float, xtol: float, max_iter: int = 200
) -> tuple[float, float]:
    """Minimize a strictly unimodal f on [a, b] to bracket width xtol.

    Returns (x, f(x)) for the best of the bracket midpoint and the two
    original endpoints, so boundary minima are reported exactly.
    """
    lo, hi = a, b
    c = hi - _INV_GOLDEN * (hi - lo)
    d = lo + _INV_GOLDEN * (hi - lo)
    fc = f(c)
    fd = f(d)
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_GOLDEN * (hi - lo)
            fd = f(d)
    else:
        raise ConvergenceError(
            f"golden-section search did not reach xtol={xtol} "
            f"within {max_iter} iterations"
        )
    mid = 0.5 * (lo + hi)
    # ties resolve toward the smaller x, deterministically
    return min((f(mid), mid), (f(a), a), (f(b), b))[::-1]
