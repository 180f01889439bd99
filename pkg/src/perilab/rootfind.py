"""Bracketed scalar root finding (Dekker/Brent "zeroin").

Combines bisection with secant and inverse-quadratic interpolation; given a
sign-change bracket it converges to machine-level tolerance with guaranteed
bisection fallback.  Follows Brent's classic formulation (Brent,
"Algorithms for Minimization Without Derivatives", ch. 4).
"""

from __future__ import annotations

import numpy as np

__all__ = ["brent", "BracketError"]

_EPS = float(np.finfo(np.float64).eps)


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


def brent(f, a: float, b: float, xtol: float = 0.0, rtol: float = 4.0 * _EPS,
          maxiter: int = 200) -> float:
    """Root of f in [a, b], where f(a) and f(b) have opposite signs.

    Converges when the bracket width falls below 2*rtol*|x| + xtol.  The
    default rtol is four machine epsilons, i.e. essentially exact.
    """
    if rtol < _EPS:
        raise ValueError(f"rtol must be at least machine epsilon, got {rtol}")
    fa = f(a)
    fb = f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise BracketError(f"f({a}) = {fa:.6g} and f({b}) = {fb:.6g} have the same sign")

    c, fc = a, fa
    e = d = b - a

    for _ in range(maxiter):
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb

        tol = 2.0 * rtol * abs(b) + xtol
        m = 0.5 * (c - b)
        if abs(m) <= tol or fb == 0.0:
            return b

        if abs(e) < tol or abs(fa) <= abs(fb):
            e = d = m    # bisect
        else:
            s = fb / fa
            if a == c:
                # secant
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                # inverse quadratic
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            s = e
            e = d
            if 2.0 * p < 3.0 * m * q - abs(tol * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                e = d = m

        a, fa = b, fb
        if abs(d) > tol:
            b += d
        elif m > 0.0:
            b += tol
        else:
            b -= tol
        fb = f(b)
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            e = d = b - a

    return b
