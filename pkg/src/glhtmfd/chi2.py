"""Chi-square law with real degrees of freedom.

``chi2_d`` is the gamma law with shape ``d/2`` and scale 2, so everything
here reduces to the regularized incomplete gamma functions ``P(a, x)`` and
``Q(a, x) = 1 - P(a, x)``.  ``P`` is summed as a power series below
``x = a + 1`` and ``Q`` is evaluated by a modified Lentz continued fraction
above it; each one is computed directly (never as ``1 -`` the other) so
both tails keep full relative accuracy.
"""

from __future__ import annotations

import math

_EPS = 1e-16
_TINY = 1e-300
_MAXITER = 100000


def _log_prefactor(a: float, x: float) -> float:
    return a * math.log(x) - x - math.lgamma(a)


def _lower_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAXITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(_log_prefactor(a, x))


def _upper_fraction(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAXITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(_log_prefactor(a, x))


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x)``."""
    if a <= 0:
        raise ValueError("shape must be positive")
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _lower_series(a, x)
    return 1.0 - _upper_fraction(a, x)


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x)``."""
    if a <= 0:
        raise ValueError("shape must be positive")
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_fraction(a, x)


def cdf(x: float, d: float) -> float:
    return gammainc_lower(0.5 * d, 0.5 * x)


def sf(x: float, d: float) -> float:
    return gammainc_upper(0.5 * d, 0.5 * x)


def pdf(x: float, d: float) -> float:
    if x <= 0:
        if d < 2:
            return math.inf if x == 0 else 0.0
        return (0.5 if d == 2 else 0.0) if x == 0 else 0.0
    a = 0.5 * d
    return math.exp((a - 1.0) * math.log(x) - 0.5 * x - a * math.log(2.0) - math.lgamma(a))


def _wilson_hilferty(prob: float, d: float) -> float:
    z = _norm_ppf(prob)
    c = 2.0 / (9.0 * d)
    return max(d * (1.0 - c + z * math.sqrt(c)) ** 3, 1e-300)


def ppf(prob: float, d: float) -> float:
    """Quantile: the ``x`` with ``cdf(x, d) == prob``."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError("probability must be in [0, 1]")
    if prob == 0.0:
        return 0.0
    if prob == 1.0:
        return math.inf
    if prob > 0.5:
        return _solve(lambda x: sf(x, d), 1.0 - prob, d, upper=True, guess=_wilson_hilferty(prob, d))
    return _solve(lambda x: cdf(x, d), prob, d, upper=False, guess=_wilson_hilferty(prob, d))


def isf(alpha: float, d: float) -> float:
    """Upper ``alpha`` point: the ``x`` with ``sf(x, d) == alpha``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("probability must be in [0, 1]")
    if alpha == 0.0:
        return math.inf
    if alpha == 1.0:
        return 0.0
    if alpha < 0.5:
        return _solve(lambda x: sf(x, d), alpha, d, upper=True, guess=_wilson_hilferty(1.0 - alpha, d))
    return _solve(lambda x: cdf(x, d), 1.0 - alpha, d, upper=False, guess=_wilson_hilferty(1.0 - alpha, d))


def _solve(fn, target, d, upper, guess):
    """Newton on a bracketed monotone tail function, bisecting when Newton leaves the bracket."""
    sign = -1.0 if upper else 1.0  # derivative sign of fn
    lo, hi = 0.0, max(guess, 1.0)
    while (fn(hi) - target) * sign < 0:
        lo, hi = hi, 2.0 * hi
    x = min(max(guess, lo), hi)
    for _ in range(400):
        f = fn(x) - target
        if f == 0:
            return x
        if f * sign < 0:
            lo = x
        else:
            hi = x
        dens = pdf(x, d)
        step = f / (sign * dens) if dens > 0 else math.inf
        x_new = x - step
        if not (lo < x_new < hi) or not math.isfinite(x_new):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-12 * abs(x_new) or hi - lo <= 1e-15 * hi:
            return x_new
        x = x_new
    return x


def _norm_ppf(prob: float) -> float:
    # Acklam's rational approximation; only used for starting values.
    a = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
    b = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
    e = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00)
    if prob < 0.02425:
        q = math.sqrt(-2 * math.log(prob))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1)
    if prob > 1 - 0.02425:
        return -_norm_ppf(1 - prob)
    q = prob - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1)
