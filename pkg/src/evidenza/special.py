"""Scalar special functions and log-domain arithmetic.

Evidence-scale quantities are carried as natural logarithms ("log values");
``-inf`` encodes zero.  Nothing in here converts back to linear scale.
"""

import math
import warnings

import numpy as np
from scipy import integrate, special as sc

from .errors import DomainError, QuadratureError

EULER_GAMMA = 0.57721566490153286061

__all__ = [
    "std_normal_cdf",
    "std_normal_sf",
    "std_normal_quantile",
    "exp_integral_e1",
    "reg_lower_gamma",
    "reg_lower_gamma_inv",
    "kummer_u",
    "log_sum_exp",
    "log_trapezoid",
    "log_diff_exp",
]


# -----------------------------------------------------------------------------
# Normal distribution


def std_normal_cdf(x):
    """Standard normal CDF, accurate in the lower tail."""
    return sc.ndtr(x)


def std_normal_sf(x):
    """Standard normal survival function ``1 - Phi(x)`` without cancellation."""
    return sc.ndtr(-np.asarray(x, dtype=float))


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf`.

    Raises
    ------
    DomainError
        If any ``p`` lies outside the open interval (0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0.0) & (p_arr < 1.0))):
        raise DomainError("normal quantile requires p in (0, 1)")
    return sc.ndtri(p)


# -----------------------------------------------------------------------------
# Exponential integral


def _e1_series(x):
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    total = 0.0
    term = 1.0
    k = 1
    while True:
        term *= -x / k
        contrib = term / k
        total += contrib
        if abs(contrib) <= 1e-17 * abs(total):
            break
        k += 1
        if k > 500:
            raise QuadratureError("E1 series failed to converge")
    return -EULER_GAMMA - math.log(x) - total


def _e1_continued_fraction(x):
    # Modified Lentz evaluation of e^x E1(x) = 1/(x+1- 1^2/(x+3- 2^2/(x+5- ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h * math.exp(-x)
    raise QuadratureError("E1 continued fraction failed to converge")


def exp_integral_e1(x):
    """Exponential integral ``E1(x) = int_x^inf exp(-t)/t dt`` for ``x > 0``.

    Power series below ``x = 1``, Lentz continued fraction above.  Relative
    error is at the level of a few ulps on both branches.
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError("E1 is defined here for x > 0 only")
    if x <= 1.0:
        return _e1_series(x)
    return _e1_continued_fraction(x)


# -----------------------------------------------------------------------------
# Incomplete gamma


def reg_lower_gamma(a, x):
    """Regularized lower incomplete gamma ``P(a, x)``."""
    a_arr = np.asarray(a, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(a_arr > 0.0)):
        raise DomainError("P(a, x) requires a > 0")
    if np.any(x_arr < 0.0) or np.any(np.isnan(x_arr)):
        raise DomainError("P(a, x) requires x >= 0")
    return sc.gammainc(a_arr, x_arr)


def reg_lower_gamma_inv(a, p, x_max=None, iterations=200):
    """Invert ``P(a, .)`` by bisection on ``log x``.

    Parameters
    ----------
    a : float
        Shape, ``a > 0``.
    p : float or array_like
        Target probabilities in ``[0, P(a, x_max)]``.
    x_max : float, optional
        Known upper bracket.  Must satisfy ``P(a, x_max) >= p``; when omitted
        a bracket is found by doubling.
    iterations : int
        Bisection steps.  Each halves the bracket in log space.

    Returns
    -------
    numpy.ndarray or float
        ``x`` with ``P(a, x) = p``.
    """
    a = float(a)
    if not a > 0.0:
        raise DomainError("P^-1(a, p) requires a > 0")
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p_arr < 0.0) or np.any(p_arr > 1.0):
        raise DomainError("P^-1(a, p) requires p in [0, 1]")
    scalar = np.ndim(p) == 0

    x = np.zeros_like(p_arr)
    pos = p_arr > 0.0
    if np.any(pos):
        pp = p_arr[pos]
        # P(a, x) <= x^a / Gamma(a+1) gives a guaranteed lower bracket.
        log_lo = (np.log(pp) + sc.gammaln(a + 1.0)) / a
        if x_max is None:
            hi = max(2.0 * a, 1.0)
            while np.any(sc.gammainc(a, hi) < pp) and hi < 1e300:
                hi *= 2.0
            log_hi = np.full_like(pp, math.log(hi))
        else:
            log_hi = np.full_like(pp, math.log(x_max))
        log_lo = np.minimum(log_lo, log_hi)
        for _ in range(iterations):
            mid = 0.5 * (log_lo + log_hi)
            below = sc.gammainc(a, np.exp(mid)) < pp
            log_lo = np.where(below, mid, log_lo)
            log_hi = np.where(below, log_hi, mid)
            if np.all(log_hi - log_lo < 1e-15):
                break
        x[pos] = np.exp(0.5 * (log_lo + log_hi))
    return float(x[0]) if scalar else x


# -----------------------------------------------------------------------------
# Confluent hypergeometric function of the second kind


def kummer_u(a, b, s, rtol=1e-10):
    r"""Natural log of Kummer's ``U(a, b, s)``.

    Uses the integral representation

    .. math::

        U(a, b, s) = \frac{1}{\Gamma(a)} \int_0^\infty e^{-st} t^{a-1}
                     (1 + t)^{b-a-1} \, dt

    after substituting ``t = exp(w) / s`` so the integrand is a smooth bump in
    ``w`` whose peak is located on a grid and factored out before adaptive
    quadrature.  Valid for ``a > 0``, ``s > 0`` and any real ``b``.

    Returns
    -------
    float
        ``log U(a, b, s)``.
    """
    a, b, s = float(a), float(b), float(s)
    if not a > 0.0:
        raise DomainError("U(a, b, s) integral representation needs a > 0")
    if not s > 0.0:
        raise DomainError("U(a, b, s) requires s > 0")
    if not 1e-13 <= rtol < 1.0:
        raise DomainError("rtol must lie in [1e-13, 1)")
    c = b - a - 1.0
    log_s = math.log(s)

    def log_integrand(w):
        v = np.exp(w)
        return -v + a * w + c * np.log1p(v / s)

    # e^-v kills everything beyond v ~ a + 800; v^a kills w << 0.
    w_hi = math.log(a + 50.0 * math.sqrt(a) + 800.0)
    w_lo = min(-800.0 / a, -1.0) - 5.0
    grid = np.linspace(w_lo, w_hi, 4001)
    vals = log_integrand(grid)
    k = int(np.argmax(vals))
    peak = float(vals[k])
    keep = np.nonzero(vals > peak - 745.0)[0]
    lo = float(grid[max(keep[0] - 1, 0)])
    hi = float(grid[min(keep[-1] + 1, grid.size - 1)])
    w_peak = float(grid[k])

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                lambda w: math.exp(float(log_integrand(w)) - peak),
                lo,
                hi,
                points=[w_peak],
                epsabs=0.0,
                epsrel=rtol,
                limit=500,
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"Kummer U quadrature did not converge: {exc}") from exc
    if not (val > 0.0 and err <= 100.0 * rtol * val):
        raise QuadratureError("Kummer U quadrature did not converge")
    return peak + math.log(val) - a * log_s - sc.gammaln(a)


# -----------------------------------------------------------------------------
# Log-domain arithmetic


def log_sum_exp(values):
    """``log(sum(exp(values)))`` without overflow; ``-inf`` if all are ``-inf``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("log_sum_exp of an empty array")
    m = np.max(v)
    if m == -np.inf:
        return -np.inf
    if m == np.inf:
        return np.inf
    return float(m + np.log(np.sum(np.exp(v - m))))


def log_trapezoid(widths, log_left, log_right):
    """Log of the trapezoid sum ``sum_i w_i (exp(a_i) + exp(b_i)) / 2``.

    Parameters
    ----------
    widths : array_like
        Nonnegative panel widths, in linear scale.
    log_left, log_right : array_like
        Log heights at the left and right end of each panel.
    """
    w = np.asarray(widths, dtype=float)
    left = np.asarray(log_left, dtype=float)
    right = np.asarray(log_right, dtype=float)
    if not (w.shape == left.shape == right.shape):
        raise DomainError(
            f"length mismatch: widths {w.shape}, left {left.shape}, right {right.shape}"
        )
    if w.size == 0:
        raise DomainError("log_trapezoid of empty arrays")
    if np.any(w < 0.0):
        raise DomainError("trapezoid widths must be nonnegative")
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    return log_sum_exp(np.concatenate([log_w + left, log_w + right])) - math.log(2.0)


def log_diff_exp(log_a, log_b):
    """``log(exp(log_a) - exp(log_b))`` for ``log_a >= log_b``."""
    if log_b == -np.inf:
        return log_a
    if log_b > log_a:
        raise DomainError("log_diff_exp needs log_a >= log_b")
    if log_b == log_a:
        return -np.inf
    return log_a + math.log(-math.expm1(log_b - log_a))
