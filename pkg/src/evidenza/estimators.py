"""Evidence estimators.

All estimators take a :class:`~evidenza.models.TargetModel` (or, for the
unit-interval and importance-sampling rules, plain callables) plus a
:class:`~evidenza.rng.SeededStream`, and return a :class:`LogEvidenceEstimate`.
Accumulation happens in log space throughout; ``estimate.z`` converts back
only on request.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, EmptyConstraintError, EvidenzaError, MissingGridError
from .special import log_diff_exp, log_sum_exp, log_trapezoid

__all__ = [
    "SIMPLE",
    "TRAPEZOID",
    "LogEvidenceEstimate",
    "OrderedOrdinates",
    "LorenzTrace",
    "naive_mc",
    "importance_sampling",
    "yakowitz_unit",
    "philippe_riemann",
    "qis",
    "qis_bounds",
    "nested_sampling",
    "vertical_geometric",
]

SIMPLE = "simple"
TRAPEZOID = "trapezoid"
_RULES = (SIMPLE, TRAPEZOID)

# Slack for comparing log-domain sums that are equal in exact arithmetic.
BOUND_RTOL = 1e-12


@dataclass
class LogEvidenceEstimate:
    """One estimator run.

    Attributes
    ----------
    log_z : float
        Natural log of the evidence estimate.
    estimator : str
        Estimator id.
    budget : dict
        Sample counts actually used (``m``, ``n``, ``n_live``, ``iterations`` ...).
    bounds : tuple of float, optional
        ``(log_lower, log_upper)`` sandwich, when the rule provides one.
    seed, stream_id : int, optional
        Identity of the stream the run consumed.
    warning : str, optional
        Set when the run finished abnormally but still produced a value.
    extras : dict
        Estimator-specific diagnostics (grids, weights, traces).
    """

    log_z: float
    estimator: str
    budget: dict = field(default_factory=dict)
    bounds: Optional[tuple] = None
    seed: Optional[int] = None
    stream_id: Optional[int] = None
    warning: Optional[str] = None
    extras: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.bounds is not None:
            lo, hi = self.bounds
            slack = BOUND_RTOL * max(1.0, abs(self.log_z))
            if not (lo <= self.log_z + slack and self.log_z <= hi + slack):
                raise EvidenzaError(
                    f"bounds ({lo}, {hi}) do not bracket log_z={self.log_z}"
                )

    @property
    def z(self):
        return math.exp(self.log_z)

    def to_dict(self):
        """JSON-friendly summary; extras are omitted."""
        out = {
            "estimator": self.estimator,
            "log_Z": self.log_z,
            "Z": self.z,
            "budget": dict(self.budget),
            "seed": self.seed,
            "stream_id": self.stream_id,
        }
        if self.bounds is not None:
            out["bounds"] = {"log_lower": self.bounds[0], "log_upper": self.bounds[1]}
        if self.warning:
            out["warning"] = self.warning
        return out


def _stamp(est, stream):
    est.seed = stream.seed
    est.stream_id = stream.stream_id
    return est


def _check_rule(rule):
    if rule not in _RULES:
        raise DomainError(f"rule must be one of {_RULES}, got {rule!r}")


class OrderedOrdinates:
    """Log-likelihood ordinates sorted in descending order.

    ``lookup(u)`` returns the empirical quantile ``Y[ceil(m u)]`` (1-based), so
    ``lookup(0)`` is the largest ordinate and ``lookup(1)`` the smallest and
    the map is nonincreasing in ``u``.  Equal ordinates keep their draw order.
    """

    def __init__(self, log_y):
        log_y = np.asarray(log_y, dtype=float).ravel()
        if log_y.size == 0:
            raise DomainError("need at least one ordinate")
        order = np.argsort(-log_y, kind="stable")
        self.log_y_desc = log_y[order]

    def __len__(self):
        return self.log_y_desc.size

    @property
    def log_max(self):
        return float(self.log_y_desc[0])

    @property
    def log_min(self):
        return float(self.log_y_desc[-1])

    def lookup(self, u):
        m = self.log_y_desc.size
        idx = np.clip(np.ceil(m * np.asarray(u, dtype=float)).astype(np.int64), 1, m)
        return self.log_y_desc[idx - 1]


# -----------------------------------------------------------------------------
# Plain Monte Carlo


def naive_mc(model, n, stream):
    """Average of ``n`` likelihood values at prior draws."""
    if n < 1:
        raise DomainError("naive_mc needs n >= 1")
    log_l = model.log_likelihood(model.prior_sample(stream, n))
    est = LogEvidenceEstimate(log_sum_exp(log_l) - math.log(n), "naive", {"n": n})
    return _stamp(est, stream)


def importance_sampling(
    log_l: Callable,
    log_f: Callable,
    log_g: Callable,
    proposal_sampler: Callable,
    n: int,
    stream,
    self_normalized: bool = False,
):
    """Importance-sampling estimate of ``int l f``.

    Parameters
    ----------
    log_l, log_f, log_g : callable
        Vectorized log integrand, log target density and log proposal density.
    proposal_sampler : callable
        ``proposal_sampler(stream, n)`` returning ``n`` proposal draws.
    self_normalized : bool
        Return the ratio form ``sum(l w) / sum(w)`` instead of
        ``sum(l w) / n``.  The ratio only needs ``f`` up to a constant.
    """
    if n < 1:
        raise DomainError("importance_sampling needs n >= 1")
    x = proposal_sampler(stream, n)
    log_w = np.asarray(log_f(x), dtype=float) - np.asarray(log_g(x), dtype=float)
    log_w_total = log_sum_exp(log_w)
    if log_w_total == -np.inf:
        raise EvidenzaError("all importance weights are zero")
    numer = log_sum_exp(np.asarray(log_l(x), dtype=float) + log_w)
    if self_normalized:
        log_z, tag = numer - log_w_total, "is-ratio"
    else:
        log_z, tag = numer - math.log(n), "is"
    est = LogEvidenceEstimate(log_z, tag, {"n": n})
    est.extras["log_weights"] = log_w
    return _stamp(est, stream)


# -----------------------------------------------------------------------------
# Riemann-sum rules


def yakowitz_unit(log_l_on_unit, n, stream):
    """Trapezoid rule over ``n`` sorted uniforms plus the endpoints 0 and 1.

    ``log_l_on_unit`` maps a 1-d array of abscissae in [0, 1] to log integrand
    values.  For smooth integrands the mean squared error is ``O(n^-4)``.
    """
    u = np.concatenate(([0.0], stream.sorted_uniforms(n), [1.0]))
    log_vals = np.asarray(log_l_on_unit(u), dtype=float)
    log_z = log_trapezoid(np.diff(u), log_vals[:-1], log_vals[1:])
    return _stamp(LogEvidenceEstimate(log_z, "yakowitz", {"n": n}), stream)


def philippe_riemann(model, n, stream, normalized=False, log_density=None):
    """Riemann sum over sorted prior draws, for one-dimensional models.

    Computes ``sum_i l(x_i) p(x_i) (x_{i+1} - x_i)`` over the ``n`` sorted
    draws.  With ``normalized=True`` the sum is divided by
    ``sum_i p(x_i) (x_{i+1} - x_i)``, which cancels any constant in ``p``.

    Parameters
    ----------
    log_density : callable, optional
        Replaces ``model.log_prior_density``; may be unnormalized when
        ``normalized`` is set.
    """
    if model.dim != 1:
        raise DomainError(f"philippe_riemann needs a 1-d model, got dim={model.dim}")
    if n < 2:
        raise DomainError("philippe_riemann needs n >= 2")
    density = log_density if log_density is not None else model.log_prior_density
    x = np.sort(model.prior_sample(stream, n), axis=0)
    log_p = density(x)
    if log_p is None:
        raise DomainError(f"{model.name} has no evaluable prior density")
    log_p = np.asarray(log_p, dtype=float)
    with np.errstate(divide="ignore"):
        log_dx = np.log(np.diff(x[:, 0]))
    log_mass = log_p[:-1] + log_dx
    log_z = log_sum_exp(model.log_likelihood(x[:-1]) + log_mass)
    tag = "philippe"
    if normalized:
        log_z -= log_sum_exp(log_mass)
        tag = "philippe-normalized"
    return _stamp(LogEvidenceEstimate(log_z, tag, {"n": n}), stream)


# -----------------------------------------------------------------------------
# Quantile importance sampling


def _qis_bounds(u, log_lam, log_z=None):
    """Lower/upper sums bracketing the trapezoid rule on a nonincreasing grid.

    ``u`` is the augmented grid ``0 = u_0 < u_1 < ... < u_n < u_{n+1} = 1``.
    The bracket holds exactly in real arithmetic; when ``log_z`` is given the
    bounds are widened to include it so rounding never breaks it.
    """
    widths = np.diff(u)  # n + 1 panels
    with np.errstate(divide="ignore"):
        log_w = np.log(widths)
    inner = log_lam[1:-1]
    log_lower = log_sum_exp(log_w[:-1] + inner)
    log_upper = log_sum_exp(np.concatenate((log_w[1:] + inner, [log_w[0] + log_lam[0]])))
    if log_z is not None:
        log_lower, log_upper = min(log_lower, log_z), max(log_upper, log_z)
    return log_lower, log_upper


def qis(model, m, n, stream, rule=TRAPEZOID):
    """Quantile importance sampling.

    1. Draw ``m`` prior points and sort their log-likelihoods (descending).
    2. Draw ``n`` sorted uniforms and augment with 0 and 1.
    3. Read the empirical quantile function at every grid point and integrate
       it with the trapezoid (or simple lower-sum) rule.

    The returned estimate carries the sandwich bounds and the grid
    (``extras["u"]``, ``extras["log_lambda"]``) for :func:`qis_bounds`.
    """
    _check_rule(rule)
    if n < 1:
        raise DomainError("qis needs n >= 1")
    if m < n:
        raise DomainError(f"qis needs m >= n, got m={m}, n={n}")
    ordinates = OrderedOrdinates(model.log_likelihood(model.prior_sample(stream, m)))
    u = np.concatenate(([0.0], stream.sorted_uniforms(n), [1.0]))
    log_lam = ordinates.lookup(u)
    if rule == TRAPEZOID:
        log_z = log_trapezoid(np.diff(u), log_lam[:-1], log_lam[1:])
    else:
        log_z = _qis_bounds(u, log_lam)[0]
    bounds = _qis_bounds(u, log_lam, log_z)
    est = LogEvidenceEstimate(
        log_z, "qis" if rule == TRAPEZOID else "qis-simple", {"m": m, "n": n}, bounds=bounds
    )
    est.extras.update(u=u, log_lambda=log_lam)
    return _stamp(est, stream)


def qis_bounds(estimate):
    """Recompute the ``(log_lower, log_upper)`` sandwich from a QIS grid."""
    try:
        u, log_lam = estimate.extras["u"], estimate.extras["log_lambda"]
    except KeyError:
        raise MissingGridError(f"estimate {estimate.estimator!r} carries no QIS grid") from None
    return _qis_bounds(u, log_lam, estimate.log_z)


# -----------------------------------------------------------------------------
# Nested sampling


def nested_sampling(model, n_live, stream, epsilon=1e-4, max_iter=100_000, rule=SIMPLE):
    """Nested sampling with deterministic compression ``t = exp(-1/n_live)``.

    Each iteration removes the lowest-likelihood live point (ties: the older
    draw goes first), replaces it by a constrained prior draw, and credits
    the shell ``X_{i-1} - X_i`` with ``X_i = exp(-i/n_live)``.  Iteration stops
    once ``max(L_live) * X_i <= epsilon * Z``; the live points then contribute
    ``mean(L_live) * X_I``.

    With ``rule="trapezoid"`` each shell is weighted by the mean of its two
    bounding likelihoods; the outermost shell uses the first dead point on
    both sides.

    The estimate's extras hold the dead-point log-likelihoods, the volume
    sequence ``log_volumes`` (``X_0 .. X_I``) and the posterior importance
    weights ``log_weights`` of the dead points.  ``warning`` is set to
    ``"max_iter"`` if the stopping rule never fired.
    """
    _check_rule(rule)
    if n_live < 2:
        raise DomainError("nested_sampling needs n_live >= 2")
    if not epsilon > 0.0:
        raise DomainError("epsilon must be positive")
    log_eps = math.log(epsilon)

    live = model.prior_sample(stream, n_live)
    live_ll = np.array(model.log_likelihood(live), dtype=float)
    birth = np.arange(n_live)
    next_birth = n_live

    dead_ll = []
    log_terms = []
    log_z = -np.inf
    log_x_prev = 0.0
    warning = "max_iter"
    i = 0
    while i < max_iter:
        i += 1
        worst = int(np.lexsort((birth, live_ll))[0])
        ll_star = float(live_ll[worst])
        dead_ll.append(ll_star)

        live[worst] = model.constrained_prior_sample(stream, ll_star)
        live_ll[worst] = model.log_likelihood(live[worst][None, :])[0]
        birth[worst] = next_birth
        next_birth += 1

        log_x = -i / n_live
        log_dx = log_diff_exp(log_x_prev, log_x)
        if rule == SIMPLE:
            term = ll_star + log_dx
        else:
            ll_prev = dead_ll[-2] if len(dead_ll) > 1 else ll_star
            term = log_dx + np.logaddexp(ll_prev, ll_star) - math.log(2.0)
        log_terms.append(term)
        log_z = np.logaddexp(log_z, term)
        log_x_prev = log_x

        if live_ll.max() + log_x <= log_eps + log_z:
            warning = None
            break

    log_remainder = log_sum_exp(live_ll) - math.log(n_live) + log_x_prev
    log_z = float(np.logaddexp(log_z, log_remainder))

    est = LogEvidenceEstimate(
        log_z,
        "nested-rect" if rule == SIMPLE else "nested-trapezoid",
        {"n_live": n_live, "iterations": i, "epsilon": epsilon},
        warning=warning,
    )
    est.extras.update(
        dead_log_likelihood=np.array(dead_ll),
        log_volumes=-np.arange(i + 1) / n_live,
        log_weights=np.array(log_terms) - log_z,
        live_log_likelihood=live_ll.copy(),
        log_remainder=log_remainder,
    )
    return _stamp(est, stream)


# -----------------------------------------------------------------------------
# Vertical likelihood on a geometric ladder


@dataclass
class LorenzTrace:
    """Simulated points ``(q^k, L_k)`` on the likelihood Lorenz curve."""

    levels: np.ndarray
    s: np.ndarray
    log_l: np.ndarray


def vertical_geometric(model, q, n_levels, m_per_level, stream):
    """Likelihood ladder with ``Z(L_k) ~= q^k`` and the two estimates built on it.

    Starting from ``L_0 = 0``, level ``k+1`` is the empirical ``(1-q)``-quantile
    of ``m_per_level`` constrained prior draws above ``L_k``.  If ties would
    put the quantile on ``L_k`` itself, the smallest draw strictly above
    ``L_k`` is used; a plateau with no such draw repeats the level.  Once the
    ladder reaches the likelihood maximum in floating point the remaining
    levels repeat it and ``extras["saturated_at"]`` records where.

    Returns
    -------
    simple : LogEvidenceEstimate
        ``sum_k q^k (L_k - L_{k-1})``.
    asymptotic : LogEvidenceEstimate
        ``(1 - q) sum_k q^k L_k`` truncated at ``n_levels``; extras hold the
        truncation tail ``q^(N+1) L_N`` as ``log_tail``.
    trace : LorenzTrace
    """
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie in (0, 1)")
    if n_levels < 1:
        raise DomainError("need at least one level")
    if m_per_level < 2:
        raise DomainError("m_per_level must be >= 2")
    j = max(int(math.ceil((1.0 - q) * m_per_level)), 1)  # 1-based order statistic
    log_q = math.log(q)

    log_levels = [-np.inf]
    saturated_at = None
    for level in range(n_levels):
        floor = log_levels[-1]
        if saturated_at is not None:
            log_levels.append(floor)
            continue
        try:
            draws = model.constrained_prior_sample(stream, floor, size=m_per_level)
        except EmptyConstraintError:
            saturated_at = level
            log_levels.append(floor)
            continue
        ll = np.sort(model.log_likelihood(draws))
        nxt = float(ll[j - 1])
        if not nxt > floor:
            above = ll[ll > floor]
            nxt = float(above[0]) if above.size else floor
        log_levels.append(nxt)
    log_levels = np.array(log_levels)

    k = np.arange(1, n_levels + 1)
    log_steps = np.array(
        [log_diff_exp(log_levels[i], log_levels[i - 1]) for i in range(1, n_levels + 1)]
    )
    log_simple = log_sum_exp(k * log_q + log_steps)
    log_asym = math.log1p(-q) + log_sum_exp(k * log_q + log_levels[1:])
    budget = {"q": q, "levels": n_levels, "m_per_level": m_per_level}

    simple = _stamp(LogEvidenceEstimate(log_simple, "vertical", dict(budget)), stream)
    asym = _stamp(LogEvidenceEstimate(log_asym, "vertical-asymptotic", dict(budget)), stream)
    asym.extras["log_tail"] = (n_levels + 1) * log_q + log_levels[-1]
    trace = LorenzTrace(levels=np.arange(n_levels + 1), s=q ** np.arange(n_levels + 1), log_l=log_levels)
    for est in (simple, asym):
        est.extras["trace"] = trace
        est.extras["saturated_at"] = saturated_at
    return simple, asym, trace
