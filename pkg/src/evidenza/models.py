"""Target models: a prior, a log-likelihood, and an exact constrained sampler.

Points are always 2-d arrays of shape ``(k, dim)``; likelihoods are always
returned as logs.  The constrained sampler draws from the prior restricted
to ``{x : log L(x) > log_y}`` by inverting the likelihood contour exactly, so
estimator error is never confounded with sampler error.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import special
from .errors import DomainError, EmptyConstraintError

__all__ = [
    "ModelTruth",
    "TargetModel",
    "BetaIntegrandModel",
    "ExpRatioModel",
    "GaussGaussModel",
    "MvtGaussModel",
    "ConstantModel",
    "beta_integrand_model",
    "exp_ratio_model",
    "gauss_gauss_model",
    "mvt_gauss_model",
    "constant_model",
    "MODELS",
    "get_model",
]

_LOG_2PI = math.log(2.0 * math.pi)
# Redraws allowed when a sample lands exactly on the contour through rounding.
_MAX_REDRAWS = 100


@dataclass(frozen=True)
class ModelTruth:
    log_z: float
    provenance: str  # "analytic" or "paper-quoted"


class TargetModel:
    """Interface consumed by every estimator.

    Subclasses set ``dim`` and ``name`` and implement :meth:`prior_sample`,
    :meth:`log_likelihood` and :meth:`_constrained`.  Optional capabilities
    (:meth:`log_prior_density`, :meth:`survival`, :attr:`truth`) default to
    "not available".
    """

    name = "model"
    dim = 1
    #: True when the prior is Uniform(0, 1) in one dimension.
    unit_uniform_prior = False

    @property
    def truth(self):
        """:class:`ModelTruth` or None."""
        return None

    @property
    def analytic_log_evidence(self):
        t = self.truth
        return None if t is None else t.log_z

    @property
    def log_likelihood_max(self):
        """Supremum of the log-likelihood, if known."""
        return None

    def prior_sample(self, stream, size):
        raise NotImplementedError

    def log_likelihood(self, x):
        raise NotImplementedError

    def log_prior_density(self, x):
        """Log prior density at ``x`` (1-d models only); None if unavailable."""
        return None

    def survival(self, log_y):
        """Prior mass of ``{x : L(x) > exp(log_y)}``, or None if unknown."""
        return None

    def log_survival(self, log_y):
        z = self.survival(log_y)
        if z is None:
            return None
        with np.errstate(divide="ignore"):
            return np.log(z)

    def constrained_prior_sample(self, stream, log_y, size=None):
        """Prior draws subject to ``log_likelihood(x) > log_y``.

        Draws that land on the contour through rounding are redrawn, so the
        strict inequality holds for every returned point.

        Returns
        -------
        numpy.ndarray
            ``(dim,)`` when ``size`` is None, otherwise ``(size, dim)``.
        """
        if log_y == -np.inf:
            x = self.prior_sample(stream, 1 if size is None else size)
            return x[0] if size is None else x
        k = 1 if size is None else int(size)
        x = self._constrained(stream, log_y, k)
        for _ in range(_MAX_REDRAWS):
            bad = np.nonzero(~(self.log_likelihood(x) > log_y))[0]
            if bad.size == 0:
                break
            x[bad] = self._constrained(stream, log_y, bad.size)
        else:  # pragma: no cover - would need ~1e-1600 luck
            raise EmptyConstraintError("constrained sampler kept hitting the contour")
        return x[0] if size is None else x

    def _constrained(self, stream, log_y, k):
        raise NotImplementedError

    def _check_below_max(self, log_y):
        top = self.log_likelihood_max
        if top is not None and not log_y < top:
            raise EmptyConstraintError(
                f"{self.name}: log_y={log_y} is not below the likelihood maximum {top}"
            )


# -----------------------------------------------------------------------------
# Built-in models


class BetaIntegrandModel(TargetModel):
    """Uniform prior on [0, 1] with ``L(u) = u^2 (1-u)^2``; ``Z = B(3, 3) = 1/30``."""

    name = "beta33"
    dim = 1
    unit_uniform_prior = True

    @property
    def truth(self):
        return ModelTruth(-math.log(30.0), "analytic")

    @property
    def log_likelihood_max(self):
        return math.log(1.0 / 16.0)

    def prior_sample(self, stream, size):
        return stream.uniform01((int(size), 1))

    def log_likelihood(self, x):
        u = np.asarray(x, dtype=float)[..., 0]
        with np.errstate(divide="ignore"):
            return 2.0 * np.log(u) + 2.0 * np.log1p(-u)

    def log_prior_density(self, x):
        u = np.asarray(x, dtype=float)[..., 0]
        return np.where((u >= 0.0) & (u <= 1.0), 0.0, -np.inf)

    def _constrained(self, stream, log_y, k):
        self._check_below_max(log_y)
        # u(1-u) > sqrt(y)  <=>  u strictly between the two roots
        half_width = 0.5 * math.sqrt(1.0 - 4.0 * math.exp(0.5 * log_y))
        lo, hi = 0.5 - half_width, 0.5 + half_width
        return (lo + (hi - lo) * stream.uniform01(k))[:, None]


class ExpRatioModel(TargetModel):
    """Exp(1) prior with ``L(x) = 1/(1+x)``; ``Z = e E1(1)``."""

    name = "expratio"
    dim = 1

    @property
    def truth(self):
        return ModelTruth(1.0 + math.log(special.exp_integral_e1(1.0)), "analytic")

    @property
    def log_likelihood_max(self):
        return 0.0

    def prior_sample(self, stream, size):
        return stream.exponential1((int(size), 1))

    def log_likelihood(self, x):
        return -np.log1p(np.asarray(x, dtype=float)[..., 0])

    def log_prior_density(self, x):
        v = np.asarray(x, dtype=float)[..., 0]
        return np.where(v >= 0.0, -v, -np.inf)

    def survival(self, log_y):
        # P(1/(1+X) > y) = P(X < 1/y - 1)
        if log_y >= 0.0:
            return 0.0
        if log_y == -np.inf:
            return 1.0
        return -math.expm1(-math.expm1(-log_y))

    def _constrained(self, stream, log_y, k):
        self._check_below_max(log_y)
        upper = math.expm1(-log_y)  # 1/y - 1
        mass = -math.expm1(-upper)
        u = stream.uniform01(k)
        return np.minimum(-np.log1p(-u * mass), upper)[:, None]


class GaussGaussModel(TargetModel):
    """Likelihood ``phi(x | mu1, sigma1)``, prior ``N(mu2, sigma2)``.

    The constraint ``L(x) > y`` is the interval ``mu1 +/- sigma1 * zeta`` with
    ``zeta = sqrt(-2 log(y sqrt(2 pi) sigma1))``; constrained draws are
    truncated normals on that interval.
    """

    name = "gaussgauss"
    dim = 1

    def __init__(self, mu1=2.0, sigma1=1.0, mu2=0.0, sigma2=1.0):
        if not (sigma1 > 0.0 and sigma2 > 0.0):
            raise DomainError("sigmas must be positive")
        self.mu1, self.sigma1 = float(mu1), float(sigma1)
        self.mu2, self.sigma2 = float(mu2), float(sigma2)

    def __repr__(self):
        return f"GaussGaussModel({self.mu1}, {self.sigma1}, {self.mu2}, {self.sigma2})"

    @property
    def truth(self):
        scale = math.hypot(self.sigma1, self.sigma2)
        r = (self.mu1 - self.mu2) / scale
        return ModelTruth(-0.5 * r * r - math.log(scale) - 0.5 * _LOG_2PI, "analytic")

    @property
    def log_likelihood_max(self):
        return -math.log(self.sigma1) - 0.5 * _LOG_2PI

    def prior_sample(self, stream, size):
        return self.mu2 + self.sigma2 * stream.std_normal((int(size), 1))

    def log_likelihood(self, x):
        r = (np.asarray(x, dtype=float)[..., 0] - self.mu1) / self.sigma1
        return -0.5 * r * r + self.log_likelihood_max

    def log_prior_density(self, x):
        r = (np.asarray(x, dtype=float)[..., 0] - self.mu2) / self.sigma2
        return -0.5 * r * r - math.log(self.sigma2) - 0.5 * _LOG_2PI

    def contour(self, log_y):
        """Endpoints of the interval where ``log L > log_y``."""
        self._check_below_max(log_y)
        zeta = math.sqrt(2.0 * (self.log_likelihood_max - log_y))
        return self.mu1 - self.sigma1 * zeta, self.mu1 + self.sigma1 * zeta

    def survival(self, log_y):
        if log_y == -np.inf:
            return 1.0
        if log_y >= self.log_likelihood_max:
            return 0.0
        lo, hi = self.contour(log_y)
        a = (lo - self.mu2) / self.sigma2
        b = (hi - self.mu2) / self.sigma2
        if a > 0.0:
            return float(special.std_normal_sf(a) - special.std_normal_sf(b))
        return float(special.std_normal_cdf(b) - special.std_normal_cdf(a))

    def _constrained(self, stream, log_y, k):
        lo, hi = self.contour(log_y)
        return stream.truncated_normal(self.mu2, self.sigma2, lo, hi, size=k)[:, None]


class MvtGaussModel(TargetModel):
    """Multivariate-t kernel likelihood with an isotropic Gaussian prior.

    ``L(x) = (1 + x.x / nu)^(-(nu + d)/2)`` and ``x ~ N(0, I / tau)``.  The
    evidence is ``s^a U(a, b, s)`` with ``a = (nu + d)/2``, ``b = nu/2 + 1``
    and ``s = nu tau / 2``.
    """

    name = "mvt"

    def __init__(self, d=50, nu=2.0, tau=1.0):
        if int(d) < 1 or not nu > 0.0 or not tau > 0.0:
            raise DomainError("mvt model needs d >= 1, nu > 0, tau > 0")
        self.dim = int(d)
        self.nu = float(nu)
        self.tau = float(tau)
        self._truth = None

    def __repr__(self):
        return f"MvtGaussModel(d={self.dim}, nu={self.nu}, tau={self.tau})"

    @property
    def kummer_parameters(self):
        return 0.5 * (self.nu + self.dim), 0.5 * self.nu + 1.0, 0.5 * self.nu * self.tau

    @property
    def truth(self):
        if self._truth is None:
            a, b, s = self.kummer_parameters
            self._truth = ModelTruth(a * math.log(s) + special.kummer_u(a, b, s), "analytic")
        return self._truth

    @property
    def log_likelihood_max(self):
        return 0.0

    def prior_sample(self, stream, size):
        return stream.std_normal((int(size), self.dim)) / math.sqrt(self.tau)

    def log_likelihood(self, x):
        r2 = np.sum(np.square(np.asarray(x, dtype=float)), axis=-1)
        return -0.5 * (self.nu + self.dim) * np.log1p(r2 / self.nu)

    def radius2(self, log_y):
        """Squared radius of the ball ``{x : log L(x) > log_y}``."""
        self._check_below_max(log_y)
        return self.nu * math.expm1(-2.0 * log_y / (self.nu + self.dim))

    def survival(self, log_y):
        if log_y == -np.inf:
            return 1.0
        if log_y >= 0.0:
            return 0.0
        return float(special.reg_lower_gamma(0.5 * self.dim, 0.5 * self.tau * self.radius2(log_y)))

    def _constrained(self, stream, log_y, k):
        return stream.gaussian_in_ball(self.dim, self.tau, self.radius2(log_y), size=k)


class ConstantModel(TargetModel):
    """Flat likelihood ``L = c`` under a uniform prior on ``[0, 1]^dim``.

    A degenerate fixture: every estimator must return ``c`` (or a known
    multiple of it) exactly.  The whole prior is one likelihood plateau, so
    the constrained sampler treats ``log_y == log c`` as a tie and resolves it
    by draw order: fresh draws rank above the point they replace and the
    sampler returns plain prior draws.  Levels strictly above ``c`` are empty.
    """

    name = "constant"
    unit_uniform_prior = True

    def __init__(self, c=0.5, dim=1):
        if not c > 0.0:
            raise DomainError("constant likelihood must be positive")
        self.c = float(c)
        self.dim = int(dim)
        self.unit_uniform_prior = self.dim == 1

    def __repr__(self):
        return f"ConstantModel(c={self.c}, dim={self.dim})"

    @property
    def truth(self):
        return ModelTruth(math.log(self.c), "analytic")

    def prior_sample(self, stream, size):
        return stream.uniform01((int(size), self.dim))

    def log_likelihood(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], math.log(self.c))

    def log_prior_density(self, x):
        return np.zeros(np.asarray(x).shape[:-1])

    def survival(self, log_y):
        return 1.0 if log_y < math.log(self.c) else 0.0

    def constrained_prior_sample(self, stream, log_y, size=None):
        if log_y > math.log(self.c):
            raise EmptyConstraintError(f"constant likelihood {self.c} never exceeds exp({log_y})")
        x = self.prior_sample(stream, 1 if size is None else size)
        return x[0] if size is None else x


# -----------------------------------------------------------------------------
# Factories and registry


def beta_integrand_model():
    return BetaIntegrandModel()


def exp_ratio_model():
    return ExpRatioModel()


def gauss_gauss_model(mu1=2.0, sigma1=1.0, mu2=0.0, sigma2=1.0):
    return GaussGaussModel(mu1, sigma1, mu2, sigma2)


def mvt_gauss_model(d=50, nu=2.0, tau=1.0):
    return MvtGaussModel(d, nu, tau)


def constant_model(c=0.5, dim=1):
    return ConstantModel(c, dim)


MODELS = {
    "beta33": beta_integrand_model,
    "expratio": exp_ratio_model,
    "gaussgauss": gauss_gauss_model,
    "mvt": mvt_gauss_model,
    "constant": constant_model,
}


def get_model(model_id, **params):
    """Instantiate a registered model by id."""
    try:
        factory = MODELS[model_id]
    except KeyError:
        raise DomainError(
            f"unknown model id {model_id!r}; choose from {sorted(MODELS)}"
        ) from None
    return factory(**params)
