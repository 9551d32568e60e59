import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from evidenza.errors import DomainError, EmptyConstraintError
from evidenza.models import (
    MODELS,
    ConstantModel,
    beta_integrand_model,
    exp_ratio_model,
    gauss_gauss_model,
    get_model,
    mvt_gauss_model,
)
from evidenza.rng import SeededStream

BUILTINS = ["beta33", "expratio", "gaussgauss", "mvt"]


# -- interface shape --------------------------------------------------------


@pytest.mark.parametrize("model_id", BUILTINS)
def test_prior_sample_shape_and_truth(model_id):
    model = get_model(model_id)
    x = model.prior_sample(SeededStream(0), 7)
    assert x.shape == (7, model.dim)
    ll = model.log_likelihood(x)
    assert ll.shape == (7,)
    assert model.truth.provenance == "analytic"
    assert math.isfinite(model.analytic_log_evidence)


def test_registry_unknown_id():
    with pytest.raises(DomainError):
        get_model("nope")


def test_registry_contains_builtins():
    assert set(BUILTINS) <= set(MODELS)


# -- beta33 -------------------------------------------------------------------


def test_beta33_likelihood_values():
    m = beta_integrand_model()
    np.testing.assert_array_equal(np.exp(m.log_likelihood(np.array([[0.0], [1.0]]))), [0.0, 0.0])
    assert math.exp(m.log_likelihood(np.array([[0.5]]))[0]) == pytest.approx(1 / 16, rel=1e-15)


def test_beta33_truth():
    oracle, _ = integrate.quad(lambda u: u**2 * (1 - u) ** 2, 0, 1)
    assert math.exp(beta_integrand_model().analytic_log_evidence) == pytest.approx(oracle, rel=1e-12)
    assert math.exp(beta_integrand_model().analytic_log_evidence) == pytest.approx(
        math.gamma(3) ** 2 / math.gamma(6), rel=1e-14
    )


def test_beta33_has_no_survival():
    assert beta_integrand_model().log_survival(-3.0) is None


def test_beta33_constrained():
    m = beta_integrand_model()
    y = 0.03
    x = m.constrained_prior_sample(SeededStream(1), math.log(y), size=5000)
    assert np.all(x[:, 0] ** 2 * (1 - x[:, 0]) ** 2 > y)
    with pytest.raises(EmptyConstraintError):
        m.constrained_prior_sample(SeededStream(1), math.log(1 / 16))


# -- exp ratio ----------------------------------------------------------------


def test_expratio_truth():
    oracle, _ = integrate.quad(lambda x: math.exp(-x) / (1 + x), 0, np.inf, epsabs=0, epsrel=1e-13)
    assert math.exp(exp_ratio_model().analytic_log_evidence) == pytest.approx(oracle, rel=1e-10)
    assert abs(math.exp(exp_ratio_model().analytic_log_evidence) - 0.5963474) < 1e-6


def test_expratio_survival_boundaries():
    m = exp_ratio_model()
    assert m.survival(0.0) == 0.0
    assert m.log_survival(0.0) == -np.inf
    assert m.survival(-np.inf) == 1.0
    assert m.survival(math.log(1e-12)) == pytest.approx(1.0, abs=1e-12)


def test_expratio_survival_closed_form():
    m = exp_ratio_model()
    for y in [0.1, 0.3, 0.7, 0.99]:
        assert m.survival(math.log(y)) == pytest.approx(1 - math.exp(-(1 / y - 1)), rel=1e-13)


def test_expratio_constrained_support_and_law():
    m = exp_ratio_model()
    y = 0.4
    x = m.constrained_prior_sample(SeededStream(2), math.log(y), size=10_000)[:, 0]
    upper = 1 / y - 1
    assert np.all((x >= 0) & (x < upper))
    ref = stats.truncexpon(b=upper)
    assert stats.kstest(x, ref.cdf).pvalue > 1e-3


# -- Gaussian likelihood, Gaussian prior ---------------------------------------


def test_gaussgauss_truth():
    m = gauss_gauss_model(2, 1, 0, 1)
    assert math.exp(m.analytic_log_evidence) == pytest.approx(1 / (2 * math.e * math.sqrt(math.pi)), rel=1e-14)
    assert abs(math.exp(m.analytic_log_evidence) / 0.1037769 - 1) < 1e-6


@pytest.mark.parametrize("params", [(2, 1, 0, 1), (-1, 0.5, 1, 2), (0, 3, 0, 0.2)])
def test_gaussgauss_truth_against_quadrature(params):
    mu1, s1, mu2, s2 = params
    m = gauss_gauss_model(*params)
    oracle, _ = integrate.quad(
        lambda x: stats.norm.pdf(x, mu1, s1) * stats.norm.pdf(x, mu2, s2), -np.inf, np.inf, epsrel=1e-12
    )
    assert math.exp(m.analytic_log_evidence) == pytest.approx(oracle, rel=1e-9)


def test_gaussgauss_survival_boundaries():
    m = gauss_gauss_model()
    assert m.survival(m.log_likelihood_max) == 0.0
    assert m.survival(-np.inf) == 1.0
    assert m.survival(-1e4) == pytest.approx(1.0, abs=1e-15)


def test_gaussgauss_survival_monte_carlo():
    m = gauss_gauss_model()
    y = 0.2
    x = m.prior_sample(SeededStream(3), 1_000_000)
    frac = np.mean(m.log_likelihood(x) > math.log(y))
    p = m.survival(math.log(y))
    assert abs(frac - p) < 3 * math.sqrt(p * (1 - p) / x.shape[0])


def test_gaussgauss_empty_constraint():
    m = gauss_gauss_model()
    with pytest.raises(EmptyConstraintError):
        m.constrained_prior_sample(SeededStream(0), m.log_likelihood_max + 1e-3)


def test_gaussgauss_constrained_matches_truncnorm():
    m = gauss_gauss_model()
    lo, hi = m.contour(math.log(0.3))
    x = m.constrained_prior_sample(SeededStream(4), math.log(0.3), size=10_000)[:, 0]
    assert stats.kstest(x, stats.truncnorm(lo, hi).cdf).pvalue > 1e-3


# -- multivariate-t / Gaussian -------------------------------------------------


def test_mvt_truth_d50():
    m = mvt_gauss_model(50, 2, 1)
    assert m.kummer_parameters == (26.0, 2.0, 1.0)
    assert abs(m.analytic_log_evidence - math.log(1.95e-29)) < 0.02 * abs(math.log(1.95e-29))
    want = float(mpmath.log(mpmath.hyperu(26, 2, 1)))
    assert m.analytic_log_evidence == pytest.approx(want, rel=1e-9)


def test_mvt_likelihood_at_origin():
    m = mvt_gauss_model()
    assert m.log_likelihood(np.zeros((1, 50)))[0] == 0.0


@pytest.mark.parametrize("nu,tau", [(2.0, 1.0), (5.0, 0.5), (1.0, 3.0)])
def test_mvt_truth_d1_against_quadrature(nu, tau):
    m = mvt_gauss_model(1, nu, tau)
    f = lambda x: (1 + x * x / nu) ** (-(nu + 1) / 2) * stats.norm.pdf(x, scale=1 / math.sqrt(tau))
    oracle, _ = integrate.quad(f, -np.inf, np.inf, epsabs=0, epsrel=1e-12)
    assert math.exp(m.analytic_log_evidence) == pytest.approx(oracle, rel=1e-6)


def test_mvt_survival_against_monte_carlo():
    m = mvt_gauss_model(5, 2, 1)
    log_y = -3.0
    x = m.prior_sample(SeededStream(5), 200_000)
    frac = np.mean(m.log_likelihood(x) > log_y)
    p = m.survival(log_y)
    assert abs(frac - p) < 3 * math.sqrt(p * (1 - p) / 200_000)


def test_mvt_empty_constraint():
    with pytest.raises(EmptyConstraintError):
        mvt_gauss_model().constrained_prior_sample(SeededStream(0), 0.1)


def test_mvt_constrained_satisfies_constraint():
    m = mvt_gauss_model()
    for log_y in [-200.0, -60.0, -10.0, -1e-3]:
        x = m.constrained_prior_sample(SeededStream(6), log_y, size=2000)
        assert np.all(m.log_likelihood(x) > log_y)


# -- shared invariants ----------------------------------------------------------


def _level_range(model):
    top = model.log_likelihood_max
    return -30.0, top - 1e-6


@pytest.mark.parametrize("model_id", BUILTINS)
@settings(max_examples=25, deadline=None)
@given(frac=st.floats(0.0, 1.0), seed=st.integers(0, 2**32))
def test_constrained_draws_exceed_level(model_id, frac, seed):
    model = get_model(model_id)
    lo, hi = _level_range(model)
    log_y = lo + frac * (hi - lo)
    x = model.constrained_prior_sample(SeededStream(seed), log_y, size=50)
    assert np.all(model.log_likelihood(x) > log_y)


@pytest.mark.parametrize("model_id", BUILTINS)
def test_constraint_nesting(model_id):
    model = get_model(model_id)
    lo, hi = _level_range(model)
    y1, y2 = lo + 0.4 * (hi - lo), lo + 0.8 * (hi - lo)
    x = model.constrained_prior_sample(SeededStream(7), y2, size=2000)
    assert np.all(model.log_likelihood(x) > y1)


@pytest.mark.parametrize("model_id", ["expratio", "gaussgauss", "mvt"])
def test_survival_nonincreasing(model_id):
    model = get_model(model_id)
    lo, hi = _level_range(model)
    ys = np.linspace(lo, hi, 400)
    z = np.array([model.survival(y) for y in ys])
    assert np.all(np.diff(z) <= 0)
    assert model.log_survival(-np.inf) == 0.0


@pytest.mark.parametrize("model_id", ["expratio", "gaussgauss"])
def test_evidence_is_integral_of_survival(model_id):
    model = get_model(model_id)
    top = math.exp(model.log_likelihood_max)
    oracle, _ = integrate.quad(lambda y: model.survival(math.log(y)) if y > 0 else 1.0, 0, top, limit=200)
    assert oracle == pytest.approx(math.exp(model.analytic_log_evidence), rel=1e-4)


def test_lorenz_identity_gaussgauss():
    model = gauss_gauss_model()
    x = model.prior_sample(SeededStream(8), 100_000)
    z = np.array([model.survival(v) for v in model.log_likelihood(x)])
    assert stats.kstest(z, "uniform").statistic < 0.006


# -- constant fixture ---------------------------------------------------------


def test_constant_model_plateau():
    m = ConstantModel(0.5)
    x = m.constrained_prior_sample(SeededStream(0), math.log(0.5), size=3)
    assert x.shape == (3, 1)
    with pytest.raises(EmptyConstraintError):
        m.constrained_prior_sample(SeededStream(0), math.log(0.6))
    assert m.analytic_log_evidence == math.log(0.5)
