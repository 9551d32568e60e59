"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v``; the verdict lines are repeated in
the "acceptance criteria" section of the terminal summary.
"""

import itertools
import math

import numpy as np
import pytest
from scipy import stats

from evidenza import bench, cli
from evidenza import estimators as est
from evidenza.config import ExperimentConfig
from evidenza.models import ConstantModel, get_model
from evidenza.rng import SeededStream

GG_TRUTH = 0.1037769


def _within(x, lo, hi):
    return lo <= x <= hi


# 1 ----------------------------------------------------------------------------


def test_01_gaussgauss_truth(verdict):
    log_z = get_model("gaussgauss").analytic_log_evidence
    rel = abs(log_z - math.log(GG_TRUTH)) / abs(math.log(GG_TRUTH))
    ok = verdict("1 gaussgauss truth", rel <= 1e-6, f"log Z={log_z:.9f}, rel err vs log(0.1037769)={rel:.2e} (tol 1e-6)")
    assert ok


# 2 ----------------------------------------------------------------------------


TABLE1_ESTIMATORS = ("qis", "naive", "nested-rect", "nested-trapezoid")
TABLE1_RANGES = {"qis": (0.0018, 0.0071), "naive": (0.006, 0.023), "nested-rect": (0.0045, 0.018)}


@pytest.fixture(scope="module")
def table1_runs():
    base = ExperimentConfig(model_id="gaussgauss", m=1000, n=20, n_live=20, replicates=100)
    return {
        seed: {e: bench.replicate(base.with_(estimator_id=e, seed=seed)) for e in TABLE1_ESTIMATORS}
        for seed in range(10)
    }


@pytest.mark.parametrize("estimator", sorted(TABLE1_RANGES))
def test_02_table1_rmse_ranges(verdict, table1_runs, estimator):
    rmse = np.array([runs[estimator].rmse for runs in table1_runs.values()])
    med = float(np.median(rmse))
    lo, hi = TABLE1_RANGES[estimator]
    ok = verdict(
        f"2 table-1 {estimator} RMSE",
        _within(med, lo, hi),
        f"median over 10 seeds {med:.5f} (seed range {rmse.min():.5f}..{rmse.max():.5f}), required [{lo}, {hi}]",
    )
    assert ok


def test_02_table1_qis_ordering(verdict, table1_runs):
    wins = sum(bench.ordering_check(runs.values()) for runs in table1_runs.values())
    ok = verdict("2 table-1 QIS smallest RMSE and MAPE", wins >= 9, f"{wins}/10 master seeds (need >= 9)")
    assert ok


# 3 ----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def table2_runs():
    base = ExperimentConfig(model_id="mvt", m=10_000, n=20, replicates=100)
    return {e: bench.replicate(base.with_(estimator_id=e)) for e in ("qis", "naive")}


def test_03_mvt_truth(verdict):
    log_z = get_model("mvt").analytic_log_evidence
    rel = abs(log_z - math.log(1.95e-29)) / abs(math.log(1.95e-29))
    ok = verdict("3 mvt truth", rel <= 0.02, f"Z={math.exp(log_z):.5e}, log rel err vs log(1.95e-29)={rel:.2e} (tol 0.02)")
    assert ok


def test_03_mvt_qis_mean_order(verdict, table2_runs):
    truth = math.exp(get_model("mvt").analytic_log_evidence)
    mean = table2_runs["qis"].mean_z
    decades = abs(math.log10(mean / truth))
    ok = verdict("3 mvt QIS mean within one order", decades <= 1.0, f"mean {mean:.3e} vs Z {truth:.3e}: {decades:.2f} decades")
    assert ok


def test_03_mvt_naive_too_small(verdict, table2_runs):
    truth = math.exp(get_model("mvt").analytic_log_evidence)
    mean = table2_runs["naive"].mean_z
    ok = verdict("3 mvt naive mean >= 10x too small", mean * 10 <= truth, f"mean {mean:.3e} vs Z {truth:.3e}")
    assert ok


def test_03_mvt_qis_beats_naive_mape(verdict, table2_runs):
    q, n = table2_runs["qis"].mape, table2_runs["naive"].mape
    ok = verdict("3 mvt QIS MAPE < naive MAPE", q < n, f"QIS {q:.4f} vs naive {n:.4f}")
    assert ok


# 4 ----------------------------------------------------------------------------


@pytest.mark.parametrize("estimator,target,tol", [("yakowitz", -2.0, 0.3), ("naive", -0.5, 0.15)])
def test_04_rate_slopes(verdict, estimator, target, tol):
    cfg = ExperimentConfig(model_id="beta33", estimator_id=estimator, replicates=500, seed=0)
    fit = bench.slope_fit(cfg, [16, 32, 64, 128, 256])
    ok = verdict(
        f"4 {estimator} RMSE slope",
        fit.slope is not None and abs(fit.slope - target) <= tol,
        f"slope {fit.slope:.3f} +/- {fit.stderr:.3f}, required {target} +/- {tol}",
    )
    assert ok


# 5 ----------------------------------------------------------------------------


def test_05_yakowitz_beta33(verdict):
    m = get_model("beta33")
    ll = lambda u: m.log_likelihood(u[:, None])
    z = np.array([math.exp(est.yakowitz_unit(ll, 1000, SeededStream(0, j)).log_z) for j in range(100)])
    hits = int(np.sum(np.abs(z - 1 / 30) < 1e-5))
    ok = verdict("5 yakowitz beta33 n=1000", hits >= 95, f"{hits}/100 within 1e-5 of 1/30 (need 95)")
    assert ok


def test_05_philippe_expratio(verdict):
    m = get_model("expratio")
    z = np.array([math.exp(est.philippe_riemann(m, 10_000, SeededStream(0, j)).log_z) for j in range(100)])
    hits = int(np.sum(np.abs(z - 0.5963474) < 1e-3))
    ok = verdict("5 philippe expratio n=1e4", hits >= 95, f"{hits}/100 within 1e-3 of 0.5963474 (need 95)")
    assert ok


# 6 ----------------------------------------------------------------------------


def test_06_sandwich(verdict):
    rng = np.random.default_rng(0)
    models = ["beta33", "expratio", "gaussgauss", "mvt"]
    violations = 0
    for j in range(1000):
        model = get_model(models[j % 4])
        n = int(rng.integers(1, 101))
        m = n + int(rng.integers(0, 2000))
        e = est.qis(model, m, n, SeededStream(1, j))
        lo, hi = est.qis_bounds(e)
        violations += not (lo <= e.log_z <= hi)
    ok = verdict("6 QIS sandwich", violations == 0, f"{violations} violations in 1000 runs over 4 models")
    assert ok


# 7 ----------------------------------------------------------------------------


def test_07_dirichlet_moments(verdict):
    n, reps = 10, 100_000
    u = SeededStream(7).sorted_uniforms(n, size=reps)
    z = np.diff(np.concatenate([np.zeros((reps, 1)), u, np.ones((reps, 1))], axis=1), axis=1)
    base = math.factorial(n) / math.factorial(n + 6)
    want6, want33 = math.factorial(6) * base, 36 * base

    six = np.mean(z**6, axis=1)
    pairs = list(itertools.permutations(range(n + 1), 2))
    cube = z**3
    cross = np.mean([cube[:, i] * cube[:, j] for i, j in pairs], axis=0)

    def zscore(x, want):
        return abs(x.mean() - want) / (x.std(ddof=1) / math.sqrt(reps))

    z6, z33 = zscore(six, want6), zscore(cross, want33)
    ok = verdict(
        "7 Dirichlet gap moments",
        z6 < 3 and z33 < 3,
        f"E[Z^6] {six.mean():.4e} vs {want6:.4e} ({z6:.2f} SE); E[Z^3 Z^3] {cross.mean():.4e} vs {want33:.4e} ({z33:.2f} SE)",
    )
    assert ok


# 8 ----------------------------------------------------------------------------


def test_08_lorenz_identity(verdict):
    model = get_model("gaussgauss")
    ll = model.log_likelihood(model.prior_sample(SeededStream(8), 100_000))
    z = np.array([model.survival(v) for v in ll])
    d = stats.kstest(z, "uniform").statistic
    ok = verdict("8 Lorenz identity KS", d < 0.006, f"KS statistic {d:.5f} (need < 0.006)")
    assert ok


# 9 ----------------------------------------------------------------------------


def test_09_nested_volume_and_constant(verdict):
    worst_volume = 0.0
    for n_live, iters in [(2, 1), (5, 50), (20, 1000), (100, 5000)]:
        e = est.nested_sampling(ConstantModel(1.0), n_live, SeededStream(9), max_iter=iters)
        x = np.exp(e.extras["log_volumes"])
        worst_volume = max(worst_volume, abs(np.sum(-np.diff(x)) + x[-1] - 1.0))
    worst_const = 0.0
    for rule in (est.SIMPLE, est.TRAPEZOID):
        for c in (0.5, 3.0, 1e-20):
            e = est.nested_sampling(ConstantModel(c), 20, SeededStream(9), max_iter=500, rule=rule)
            worst_const = max(worst_const, abs(math.exp(e.log_z) / c - 1.0))
    ok = verdict(
        "9 nested volume + constant",
        worst_volume <= 1e-12 and worst_const <= 1e-12,
        f"max |sum dX + X_I - 1| = {worst_volume:.1e}; max |Z/c - 1| = {worst_const:.1e} (tol 1e-12)",
    )
    assert ok


# 10 ---------------------------------------------------------------------------


def test_10_replicate_csv_determinism(verdict, tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = []
    for p in paths:
        codes.append(
            cli.main(["replicate", "--model", "gaussgauss", "--estimator", "qis", "--reps", "50", "--seed", "10", "--out", str(p)])
        )
    same = paths[0].read_bytes() == paths[1].read_bytes()
    ok = verdict("10 replicate CSV byte-identical", same and codes == [0, 0], f"exit codes {codes}, identical={same}")
    assert ok
