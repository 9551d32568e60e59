"""Replication engine: repeated runs, error summaries and convergence slopes.

Replicate ``j`` always consumes ``SeededStream(config.seed, j)``, so results
depend only on the config and never on scheduling.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import estimators as est
from .config import ExperimentConfig
from .errors import ConfigError, DomainError
from .models import get_model
from .rng import SeededStream

# RMSE below this fraction of the truth is rounding noise from an exact rule.
EXACT_RTOL = 1e-12

__all__ = [
    "ReplicationReport",
    "SlopeFit",
    "run_estimator",
    "replicate",
    "slope_fit",
    "ordering_check",
]


def _unit_log_likelihood(model):
    if not model.unit_uniform_prior:
        raise DomainError(f"yakowitz needs a Uniform(0, 1) prior; {model.name} has none")
    return lambda u: model.log_likelihood(np.asarray(u)[:, None])


def run_estimator(config, model, stream):
    """Run the estimator named by ``config.estimator_id`` once."""
    e = config.estimator_id
    if e == "naive":
        return est.naive_mc(model, config.n, stream)
    if e == "yakowitz":
        return est.yakowitz_unit(_unit_log_likelihood(model), config.n, stream)
    if e == "philippe":
        return est.philippe_riemann(model, config.n, stream)
    if e in ("qis", "qis-simple"):
        rule = est.TRAPEZOID if e == "qis" else est.SIMPLE
        return est.qis(model, config.m, config.n, stream, rule=rule)
    if e in ("nested-rect", "nested-trapezoid"):
        rule = est.SIMPLE if e == "nested-rect" else est.TRAPEZOID
        return est.nested_sampling(
            model, config.n_live, stream, epsilon=config.epsilon, max_iter=config.max_iter, rule=rule
        )
    if e in ("vertical", "vertical-asymptotic"):
        simple, asym, _ = est.vertical_geometric(model, config.q, config.levels, config.m, stream)
        return simple if e == "vertical" else asym
    raise ConfigError(f"unknown estimator id {e!r}")


def _budget(config):
    e = config.estimator_id
    if e in ("naive", "yakowitz", "philippe"):
        return {"n": config.n}
    if e.startswith("qis"):
        return {"m": config.m, "n": config.n}
    if e.startswith("nested"):
        return {"n_live": config.n_live, "epsilon": config.epsilon, "max_iter": config.max_iter}
    return {"q": config.q, "levels": config.levels, "m_per_level": config.m}


def _one(config, index):
    model = get_model(config.model_id)
    e = run_estimator(config, model, SeededStream(config.seed, index))
    return e.log_z, e.warning


@dataclass
class ReplicationReport:
    """Replicate-level results and their summary against the analytic truth."""

    estimator: str
    model: str
    budget: dict
    replicates: int
    master_seed: int
    log_z: np.ndarray
    z: np.ndarray
    truth: Optional[float] = None
    mean_z: float = math.nan
    rmse: Optional[float] = None
    mape: Optional[float] = None
    warnings: list = field(default_factory=list)

    @property
    def abs_rel_err(self):
        if self.truth is None:
            return None
        return np.abs((self.z - self.truth) / self.truth)

    def to_dict(self):
        return {
            "estimator": self.estimator,
            "model": self.model,
            "budget": self.budget,
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "truth": self.truth,
            "mean": self.mean_z,
            "rmse": self.rmse,
            "mape": self.mape,
            "z_hat": self.z.tolist(),
            "log_z_hat": self.log_z.tolist(),
            "warnings": self.warnings,
        }


def replicate(config: ExperimentConfig, workers: int = 1) -> ReplicationReport:
    """Run ``config.replicates`` independent replicates and summarize them.

    Parameters
    ----------
    workers : int
        Processes to spread replicates over.  Results are identical for any
        value because replicate ``j`` always uses stream ``j``.
    """
    if config.replicates < 1:
        raise ConfigError("replicates must be >= 1")
    model = get_model(config.model_id)
    indices = range(config.replicates)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, [config] * config.replicates, indices))
    else:
        results = [_one(config, j) for j in indices]

    log_z = np.array([r[0] for r in results])
    z = np.exp(log_z)
    truth_log = model.analytic_log_evidence
    truth = None if truth_log is None else math.exp(truth_log)
    report = ReplicationReport(
        estimator=config.estimator_id,
        model=config.model_id,
        budget=_budget(config),
        replicates=config.replicates,
        master_seed=config.seed,
        log_z=log_z,
        z=z,
        truth=truth,
        mean_z=float(np.mean(z)),
        warnings=[(j, w) for j, (_, w) in enumerate(results) if w],
    )
    if truth is not None:
        report.rmse = float(np.sqrt(np.mean((z - truth) ** 2)))
        report.mape = float(np.mean(np.abs((z - truth) / truth)))
    return report


@dataclass
class SlopeFit:
    """Least-squares fit of ``log rmse`` on ``log n``.

    ``slope`` and ``stderr`` are None and ``degenerate`` is True when some
    RMSE is zero up to rounding (an exact estimator), where the log-log fit
    is meaningless.
    """

    n_grid: list
    rmse: list
    mape: list
    slope: Optional[float]
    intercept: Optional[float]
    stderr: Optional[float]
    degenerate: bool
    estimator: str = ""
    model: str = ""

    def to_dict(self):
        return {
            "estimator": self.estimator,
            "model": self.model,
            "n_grid": list(self.n_grid),
            "rmse": list(self.rmse),
            "mape": list(self.mape),
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "degenerate": self.degenerate,
        }


def slope_fit(config, n_grid, workers=1):
    """Replicate at every ``n`` in ``n_grid`` and fit the RMSE decay rate."""
    grid = [int(v) for v in n_grid]
    if len(grid) < 3:
        raise ConfigError("slope_fit needs at least 3 grid points")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("n_grid must be strictly increasing")
    reports = [replicate(config.with_(n=n), workers=workers) for n in grid]
    if any(r.rmse is None for r in reports):
        raise ConfigError(f"model {config.model_id!r} has no analytic truth to fit against")
    rmse = [r.rmse for r in reports]
    mape = [r.mape for r in reports]
    common = dict(n_grid=grid, rmse=rmse, mape=mape, estimator=config.estimator_id, model=config.model_id)
    truth = reports[0].truth
    if min(rmse) <= EXACT_RTOL * truth:
        return SlopeFit(slope=None, intercept=None, stderr=None, degenerate=True, **common)
    fit = stats.linregress(np.log(grid), np.log(rmse))
    return SlopeFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        degenerate=False,
        **common,
    )


def ordering_check(reports, target="qis"):
    """True iff ``target`` has the strictly smallest RMSE *and* MAPE.

    Raises
    ------
    ConfigError
        Fewer than two reports, reports for different models, a missing
        target, or reports without a truth to compare against.
    """
    reports = list(reports)
    if len(reports) < 2:
        raise ConfigError("ordering_check needs reports for at least two estimators")
    models = {r.model for r in reports}
    if len(models) != 1:
        raise ConfigError(f"reports span several models: {sorted(models)}")
    if any(r.rmse is None for r in reports):
        raise ConfigError("ordering_check needs reports with an analytic truth")
    mine = [r for r in reports if r.estimator == target]
    if len(mine) != 1:
        raise ConfigError(f"expected exactly one {target!r} report")
    ref = mine[0]
    others = [r for r in reports if r is not ref]
    return all(ref.rmse < r.rmse and ref.mape < r.mape for r in others)
