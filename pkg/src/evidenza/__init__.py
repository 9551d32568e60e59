"""Bayesian evidence estimation: quantile importance sampling and friends."""

from .errors import (
    ConfigError,
    DegenerateIntervalError,
    DomainError,
    EmptyConstraintError,
    EvidenzaError,
    MissingGridError,
    QuadratureError,
)
from .estimators import (
    LogEvidenceEstimate,
    LorenzTrace,
    OrderedOrdinates,
    importance_sampling,
    naive_mc,
    nested_sampling,
    philippe_riemann,
    qis,
    qis_bounds,
    vertical_geometric,
    yakowitz_unit,
)
from .models import MODELS, TargetModel, get_model
from .rng import SeededStream

__version__ = "0.1.0"
