"""Experiment configuration shared by the bench and the command line."""

import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from .errors import ConfigError

# Estimator ids understood by the bench, mapped to what they consume.
ESTIMATORS = {
    "naive": "n prior draws",
    "yakowitz": "n sorted uniforms (uniform-prior models)",
    "philippe": "n sorted prior draws (1-d models)",
    "qis": "m prior draws, n sorted uniforms, trapezoid rule",
    "qis-simple": "m prior draws, n sorted uniforms, lower-sum rule",
    "nested-rect": "n_live live points, rectangular shells",
    "nested-trapezoid": "n_live live points, trapezoid shells",
    "vertical": "levels x m constrained draws, telescoped ladder sum",
    "vertical-asymptotic": "levels x m constrained draws, (1-q) weighted ladder sum",
}

OUTPUT_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    """One model/estimator pairing and its budget.

    ``m`` is the number of prior draws (QIS) or draws per ladder level
    (vertical); ``n`` the grid size or plain sample count; ``n_live`` the
    nested-sampling population.
    """

    model_id: str = "gaussgauss"
    estimator_id: str = "qis"
    m: int = 1000
    n: int = 20
    n_live: int = 20
    q: float = 0.9
    epsilon: float = 1e-4
    replicates: int = 100
    seed: int = 0
    output_format: str = "csv"
    output_path: Optional[str] = None
    levels: int = 200
    max_iter: int = 100_000

    def __post_init__(self):
        from .models import MODELS

        if self.model_id not in MODELS:
            raise ConfigError(f"unknown model id {self.model_id!r}; choose from {sorted(MODELS)}")
        if self.estimator_id not in ESTIMATORS:
            raise ConfigError(
                f"unknown estimator id {self.estimator_id!r}; choose from {sorted(ESTIMATORS)}"
            )
        for name in ("m", "n", "n_live", "replicates", "levels", "max_iter"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        if not 0.0 < self.q < 1.0:
            raise ConfigError(f"q must lie in (0, 1), got {self.q}")
        if not self.epsilon > 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format must be one of {OUTPUT_FORMATS}")

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)
