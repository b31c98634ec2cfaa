"""Experiment configuration: a single JSON document with a published schema.

Validation collects every violated constraint with its field path; the
strict flag enforces the admissible (delta, theta) region of the windowed
asymptotics, while permissive mode lets exploratory parameters through and
marks the run as outside theorem scope.
"""

from __future__ import annotations

import hashlib
import json
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from .errors import ConfigError
from .geometry import catalog_names
from .observables import B0_CATALOG, BETA_CATALOG, rho_names
from .weyllab import theorem_delta_bound, theorem_theta_bound

THEOREMS = ("weyl_single", "weyl_family", "counting_single", "counting_family", "trace")


class HSchedule(BaseModel):
    """Geometric grid of semiclassical parameters from h_max down to h_min."""

    h_max: float = Field(gt=0, le=1)
    h_min: float = Field(gt=0, le=1)
    count: int = Field(ge=2, le=2000)

    def values(self) -> tuple[float, ...]:
        return tuple(float(x) for x in np.geomspace(self.h_max, self.h_min, self.count))


class ObservableSpec(BaseModel):
    b0: str = "one"
    beta: str = "one"
    rho: Optional[str] = None


class SolverSpec(BaseModel):
    backend: Literal["exact", "fd"] = "exact"
    n: Optional[int] = None       # grid size for the fd backend


class ExperimentConfig(BaseModel):
    model: str
    theorem: Literal["weyl_single", "weyl_family", "counting_single", "counting_family", "trace"]
    c: Optional[float] = None
    delta: Optional[float] = None
    theta: Optional[float] = None
    k_values: Optional[list[int]] = None
    h_schedule: HSchedule
    observable: ObservableSpec = Field(default_factory=ObservableSpec)
    solver: SolverSpec = Field(default_factory=SolverSpec)
    strict: bool = True
    seed: int = Field(default=0, ge=0, lt=2**64)
    mc_check: bool = False
    jobs: int = Field(default=1, ge=1, le=256)
    out_dir: Optional[str] = None
    cache_dir: Optional[str] = None

    def validate_semantics(self) -> None:
        """Cross-field validation; raises ConfigError listing every problem."""
        problems: list[str] = []
        if self.model not in catalog_names():
            problems.append(f"model: unknown model {self.model!r}")
        if self.h_schedule.h_max <= self.h_schedule.h_min:
            problems.append("h_schedule: h_max must exceed h_min (strictly decreasing schedule)")
        windowed = self.theorem != "trace"
        if windowed:
            if self.c is None:
                problems.append("c: required for windowed theorems")
            if self.delta is None:
                problems.append("delta: required for windowed theorems")
            elif self.strict and not 0.0 < self.delta < theorem_delta_bound():
                problems.append(
                    f"delta: {self.delta} outside the admissible range "
                    f"(0, {theorem_delta_bound():.6g}) in strict mode"
                )
        single = self.theorem in ("weyl_single", "counting_single")
        family = self.theorem in ("weyl_family", "counting_family", "trace")
        if single:
            if not self.k_values or len(self.k_values) != 1:
                problems.append("k_values: single-mode theorems need exactly one character index")
        if family and self.k_values is None and self.theta is None:
            problems.append("theta: family theorems need either theta or k_values")
        if self.theta is not None and self.theta < 0:
            problems.append("theta: growth rate must be nonnegative")
        if (
            self.strict
            and windowed
            and family
            and self.theta is not None
            and self.delta is not None
            and 0.0 < self.delta < theorem_delta_bound()
            and self.theta >= theorem_theta_bound(self.delta)
        ):
            problems.append(
                f"theta: {self.theta} >= admissible bound "
                f"{theorem_theta_bound(self.delta):.6g} for delta = {self.delta} in strict mode"
            )
        if self.theorem == "trace":
            if self.observable.rho is None:
                problems.append("observable.rho: required for trace experiments")
            elif self.observable.rho not in rho_names():
                problems.append(f"observable.rho: unknown window {self.observable.rho!r}")
            if self.strict and self.theta is not None and self.theta >= 0.2:
                problems.append("theta: trace experiments need theta < 1/5 in strict mode")
        if self.observable.b0 not in B0_CATALOG:
            problems.append(f"observable.b0: unknown observable {self.observable.b0!r}")
        if self.observable.beta not in BETA_CATALOG:
            problems.append(f"observable.beta: unknown filter {self.observable.beta!r}")
        if self.solver.backend == "fd":
            if self.solver.n is None or self.solver.n < 16:
                problems.append("solver.n: fd backend needs a grid size n >= 16")
        elif self.model in catalog_names():
            from .geometry import builtin_model

            if builtin_model(self.model).exact_backend is None:
                problems.append(
                    f"solver.backend: model {self.model!r} has no exact backend; use fd"
                )
        if problems:
            raise ConfigError(problems)

    def science_hash(self) -> str:
        """Hash of the result-determining fields (excludes jobs and paths)."""
        payload = self.model_dump()
        for transient in ("jobs", "out_dir", "cache_dir"):
            payload.pop(transient, None)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def config_schema() -> dict:
    return ExperimentConfig.model_json_schema()


def load_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig.model_validate_json(text)
    cfg.validate_semantics()
    return cfg
