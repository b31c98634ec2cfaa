"""Pydantic request/response models of the HTTP API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

from ..config import ExperimentConfig


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class ModelSummary(BaseModel):
    name: str
    length: float
    boundary: str
    exact_backend: Optional[str]
    orbit_dim: int
    isotropy_chain_length: int
    fixed_points: list[float]


class ModelListResponse(BaseModel):
    models: list[ModelSummary]


class SpectrumRequest(BaseModel):
    model: str
    k: int = 0
    h: float = Field(default=1.0, gt=0, le=1)
    e_max: float
    backend: str = "exact"          # "exact" | "fd"
    n: Optional[int] = None         # fd grid size
    with_vectors: bool = False


class EigenvalueRow(BaseModel):
    index: int
    k: int
    energy: float
    provenance: str


class SpectrumResponse(BaseModel):
    model: str
    h: float
    rows: list[EigenvalueRow]
    warnings: list[str] = []


class ReduceRequest(BaseModel):
    model: str
    c_values: list[float]
    potential: str = "zero"
    shell_eps: float = Field(default=1e-3, gt=0)


class ReduceRow(BaseModel):
    c: float
    volume: float
    method: str
    error_estimate: float


class ReduceResponse(BaseModel):
    model: str
    rows: list[ReduceRow]
    csv: str


class RunRequest(BaseModel):
    config: ExperimentConfig


class RunResponse(BaseModel):
    config_hash: str
    summary: dict
    csv: str


class FitRequest(BaseModel):
    theorem: str = ""
    model: str = ""
    params: dict = Field(default_factory=dict)
    rows: list[list[float]]         # (h, lhs, leading, abs_error) rows
    final_rel_tol: Optional[float] = None


class FitResponse(BaseModel):
    summary: dict
