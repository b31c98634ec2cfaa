"""FastAPI service wrapping the core package.

The service owns no state beyond an optional spectrum cache directory; every
endpoint is a pure function of its request, so a long-lived process can serve
concurrent sweep clients while the CLI drives the same app in-process.
"""

from __future__ import annotations

import warnings

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import config_schema
from ..errors import ConfigError, EquiweylError, UnknownModel, UnknownObservable
from ..experiment import (
    reduced_volume_csv,
    reduced_volume_rows,
    refit,
    run,
    _summary,
)
from ..geometry import builtin_model, catalog_names, model_document
from ..modespec import ModeGrid, assemble_mode_operator, exact_spectrum, solve_modes
from . import schemas

app = FastAPI(
    title="equiweyl",
    description="Symmetry-reduced semiclassical spectral asymptotics on surfaces of revolution",
    version=__version__,
)


def _http_error(exc: EquiweylError) -> HTTPException:
    if isinstance(exc, (UnknownModel, UnknownObservable)):
        return HTTPException(status_code=404, detail=str(exc))
    if isinstance(exc, ConfigError):
        return HTTPException(status_code=422, detail=exc.problems)
    return HTTPException(status_code=422, detail=str(exc))


@app.get("/healthz", response_model=schemas.HealthResponse)
def healthz():
    return schemas.HealthResponse(version=__version__)


@app.get("/models", response_model=schemas.ModelListResponse)
def list_models():
    out = []
    for name in catalog_names():
        m = builtin_model(name)
        out.append(
            schemas.ModelSummary(
                name=m.name,
                length=m.length,
                boundary=m.boundary.value,
                exact_backend=m.exact_backend,
                orbit_dim=m.action.orbit_dim,
                isotropy_chain_length=m.action.isotropy_chain_length,
                fixed_points=list(m.action.fixed_points),
            )
        )
    return schemas.ModelListResponse(models=out)


@app.get("/models/{name}")
def model_detail(name: str, samples: int = 129):
    try:
        return model_document(builtin_model(name), samples)
    except EquiweylError as exc:
        raise _http_error(exc) from exc


@app.post("/spectrum", response_model=schemas.SpectrumResponse)
def spectrum(req: schemas.SpectrumRequest):
    try:
        model = builtin_model(req.model)
        notes: list[str] = []
        if req.backend == "exact":
            records = exact_spectrum(model, req.k, req.h, req.e_max,
                                     with_vectors=req.with_vectors)
        elif req.backend == "fd":
            if req.n is None or req.n < 16:
                raise ConfigError(["n: fd backend needs a grid size n >= 16"])
            grid = ModeGrid.for_model(model, req.n)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                op = assemble_mode_operator(model, req.k, req.h, grid, e_max_hint=req.e_max)
            notes = [str(w.message) for w in caught]
            records = solve_modes(op, req.e_max, with_vectors=req.with_vectors)
        else:
            raise ConfigError([f"backend: unknown backend {req.backend!r}"])
    except EquiweylError as exc:
        raise _http_error(exc) from exc
    rows = [
        schemas.EigenvalueRow(index=r.index, k=r.k, energy=r.energy, provenance=r.provenance)
        for r in records
    ]
    return schemas.SpectrumResponse(model=req.model, h=req.h, rows=rows, warnings=notes)


@app.post("/reduce", response_model=schemas.ReduceResponse)
def reduce(req: schemas.ReduceRequest):
    try:
        rows = reduced_volume_rows(req.model, req.c_values, req.potential, req.shell_eps)
    except EquiweylError as exc:
        raise _http_error(exc) from exc
    return schemas.ReduceResponse(
        model=req.model,
        rows=[schemas.ReduceRow(**r) for r in rows],
        csv=reduced_volume_csv(rows),
    )


@app.post("/experiments/run", response_model=schemas.RunResponse)
def run_experiment(req: schemas.RunRequest):
    try:
        result = run(req.config)
    except EquiweylError as exc:
        raise _http_error(exc) from exc
    return schemas.RunResponse(
        config_hash=result.config_hash, summary=result.summary, csv=result.csv
    )


@app.post("/fit", response_model=schemas.FitResponse)
def fit(req: schemas.FitRequest):
    try:
        report = refit(req.theorem, req.model, req.params,
                       [tuple(r) for r in req.rows], req.final_rel_tol)
    except (EquiweylError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return schemas.FitResponse(summary=_summary(report, req.params.get("config_hash", "")))


@app.get("/config/schema")
def schema():
    return config_schema()
