"""Batch experiment runner: h-sweeps, parallel mode evaluation, artifacts.

A run evaluates one spectral-sum theorem over a geometric h-schedule,
compares against the independently computed leading term, fits convergence
rates, and renders a CSV table plus a JSON summary.  Outputs are
deterministic for a fixed config and seed: per-(h, k) tasks are pure, their
results are merged in sorted key order regardless of the parallelism degree,
and numbers are formatted with 17 significant digits.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import reduction
from .cache import SpectrumCache, model_digest
from .config import ExperimentConfig
from .errors import UnknownObservable
from .geometry import RevolutionSurface, builtin_model
from .modespec import (
    EXACT_GRID_N,
    ModeGrid,
    assemble_mode_operator,
    exact_spectrum,
    flat_torus_modes,
    observable_expectation,
    solve_modes,
    sphere_level_range,
)
from .observables import SPHERE_EXACT_EXPECTATION, get_b0, get_beta, get_potential, get_rho
from .peterweyl import CharacterFamily, family_at
from .weyllab import CODIM, SpectralWindow, WeylReport, compare_and_fit

#: largest mode count for which exact-backend eigenvectors are materialized
EXACT_VECTOR_BUDGET = 50_000_000


@dataclass(frozen=True)
class RunResult:
    report: WeylReport
    csv: str
    summary: dict
    config_hash: str


def _family_from_config(cfg: ExperimentConfig) -> CharacterFamily:
    if cfg.k_values is not None:
        return CharacterFamily.fixed_set(cfg.k_values)
    return CharacterFamily.power_law(cfg.theta or 0.0)


def _phase_symbol(model: RevolutionSurface, b0, beta):
    """Invariant phase-space symbol b0(s) * beta(p) of the observable; None if identity."""
    if b0 is None and beta is None:
        return None

    def symbol(s, phi, sigma, p_phi):
        val = 1.0 if b0 is None else float(b0(s))
        if beta is not None:
            a = float(model.profile(s))
            p = sigma**2 + (p_phi / a) ** 2 if p_phi else sigma**2
            val *= float(beta(p + float(model.potential(s))))
        return val * np.ones_like(np.asarray(phi, dtype=float))

    return symbol


def leading_term(cfg: ExperimentConfig, model: RevolutionSurface) -> float:
    """Reduced phase-space integral the spectral sums converge to."""
    b0 = get_b0(cfg.observable.b0)
    beta = get_beta(cfg.observable.beta)
    if cfg.theorem in ("counting_single", "counting_family"):
        return reduction.reduced_volume(model, cfg.c)
    if cfg.theorem in ("weyl_single", "weyl_family"):
        return reduction.sigma_c_integral(model, cfg.c, _phase_symbol(model, b0, beta))
    rho = get_rho(cfg.observable.rho)
    return reduction.omega_weighted_integral(model, _phase_symbol(model, b0, beta), rho)


def _sphere_exact_value(cfg, k, h, e_lo, e_hi, rho) -> float:
    """Vectorized sphere-mode window sum using closed-form expectations."""
    l_lo, l_hi = sphere_level_range(h, max(e_lo, 0.0), e_hi, abs(k))
    if l_hi < l_lo:
        return 0.0
    ls = np.arange(l_lo, l_hi + 1, dtype=float)
    energies = h * h * ls * (ls + 1.0)
    if cfg.theorem in ("counting_single", "counting_family"):
        vals = np.ones_like(ls)
    else:
        try:
            vals = np.asarray(SPHERE_EXACT_EXPECTATION[cfg.observable.b0](ls, k), dtype=float)
        except KeyError:
            raise UnknownObservable(
                f"no closed-form sphere expectation for b0 = {cfg.observable.b0!r}"
            ) from None
        beta = get_beta(cfg.observable.beta)
        if beta is not None:
            vals = vals * np.asarray(beta(energies), dtype=float)
    if rho is not None:
        vals = vals * rho(energies)
    return float(np.sum(vals))


def _torus_exact_count_value(cfg, k, h, e_lo, e_hi, rho) -> float:
    ms, energies = flat_torus_modes(k, h, e_hi, None if rho is not None else e_lo)
    if cfg.theorem in ("counting_single", "counting_family"):
        vals = np.ones_like(energies)
    else:
        vals = np.ones_like(energies)
        beta = get_beta(cfg.observable.beta)
        if beta is not None:
            vals = vals * np.asarray(beta(energies), dtype=float)
    if rho is not None:
        vals = vals * rho(energies)
    return float(np.sum(vals))


def _record_value(cfg, model, grid, k, h, e_lo, e_hi, rho, cache: SpectrumCache | None,
                  digest: str | None) -> float:
    """Window/trace sum from materialized eigenrecords (fd or exact backend)."""
    b0 = get_b0(cfg.observable.b0)
    beta = get_beta(cfg.observable.beta)
    need_vectors = b0 is not None
    if cfg.theorem in ("counting_single", "counting_family"):
        need_vectors = False
    records = None
    key = None
    if cache is not None:
        key = cache.key(digest, cfg.solver.backend, h, k, grid.count if grid else 0,
                        e_hi, need_vectors)
        records = cache.get(key, grid)
    if records is None:
        if cfg.solver.backend == "exact":
            if need_vectors and grid is not None:
                n_modes = 2.0 * math.sqrt(max(e_hi, 0.0)) / h
                if n_modes * grid.count > EXACT_VECTOR_BUDGET:
                    raise UnknownObservable(
                        f"observable {cfg.observable.b0!r} needs eigenvectors for "
                        f"~{n_modes:.0f} exact modes; beyond the materialization budget"
                    )
            records = exact_spectrum(model, k, h, e_hi, grid=grid, with_vectors=need_vectors)
        else:
            op = assemble_mode_operator(model, k, h, grid, e_max_hint=e_hi)
            records = solve_modes(op, e_hi, with_vectors=need_vectors)
        if cache is not None:
            cache.put(key, records)
    total = 0.0
    for rec in records:
        if rho is not None:
            w = float(rho(rec.energy))
            if w == 0.0:
                continue
            total += w * observable_expectation(rec, b0, beta)
        elif e_lo <= rec.energy <= e_hi:
            total += observable_expectation(rec, b0, beta)
    return total


def _mode_task(cfg, model, grid, k, h, window, rho, cache, digest) -> float:
    if cfg.theorem == "trace":
        e_lo, e_hi = 0.0, rho.support[1] * (1.0 + 1e-12)
    else:
        e_lo, e_hi = window.interval(h)
    if cfg.solver.backend == "exact" and model.exact_backend == "sphere":
        return _sphere_exact_value(cfg, k, h, e_lo, e_hi, rho)
    if (
        cfg.solver.backend == "exact"
        and model.exact_backend == "flat_torus"
        and cfg.observable.b0 in ("one", "zero")
    ):
        if cfg.observable.b0 == "zero" and cfg.theorem not in ("counting_single", "counting_family"):
            return 0.0
        return _torus_exact_count_value(cfg, k, h, e_lo, e_hi, rho)
    return _record_value(cfg, model, grid, k, h, e_lo, e_hi, rho, cache, digest)


def run(cfg: ExperimentConfig) -> RunResult:
    """Execute one experiment; deterministic for fixed config and seed."""
    cfg.validate_semantics()
    model = builtin_model(cfg.model)
    family = _family_from_config(cfg)
    rho = get_rho(cfg.observable.rho) if cfg.theorem == "trace" else None
    window = None if cfg.theorem == "trace" else SpectralWindow(cfg.c, cfg.delta)
    hs = cfg.h_schedule.values()

    grid = None
    if cfg.solver.backend == "fd":
        grid = ModeGrid.for_model(model, cfg.solver.n)
    elif get_b0(cfg.observable.b0) is not None and model.exact_backend == "flat_torus":
        grid = ModeGrid.for_model(model, EXACT_GRID_N)

    cache = SpectrumCache(cfg.cache_dir) if cfg.cache_dir else None
    digest = model_digest(model) if cache else None

    tasks = []
    for i, h in enumerate(hs):
        for char in family_at(family, h):
            tasks.append((i, h, char.k))
    results: dict[tuple[int, int], float] = {}
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {
                (i, k): pool.submit(_mode_task, cfg, model, grid, k, h, window, rho, cache, digest)
                for i, h, k in tasks
            }
            for key, fut in futures.items():
                results[key] = fut.result()
    else:
        for i, h, k in tasks:
            results[(i, k)] = _mode_task(cfg, model, grid, k, h, window, rho, cache, digest)

    lhs_values = []
    for i, h in enumerate(hs):
        chars = family_at(family, h)
        total = 0.0
        for char in chars:  # ordered by k: deterministic accumulation
            total += results[(i, char.k)] / (char.dim * char.isotropy_mult)
        if cfg.theorem == "trace":
            pref = (2.0 * math.pi * h) ** CODIM
        else:
            pref = (2.0 * math.pi) ** CODIM * h ** (CODIM - cfg.delta)
        lhs_values.append(pref * total / len(chars))

    lead = leading_term(cfg, model)
    theorem_valid = True
    if window is not None and not window.is_theorem_mode():
        theorem_valid = False
    report = _build_report(cfg, model, hs, lhs_values, lead, theorem_valid)
    config_hash = cfg.science_hash()
    csv = render_report_csv(report, config_hash)
    summary = _summary(report, config_hash)
    if cfg.mc_check:
        summary["mc_check"] = _mc_cross_check(cfg, model, rho, lead)
    result = RunResult(report, csv, summary, config_hash)
    if cfg.out_dir:
        write_artifacts(result, cfg.out_dir)
    return result


def _build_report(cfg, model, hs, lhs_values, lead, theorem_valid) -> WeylReport:
    chain = model.action.isotropy_chain_length
    fit_ok = len(hs) >= 4 and hs[0] / hs[-1] >= 99.0
    if fit_ok:
        report = compare_and_fit(
            hs,
            lhs_values,
            lead,
            theorem=cfg.theorem,
            model=cfg.model,
            delta=cfg.delta,
            theta=cfg.theta or 0.0,
            chain_length=chain,
        )
    else:
        rows = tuple((h, v, lead, abs(v - lead)) for h, v in zip(hs, lhs_values))
        report = WeylReport(cfg.theorem, cfg.model, rows, math.nan, math.nan, None, None, False,
                            {"delta": cfg.delta, "theta": cfg.theta or 0.0,
                             "kappa": 1, "chain_length": chain})
    params = dict(report.params)
    params.update({"c": cfg.c, "theorem_valid": theorem_valid,
                   "b0": cfg.observable.b0, "beta": cfg.observable.beta,
                   "rho": cfg.observable.rho, "backend": cfg.solver.backend,
                   "n": cfg.solver.n, "seed": cfg.seed})
    return WeylReport(report.theorem, report.model, report.rows, report.slope,
                      report.slope_stderr, report.slope_logcorrected,
                      report.predicted_exponent, report.passed, params)


def _mc_cross_check(cfg, model, rho, lead, n_samples: int = 200_000) -> dict:
    """Seeded Monte Carlo estimate of the leading term, as an independent sanity band."""
    rng = np.random.default_rng(cfg.seed)
    s = rng.uniform(0.0, model.length, n_samples)
    v = np.asarray(model.potential(s), dtype=float)
    if cfg.theorem == "trace":
        sig_max = math.sqrt(max(rho.support[1] - float(np.min(v)), 1e-12))
        sig = rng.uniform(-sig_max, sig_max, n_samples)
        vals = rho(sig * sig + v)
        b0 = get_b0(cfg.observable.b0)
        if b0 is not None:
            vals = vals * np.asarray(b0(s), dtype=float)
        beta = get_beta(cfg.observable.beta)
        if beta is not None:
            vals = vals * np.asarray(beta(sig * sig + v), dtype=float)
    else:
        eps = 1e-3
        sig_max = math.sqrt(max(cfg.c + eps - float(np.min(v)), 1e-12))
        sig = rng.uniform(-sig_max, sig_max, n_samples)
        p = sig * sig + v
        inside = (p >= cfg.c) & (p <= cfg.c + eps)
        vals = inside.astype(float) / eps
        if cfg.theorem in ("weyl_single", "weyl_family"):
            b0 = get_b0(cfg.observable.b0)
            if b0 is not None:
                vals = vals * np.asarray(b0(s), dtype=float)
            beta = get_beta(cfg.observable.beta)
            if beta is not None:
                vals = vals * np.asarray(beta(p), dtype=float)
    area = model.length * 2.0 * sig_max
    est = float(np.mean(vals) * area)
    stderr = float(np.std(vals) * area / math.sqrt(n_samples))
    return {"estimate": est, "stderr": stderr, "reference": lead, "seed": cfg.seed,
            "samples": n_samples}


# ---------------------------------------------------------------------------
# artifact rendering
# ---------------------------------------------------------------------------

CSV_HEADER = "theorem,model,h,lhs,leading,abs_error"


def render_report_csv(report: WeylReport, config_hash: str) -> str:
    lines = [
        "# equiweyl report v1",
        f"# config_hash={config_hash}",
        f"# params={json.dumps(report.params, sort_keys=True)}",
        CSV_HEADER,
    ]
    for h, lhs, lead, err in report.rows:
        lines.append(
            f"{report.theorem},{report.model},{h:.17g},{lhs:.17g},{lead:.17g},{err:.17g}"
        )
    return "\n".join(lines) + "\n"


def parse_report_csv(text: str):
    """Recover (params, rows) from a rendered report CSV."""
    params = {}
    rows = []
    theorem = model = None
    for line in text.splitlines():
        if line.startswith("# params="):
            params = json.loads(line[len("# params="):])
        elif line.startswith("#") or line == CSV_HEADER or not line.strip():
            continue
        else:
            fields = line.split(",")
            theorem, model = fields[0], fields[1]
            rows.append(tuple(float(x) for x in fields[2:6]))
    return theorem, model, params, rows


def refit(theorem, model, params, rows, final_rel_tol=None) -> WeylReport:
    hs = [r[0] for r in rows]
    lhs = [r[1] for r in rows]
    lead = rows[0][2]
    return compare_and_fit(
        hs,
        lhs,
        lead,
        theorem=theorem or "",
        model=model or "",
        delta=params.get("delta"),
        theta=params.get("theta") or 0.0,
        chain_length=params.get("chain_length") or 1,
        final_rel_tol=final_rel_tol,
    )


def _summary(report: WeylReport, config_hash: str) -> dict:
    return {
        "config_hash": config_hash,
        "theorem": report.theorem,
        "model": report.model,
        "slope": report.slope,
        "slope_stderr": report.slope_stderr,
        "slope_logcorrected": report.slope_logcorrected,
        "predicted_exponent": report.predicted_exponent,
        "final_abs_error": report.final_abs_error,
        "final_rel_error": report.final_rel_error,
        "pass": report.passed,
        "params": report.params,
    }


def render_summary_json(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"


def render_gnuplot_table(rows, config_hash: str) -> str:
    """Whitespace table of h vs |error|, ready for `plot "..." using 1:2`."""
    lines = [f"# config_hash={config_hash}", "# h abs_error"]
    for h, _, _, err in rows:
        lines.append(f"{h:.17g} {err:.17g}")
    return "\n".join(lines) + "\n"


def write_artifacts(result: RunResult, out_dir, gnuplot: bool = False) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "report.csv"
    json_path = out / "summary.json"
    csv_path.write_text(result.csv)
    json_path.write_text(render_summary_json(result.summary))
    if gnuplot:
        (out / "error_vs_h.dat").write_text(
            render_gnuplot_table(result.report.rows, result.config_hash)
        )
    return csv_path, json_path


# ---------------------------------------------------------------------------
# reduced-volume tables (reduce subcommand / endpoint)
# ---------------------------------------------------------------------------

def reduced_volume_rows(model_name: str, c_values, potential_id: str = "zero",
                        shell_eps: float = 1e-3) -> list[dict]:
    """Level-set volumes over a c-grid, cross-checked against the shell oracle.

    Emits two rows per c: the 1D level-set quadrature and the 2D thin-shell
    average, each carrying their mutual disagreement as the error estimate.
    """
    model = builtin_model(model_name)
    potential = get_potential(potential_id)
    rows = []
    for c in c_values:
        vol = reduction.reduced_volume(model, c, potential)
        shell = reduction.thin_shell_measure(
            model, c, shell_eps, lambda s, sg: np.ones_like(np.asarray(sg, dtype=float)),
            potential,
        )
        gap = abs(vol - shell)
        rows.append({"c": float(c), "volume": vol, "method": "level_set",
                     "error_estimate": gap})
        rows.append({"c": float(c), "volume": shell,
                     "method": f"thin_shell(eps={shell_eps:g})", "error_estimate": gap})
    return rows


def reduced_volume_csv(rows) -> str:
    lines = ["c,volume,method,error_estimate"]
    for r in rows:
        lines.append(f"{r['c']:.17g},{r['volume']:.17g},{r['method']},{r['error_estimate']:.17g}")
    return "\n".join(lines) + "\n"
