import json
import math

import numpy as np
import pytest

from equiweyl.config import ExperimentConfig, HSchedule, config_schema, load_config
from equiweyl.errors import ConfigError
from equiweyl.experiment import (
    leading_term,
    parse_report_csv,
    reduced_volume_csv,
    reduced_volume_rows,
    refit,
    run,
)
from equiweyl.geometry import builtin_model


def counting_cfg(**over):
    base = dict(
        model="sphere",
        theorem="counting_single",
        c=1.0,
        delta=0.16,
        k_values=[0],
        h_schedule=HSchedule(h_max=1e-2, h_min=1e-4, count=7),
        solver={"backend": "exact"},
    )
    base.update(over)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_strict_delta_gate():
    cfg = counting_cfg(delta=0.3)
    with pytest.raises(ConfigError) as err:
        cfg.validate_semantics()
    assert any(p.startswith("delta:") for p in err.value.problems)


def test_permissive_delta_allowed():
    cfg = counting_cfg(delta=0.3, strict=False)
    cfg.validate_semantics()


def test_strict_theta_gate():
    cfg = ExperimentConfig(
        model="sphere", theorem="weyl_family", c=1.0, delta=0.1, theta=0.2,
        h_schedule=HSchedule(h_max=1e-1, h_min=1e-3, count=5),
    )
    with pytest.raises(ConfigError) as err:
        cfg.validate_semantics()
    assert any(p.startswith("theta:") for p in err.value.problems)


def test_missing_fields_enumerated():
    cfg = ExperimentConfig(
        model="nowhere", theorem="weyl_single",
        h_schedule=HSchedule(h_max=1e-1, h_min=1e-3, count=5),
    )
    with pytest.raises(ConfigError) as err:
        cfg.validate_semantics()
    fields = {p.split(":")[0] for p in err.value.problems}
    assert {"model", "c", "delta", "k_values"} <= fields


def test_fd_needs_grid_size():
    cfg = counting_cfg(solver={"backend": "fd"})
    with pytest.raises(ConfigError) as err:
        cfg.validate_semantics()
    assert any(p.startswith("solver.n") for p in err.value.problems)


def test_exact_backend_requires_exact_model():
    cfg = counting_cfg(model="bumpy_torus")
    with pytest.raises(ConfigError) as err:
        cfg.validate_semantics()
    assert any(p.startswith("solver.backend") for p in err.value.problems)


def test_trace_needs_rho():
    cfg = ExperimentConfig(
        model="flat_torus", theorem="trace", k_values=[0],
        h_schedule=HSchedule(h_max=1e-1, h_min=1e-3, count=5),
    )
    with pytest.raises(ConfigError) as err:
        cfg.validate_semantics()
    assert any("rho" in p for p in err.value.problems)


def test_science_hash_ignores_transport_fields():
    a = counting_cfg(jobs=1)
    b = counting_cfg(jobs=8, out_dir="/tmp/x", cache_dir="/tmp/y")
    c = counting_cfg(seed=9)
    assert a.science_hash() == b.science_hash()
    assert a.science_hash() != c.science_hash()


def test_schema_and_load_roundtrip():
    schema = config_schema()
    assert "properties" in schema and "theorem" in schema["properties"]
    cfg = counting_cfg()
    again = load_config(cfg.model_dump_json())
    assert again == cfg


def test_shipped_configs_validate():
    from pathlib import Path

    config_dir = Path(__file__).resolve().parent.parent / "configs"
    paths = sorted(config_dir.glob("*.json"))
    assert len(paths) >= 4
    for path in paths:
        load_config(path.read_text())


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

def test_counting_run_matches_inline_enumeration():
    # oracle: direct eigenvalue enumeration per h, computed in the test
    cfg = counting_cfg()
    res = run(cfg)
    for h, lhs, lead, err in res.report.rows:
        w = h**cfg.delta
        count = 0
        l = 0
        while True:
            e = h * h * l * (l + 1.0)
            if e > cfg.c + w:
                break
            if e >= cfg.c:
                count += 1
            l += 1
        oracle = 2.0 * math.pi * h ** (1.0 - cfg.delta) * count
        assert lhs == oracle
        assert lead == res.report.rows[0][2]
    assert res.report.slope > 0


def test_run_determinism_across_parallelism():
    r1 = run(counting_cfg(jobs=1, seed=3, mc_check=True))
    r8 = run(counting_cfg(jobs=8, seed=3, mc_check=True))
    assert r1.csv == r8.csv
    assert r1.summary == r8.summary


def test_family_equals_single_for_k0():
    single = run(counting_cfg())
    fam = run(
        ExperimentConfig(
            model="sphere", theorem="counting_family", c=1.0, delta=0.16,
            k_values=[0], h_schedule=HSchedule(h_max=1e-2, h_min=1e-4, count=7),
        )
    )
    assert [r[1] for r in single.report.rows] == [r[1] for r in fam.report.rows]


def test_fd_backend_agrees_with_exact():
    common = dict(
        model="sphere", theorem="counting_single", c=1.0, delta=0.16,
        k_values=[0], h_schedule=HSchedule(h_max=0.3, h_min=0.1, count=2),
    )
    exact = run(ExperimentConfig(**common))
    fd = run(ExperimentConfig(**common, solver={"backend": "fd", "n": 1200}))
    for (h1, v1, *_), (h2, v2, *_) in zip(exact.report.rows, fd.report.rows):
        assert h1 == h2
        assert v1 == v2  # window counts coincide once eigenvalues are resolved


def test_energy_filter_observable():
    # B = beta(P): on the level set beta(p) = c, so the leading term is c * volume
    cfg = ExperimentConfig(
        model="sphere", theorem="weyl_single", c=1.0, delta=0.16, k_values=[0],
        h_schedule=HSchedule(h_max=1e-2, h_min=1e-4, count=4),
        observable={"b0": "one", "beta": "energy"},
    )
    res = run(cfg)
    lead = res.report.rows[0][2]
    assert abs(lead - math.pi) <= 1e-6
    assert res.report.final_rel_error <= 0.25
    errs = [r[3] for r in res.report.rows]
    assert errs[-1] < errs[0]


def test_torus_exact_observable_pipeline():
    # eigenvector path of the exact torus backend vs the fd backend; window
    # sums over whole degenerate pairs are basis-independent
    common = dict(
        model="flat_torus", theorem="weyl_single", c=1.0, delta=0.16, k_values=[2],
        h_schedule=HSchedule(h_max=0.3, h_min=0.1, count=2),
        observable={"b0": "cos2"},
    )
    exact = run(ExperimentConfig(**common))
    fd = run(ExperimentConfig(**common, solver={"backend": "fd", "n": 1024}))
    for (_, v1, *_), (_, v2, *_) in zip(exact.report.rows, fd.report.rows):
        assert abs(v1 - v2) <= 1e-3 * max(abs(v1), 1.0)


def test_fd_exact_pipeline_agreement_with_observable():
    # same windowed observable sum through both backends
    common = dict(
        model="sphere", theorem="weyl_single", c=1.0, delta=0.16, k_values=[1],
        h_schedule=HSchedule(h_max=0.3, h_min=0.1, count=2),
        observable={"b0": "cos2"},
    )
    exact = run(ExperimentConfig(**common))
    fd = run(ExperimentConfig(**common, solver={"backend": "fd", "n": 1600}))
    for (_, v1, *_), (_, v2, *_) in zip(exact.report.rows, fd.report.rows):
        assert abs(v1 - v2) <= 1e-3 * max(abs(v1), 1.0)


def test_fd_cache_roundtrip(tmp_path):
    common = dict(
        model="sphere", theorem="counting_single", c=1.0, delta=0.16,
        k_values=[0], h_schedule=HSchedule(h_max=0.3, h_min=0.1, count=2),
        solver={"backend": "fd", "n": 800}, cache_dir=str(tmp_path / "cache"),
    )
    first = run(ExperimentConfig(**common))
    stored = list((tmp_path / "cache").rglob("*.npz"))
    assert stored
    second = run(ExperimentConfig(**common))
    assert first.csv == second.csv


def test_weyl_observable_run_small():
    cfg = ExperimentConfig(
        model="sphere", theorem="weyl_single", c=1.0, delta=0.16, k_values=[1],
        h_schedule=HSchedule(h_max=3e-2, h_min=1e-3, count=3),
        observable={"b0": "cos2"},
    )
    res = run(cfg)
    lead = res.report.rows[0][2]
    assert abs(lead - math.pi / 2) <= 1e-7
    assert res.report.rows[-1][3] / lead < 0.6


def test_permissive_run_flagged():
    cfg = counting_cfg(delta=0.3, strict=False,
                       h_schedule=HSchedule(h_max=1e-2, h_min=1e-4, count=4))
    res = run(cfg)
    assert res.report.params["theorem_valid"] is False


def test_trace_run_and_leading():
    cfg = ExperimentConfig(
        model="flat_torus", theorem="trace", k_values=[0],
        h_schedule=HSchedule(h_max=1e-1, h_min=1e-3, count=4),
        observable={"rho": "bump_05_15"},
    )
    res = run(cfg)
    assert res.report.final_rel_error <= 1e-2
    assert res.report.slope > 0


def test_mc_check_fields():
    res = run(counting_cfg(mc_check=True, seed=11))
    mc = res.summary["mc_check"]
    assert mc["seed"] == 11
    assert abs(mc["estimate"] - math.pi) <= 6 * mc["stderr"]


def test_artifacts_written(tmp_path):
    cfg = counting_cfg(out_dir=str(tmp_path / "out"))
    res = run(cfg)
    csv_text = (tmp_path / "out" / "report.csv").read_text()
    assert csv_text == res.csv
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["config_hash"] == res.config_hash
    assert f"config_hash={res.config_hash}" in csv_text


def test_csv_roundtrip_and_refit():
    res = run(counting_cfg())
    theorem, model, params, rows = parse_report_csv(res.csv)
    assert theorem == "counting_single" and model == "sphere"
    assert len(rows) == 7
    rep = refit(theorem, model, params, rows)
    assert abs(rep.slope - res.report.slope) <= 1e-12


def test_csv_17_digit_stability():
    res = run(counting_cfg())
    _, _, _, rows = parse_report_csv(res.csv)
    for (h, lhs, lead, err), (h0, lhs0, lead0, err0) in zip(rows, res.report.rows):
        assert h == h0 and lhs == lhs0 and lead == lead0 and err == err0


def test_leading_term_dispatch():
    model = builtin_model("sphere")
    cfg = counting_cfg()
    assert abs(leading_term(cfg, model) - math.pi) <= 1e-9


def test_reduced_volume_rows_csv():
    rows = reduced_volume_rows("sphere", [1.0], "zero", shell_eps=1e-3)
    assert rows[0]["method"] == "level_set"
    assert abs(rows[0]["volume"] - math.pi) <= 1e-6
    assert rows[1]["method"].startswith("thin_shell")
    assert rows[0]["error_estimate"] <= 5e-3
    text = reduced_volume_csv(rows)
    assert text.splitlines()[0] == "c,volume,method,error_estimate"
