"""Thin-client command line interface.

Every subcommand speaks to the HTTP service: against a remote base URL when
--server is given, otherwise against the in-process app through an ASGI
transport, so offline use needs no running server while still exercising the
same request/response path.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

from .config import ExperimentConfig, config_schema


def _request(server: str | None, method: str, path: str, payload=None, params=None):
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.request(method, path, json=payload, params=params)
    from .service.app import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://equiweyl.local",
                                     timeout=None) as client:
            return await client.request(method, path, json=payload, params=params)

    return asyncio.run(go())


def _fail(resp: httpx.Response):
    try:
        detail = resp.json().get("detail", resp.text)
    except Exception:
        detail = resp.text
    if isinstance(detail, list):
        detail = "\n".join(str(d) for d in detail)
    raise click.ClickException(f"service error {resp.status_code}: {detail}")


def _post(ctx, path, payload):
    resp = _request(ctx.obj.get("server"), "POST", path, payload=payload)
    if resp.status_code != 200:
        _fail(resp)
    return resp.json()


def _get(ctx, path, params=None):
    resp = _request(ctx.obj.get("server"), "GET", path, params=params)
    if resp.status_code != 200:
        _fail(resp)
    return resp.json()


@click.group()
@click.option("--server", envvar="EQUIWEYL_SERVER", default=None,
              help="Base URL of a running service; defaults to in-process execution.")
@click.pass_context
def main(ctx, server):
    """Numerical experiments on symmetry-reduced eigenvalue asymptotics."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Emit the full JSON catalog.")
@click.pass_context
def models(ctx, as_json):
    """List the built-in model catalog."""
    data = _get(ctx, "/models")
    if as_json:
        docs = [_get(ctx, f"/models/{m['name']}") for m in data["models"]]
        click.echo(json.dumps({"models": docs}, indent=2))
        return
    for m in data["models"]:
        click.echo(
            f"{m['name']}: L={m['length']:.6g} boundary={m['boundary']} "
            f"exact={m['exact_backend'] or '-'} chain={m['isotropy_chain_length']} "
            f"fixed_points={m['fixed_points']}"
        )


@main.command()
@click.argument("model")
@click.option("--k", default=0, show_default=True, help="Character index (Fourier mode).")
@click.option("--h", default=1.0, show_default=True, help="Semiclassical parameter.")
@click.option("--emax", required=True, type=float, help="Upper energy bound.")
@click.option("--backend", default="exact", show_default=True, type=click.Choice(["exact", "fd"]))
@click.option("--n", default=None, type=int, help="Grid size for the fd backend.")
@click.option("--out", default=None, type=click.Path(), help="Write CSV here instead of stdout.")
@click.pass_context
def spectrum(ctx, model, k, h, emax, backend, n, out):
    """Dump eigenvalues of one mode."""
    data = _post(ctx, "/spectrum", {
        "model": model, "k": k, "h": h, "e_max": emax, "backend": backend, "n": n,
    })
    lines = ["index,k,energy,provenance"]
    for row in data["rows"]:
        lines.append(f"{row['index']},{row['k']},{row['energy']:.17g},{row['provenance']}")
    text = "\n".join(lines) + "\n"
    for w in data["warnings"]:
        click.echo(f"warning: {w}", err=True)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("model")
@click.option("--c", "c_values", multiple=True, type=float, required=True,
              help="Energy level; repeat for a grid.")
@click.option("--potential", default="zero", show_default=True)
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def reduce(ctx, model, c_values, potential, out):
    """Reduced level-set volumes over a c-grid, with the shell cross-check."""
    data = _post(ctx, "/reduce", {
        "model": model, "c_values": list(c_values), "potential": potential,
    })
    if out:
        Path(out).write_text(data["csv"])
    else:
        click.echo(data["csv"], nl=False)


def _run_experiment(ctx, config_path, out, jobs, strict, seed, gnuplot, expect_trace):
    raw = json.loads(Path(config_path).read_text())
    if jobs is not None:
        raw["jobs"] = jobs
    if strict is not None:
        raw["strict"] = strict
    if seed is not None:
        raw["seed"] = seed
    raw.pop("out_dir", None)  # artifacts are written client-side
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except Exception as exc:
        raise click.ClickException(f"config invalid: {exc}") from exc
    if expect_trace != (cfg.theorem == "trace"):
        want = "trace" if expect_trace else "a windowed theorem"
        raise click.ClickException(f"config theorem {cfg.theorem!r} but this subcommand runs {want}")
    data = _post(ctx, "/experiments/run", {"config": json.loads(cfg.model_dump_json())})
    summary_text = json.dumps(data["summary"], sort_keys=True, indent=2) + "\n"
    if out:
        from .experiment import parse_report_csv, render_gnuplot_table

        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(data["csv"])
        (out_dir / "summary.json").write_text(summary_text)
        written = [out_dir / "report.csv", out_dir / "summary.json"]
        if gnuplot:
            _, _, _, rows = parse_report_csv(data["csv"])
            (out_dir / "error_vs_h.dat").write_text(
                render_gnuplot_table(rows, data["config_hash"])
            )
            written.append(out_dir / "error_vs_h.dat")
        click.echo("wrote " + " and ".join(str(p) for p in written))
    else:
        click.echo(data["csv"], nl=False)
        click.echo(summary_text, nl=False)


_run_options = [
    click.option("--config", "config_path", required=True, type=click.Path(exists=True)),
    click.option("--out", default=None, type=click.Path(), help="Output directory."),
    click.option("--jobs", default=None, type=int, help="Parallel mode evaluations."),
    click.option("--strict/--permissive", "strict", default=None,
                 help="Enforce or relax the admissible (delta, theta) region."),
    click.option("--seed", default=None, type=int, help="RNG seed for Monte Carlo checks."),
    click.option("--gnuplot", is_flag=True, help="Also write a gnuplot-ready error-vs-h table."),
]


def _with_run_options(fn):
    for opt in reversed(_run_options):
        fn = opt(fn)
    return fn


@main.command()
@_with_run_options
@click.pass_context
def weyl(ctx, config_path, out, jobs, strict, seed, gnuplot):
    """Run a windowed eigenvalue-count experiment from a config file."""
    _run_experiment(ctx, config_path, out, jobs, strict, seed, gnuplot, expect_trace=False)


@main.command()
@_with_run_options
@click.pass_context
def trace(ctx, config_path, out, jobs, strict, seed, gnuplot):
    """Run a smoothed-trace experiment from a config file."""
    _run_experiment(ctx, config_path, out, jobs, strict, seed, gnuplot, expect_trace=True)


@main.command()
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True),
              help="Previously written report.csv.")
@click.option("--final-rel-tol", default=None, type=float)
@click.pass_context
def fit(ctx, csv_path, final_rel_tol):
    """Re-fit convergence rates from an existing report CSV."""
    from .experiment import parse_report_csv

    theorem, model, params, rows = parse_report_csv(Path(csv_path).read_text())
    data = _post(ctx, "/fit", {
        "theorem": theorem or "", "model": model or "", "params": params,
        "rows": [list(r) for r in rows], "final_rel_tol": final_rel_tol,
    })
    click.echo(json.dumps(data["summary"], sort_keys=True, indent=2))


@main.command()
def schema():
    """Print the JSON schema of the experiment config."""
    click.echo(json.dumps(config_schema(), indent=2))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8710, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main(sys.argv[1:])
