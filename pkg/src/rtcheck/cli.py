"""`rtc`: thin command-line client of the verification service.

By default every command drives an in-process instance of the HTTP service
(so the CLI works standalone); `--server` points it at a running `rtc
serve` instead. Configuration precedence: command-line flags, then the
config file, then defaults.

Exit codes for `check`: 0 all obligations proved, 1 some obligation
falsified, 2 verdicts unknown, 3 usage or input errors, 4 tool failures.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path
from typing import Any, Optional

import click
import httpx

EXIT_PROVED = 0
EXIT_FALSIFIED = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3
EXIT_TOOL = 4


def _load_config(path: Optional[str]) -> dict[str, str]:
    """Flat `key = value` configuration, `#` comments."""
    if not path:
        return {}
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise click.ClickException(f"cannot read config: {exc}")
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise click.ClickException(f"config line {line_no}: expected key = value")
        out[key.strip()] = value.strip().strip('"')
    return out


class Client:
    def __init__(self, server: Optional[str], verbose: bool):
        self.server = server
        self.verbose = verbose

    def call(self, method: str, path: str, payload: Optional[dict] = None) -> dict:
        async def go() -> httpx.Response:
            if self.server:
                transport = None
                base = self.server
            else:
                from .service import create_app

                transport = httpx.ASGITransport(app=create_app())
                base = "http://rtc.local"
            async with httpx.AsyncClient(
                transport=transport, base_url=base, timeout=3600.0
            ) as client:
                return await client.request(method, path, json=payload)

        if self.verbose:
            click.echo(f"-> {method} {path}", err=True)
        try:
            resp = asyncio.run(go())
        except httpx.HTTPError as exc:
            raise click.ClickException(f"service unreachable: {exc}")
        if resp.status_code >= 500:
            detail = _detail(resp)
            click.echo(f"error: {detail}", err=True)
            sys.exit(EXIT_TOOL)
        if resp.status_code >= 400:
            detail = _detail(resp)
            click.echo(f"error: {detail}", err=True)
            sys.exit(EXIT_USAGE)
        return resp.json()


def _detail(resp: httpx.Response) -> str:
    try:
        return resp.json().get("detail", resp.text)
    except Exception:
        return resp.text


def _read_source(path: str) -> str:
    p = Path(path)
    if not p.exists():
        click.echo(f"error: no such file: {path}", err=True)
        sys.exit(EXIT_USAGE)
    return p.read_text()


def _merged(ctx: click.Context, key: str, flag_value: Any, default: Any) -> Any:
    if flag_value is not None:
        return flag_value
    cfg: dict = ctx.obj["config"]
    if key in cfg:
        return cfg[key]
    return default


@click.group()
@click.option("--server", default=None, help="URL of a running service; default runs in-process.")
@click.option("--config", "config_path", default=None, type=click.Path(), help="key = value configuration file.")
@click.option("--format", "fmt", default=None, type=click.Choice(["human", "json"]), help="Output format.")
@click.option("--verbose", is_flag=True, help="Log requests and resolved configuration.")
@click.pass_context
def main(ctx: click.Context, server: Optional[str], config_path: Optional[str], fmt: Optional[str], verbose: bool) -> None:
    """Verification toolkit for timed synchronous models."""
    config = _load_config(config_path)
    ctx.obj = {
        "config": config,
        "client": Client(server or config.get("server"), verbose),
        "format": fmt or config.get("format", "human"),
        "verbose": verbose,
    }
    if verbose and config:
        click.echo(f"config: {config}", err=True)


def _emit_output(ctx: click.Context, data: dict, human: str) -> None:
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(data, indent=2))
    else:
        click.echo(human)


@main.command()
@click.argument("model", type=str)
@click.option("--engine", default=None, type=click.Choice(["explicit", "bmc", "kind"]))
@click.option("-k", "--bound", "bound", default=None, type=int, help="Unrolling / induction depth.")
@click.option("--horizon", default=None, type=int, help="Explicit-engine horizon.")
@click.option("--solver", default=None, help="Solver command, e.g. 'z3 -in'; default is the bundled solver.")
@click.option("--time-grid", default=None, help="Comma-separated time deltas, e.g. '5,10'.")
@click.option("--grid", "grids", multiple=True, help="Value grid for a free variable: name=v1,v2,...")
@click.option("--lemma", "lemmas", multiple=True, help="Auxiliary lemma expression (provable, then assumed).")
@click.option("--unsafe-weak-assumptions", is_flag=True, help="Use the unordered assumption rule (unsound under connection cycles; for demonstration).")
@click.option("--strong-assumptions", is_flag=True, help="Discharge assumptions from system assumptions only.")
@click.option("--order", default=None, help="Comma-separated subcomponent ordering.")
@click.option("--pattern-style", default=None, type=click.Choice(["filter", "calendar"]))
@click.pass_context
def check(ctx, model, engine, bound, horizon, solver, time_grid, grids, lemmas,
          unsafe_weak_assumptions, strong_assumptions, order, pattern_style):
    """Generate and discharge all proof obligations of MODEL."""
    source = _read_source(model)
    rule = "ordered"
    if unsafe_weak_assumptions:
        rule = "unordered"
    if strong_assumptions:
        rule = "strong"
    grid_map = {}
    for spec in grids:
        name, sep, vals = spec.partition("=")
        if not sep:
            raise click.ClickException(f"bad --grid {spec!r}; expected name=v1,v2")
        grid_map[name.strip()] = [v.strip() for v in vals.split(",") if v.strip()]
    tg = _merged(ctx, "time_grid", time_grid, "")
    payload = {
        "source": source,
        "engine": _merged(ctx, "engine", engine, "kind"),
        "k": int(_merged(ctx, "k", bound, 8)),
        "horizon": horizon,
        "solver": _merged(ctx, "solver", solver, None),
        "time_grid": [g.strip() for g in str(tg).split(",") if g.strip()],
        "grids": grid_map,
        "lemmas": list(lemmas),
        "assumption_rule": rule,
        "order": [o.strip() for o in order.split(",")] if order else None,
        "pattern_style": _merged(ctx, "pattern_style", pattern_style, "filter"),
    }
    if ctx.obj["verbose"]:
        click.echo(f"resolved: engine={payload['engine']} k={payload['k']} "
                   f"solver={payload['solver'] or 'bundled'}", err=True)
    data = ctx.obj["client"].call("POST", "/check", payload)
    lines = []
    for ob in data["obligations"]:
        mark = {"proved": "ok ", "falsified": "FAIL", "unknown": "?   "}[ob["verdict"]]
        extra = ""
        if ob["verdict"] == "proved":
            extra = f" (k={ob['bound']})"
        elif ob["verdict"] == "falsified":
            extra = f" (counterexample at step {ob['counterexample']['failed_step']})"
        elif ob.get("diagnostics"):
            extra = f" ({ob['diagnostics']})"
        lines.append(f"  {mark} [{ob['rule']}] {ob['name']}{extra}")
    human = "\n".join(lines + [f"verdict: {data['verdict']} ({data['elapsed']:.1f}s)"])
    _emit_output(ctx, data, human)
    sys.exit(data["exit_code"])


@main.command()
@click.argument("model", type=str)
@click.option("--steps", default=10, type=int)
@click.option("--inputs", default=None, help="JSON object of per-step input lists.")
@click.option("--trace", "trace_path", default=None, type=click.Path(), help="Validate this trace JSON file instead of stepping.")
@click.option("--pattern-style", default="calendar", type=click.Choice(["filter", "calendar"]))
@click.pass_context
def simulate(ctx, model, steps, inputs, trace_path, pattern_style):
    """Step MODEL and print the resulting timed trace."""
    payload = {
        "source": _read_source(model),
        "steps": steps,
        "pattern_style": pattern_style,
    }
    if inputs:
        try:
            payload["inputs"] = json.loads(inputs)
        except json.JSONDecodeError as exc:
            raise click.ClickException(f"bad --inputs JSON: {exc}")
    if trace_path:
        payload["trace"] = json.loads(Path(trace_path).read_text())
    data = ctx.obj["client"].call("POST", "/simulate", payload)
    if not data["ok"]:
        human = (
            f"inadmissible at step {data['step']}: {data['constraint']}"
        )
        _emit_output(ctx, data, human)
        sys.exit(EXIT_FALSIFIED)
    lines = [json.dumps(data["trace"], indent=2)]
    for p in data["properties"]:
        status = "holds" if p["holds"] else f"fails at step {p['failed_step']}"
        lines.append(f"property {p['name']}: {status}")
    _emit_output(ctx, data, "\n".join(lines))


@main.command()
@click.argument("model", type=str, required=False)
@click.option("--pattern", default=None, help="Pattern phrase to lower.")
@click.option("--mode", default="core", type=click.Choice(["observer", "constraint", "side-condition", "core", "smt"]))
@click.option("--constraint-style", default="filter", type=click.Choice(["filter", "calendar"]))
@click.option("--smt-mode", default="bmc", type=click.Choice(["bmc", "kinduction"]))
@click.option("-k", "--bound", default=3, type=int)
@click.option("--time-grid", default="", help="Comma-separated time deltas.")
@click.pass_context
def emit(ctx, model, pattern, mode, constraint_style, smt_mode, bound, time_grid):
    """Print pattern lowerings, core-language text, or solver scripts."""
    payload = {
        "source": _read_source(model) if model else None,
        "pattern": pattern,
        "mode": mode,
        "constraint_style": constraint_style,
        "smt_mode": smt_mode,
        "k": bound,
        "time_grid": [g.strip() for g in time_grid.split(",") if g.strip()],
    }
    data = ctx.obj["client"].call("POST", "/emit", payload)
    _emit_output(ctx, data, data["text"].rstrip("\n"))


@main.command()
@click.argument("model", type=str)
@click.option("--pattern-style", default="filter", type=click.Choice(["filter", "calendar"]))
@click.pass_context
def compose(ctx, model, pattern_style):
    """Flatten a system model into a single monolithic program."""
    payload = {"source": _read_source(model), "pattern_style": pattern_style}
    data = ctx.obj["client"].call("POST", "/compose", payload)
    human = data["text"] + f'\n// top-level property: {data["property"]}'
    _emit_output(ctx, data, human)


@main.command()
@click.argument("suite", type=str)
@click.option("--seed", default=0, type=int)
@click.option("--count", default=None, type=int, help="Random checks for sampled suites.")
@click.option("--pairs", default=None, type=int, help="Program/property pairs for engine agreement.")
@click.option("-k", "--bound", default=None, type=int)
@click.option("--solver", default=None)
@click.pass_context
def oracle(ctx, suite, seed, count, pairs, bound, solver):
    """Run a verification suite (observer-equivalence, constraint-equivalence,
    relaxed-inclusion, engine-agreement)."""
    payload = {
        "suite": suite,
        "seed": seed,
        "count": count,
        "pairs": pairs,
        "bound": bound,
        "solver": solver,
    }
    data = ctx.obj["client"].call("POST", "/oracle", payload)
    status = "ok" if data["passed"] else f"{len(data['discrepancies'])} discrepancies"
    human_lines = [
        f"suite {data['suite']}: {data['checked']} checks, {status} "
        f"({data['elapsed']:.1f}s, seed {data['seed']})"
    ]
    human_lines += [f"  {d}" for d in data["discrepancies"][:10]]
    _emit_output(ctx, data, "\n".join(human_lines))
    if not data["passed"]:
        sys.exit(EXIT_FALSIFIED)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host: str, port: int) -> None:
    """Run the verification service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
