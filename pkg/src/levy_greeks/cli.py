"""Batch front end: JSON job configs in, delimited estimates out.

A job is a single JSON document naming the model, payoff, run settings
and requested Greeks; command-line flags may override its scalar
fields. Unknown config keys are hard errors so that typos cannot
silently change an experiment. Output is CSV or JSON with a fixed
column set, deterministic byte-for-byte for a given (config, seed),
which is why wall-clock timing is opt-in. The compare and convergence
commands also render diagnostic figures next to the output file.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, replace
from typing import Any, Sequence

from .estimator import (GreekEstimate, PriceEstimate, RunConfig, StatRequest,
                        estimate_requests)
from .model import (JumpMarks, ModelParams, NormalMarks, PointMassMarks,
                    UniformMarks)
from .oracles import fd_greeks_matrix
from .payoffs import ExerciseStyle, PayoffKind, PayoffSpec
from .simulate import GridSpec, derive_stream, simulate_path
from .weights import GammaVariant, GreekKind

__all__ = ["main", "load_job", "JobSpec", "ConfigError"]

COLUMNS = ["style", "greek", "value", "std_error", "ci_low", "ci_high",
           "n_paths", "grid_steps", "seed", "variant", "wall_time_ms"]
COMPARE_COLUMNS = COLUMNS + ["fd_value", "fd_std_error", "z_score"]
DUMP_COLUMNS = ["path_id", "t", "W", "X_left", "X_right", "X2"]

ALL_GREEKS = (GreekKind.DELTA, GreekKind.VEGA, GreekKind.RHO,
              GreekKind.THETA, GreekKind.GAMMA, GreekKind.ALPHA)

COMMANDS = ("price", "greeks", "compare", "convergence")


class ConfigError(Exception):
    """Invalid job configuration; message names the offending field."""


@dataclass(frozen=True)
class JobSpec:
    model: ModelParams
    payoff: PayoffSpec
    run: RunConfig
    greeks: tuple[GreekKind, ...]
    gamma_variant: GammaVariant
    output: str
    output_path: str | None
    paths_grid: tuple[int, ...]
    steps_grid: tuple[int, ...]


def _check_keys(obj: dict, allowed: Sequence[str], where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigError(f"unknown key '{prefix}{unknown[0]}'")


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ConfigError(f"missing required field '{where}.{key}'")
    return obj[key]


def _number(v: Any, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{name}' must be a number")
    return float(v)


def _integer(v: Any, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"'{name}' must be an integer")
    return v


def _boolean(v: Any, name: str) -> bool:
    if not isinstance(v, bool):
        raise ConfigError(f"'{name}' must be true or false")
    return v


def _enum_token(v: Any, choices: dict[str, Any], name: str) -> Any:
    if not isinstance(v, str) or v not in choices:
        options = "|".join(choices)
        raise ConfigError(f"'{name}' must be one of {options}")
    return choices[v]


def _parse_marks(obj: Any) -> JumpMarks:
    if not isinstance(obj, dict):
        raise ConfigError("'model.jump_marks' must be an object")
    kind = _require(obj, "type", "model.jump_marks")
    try:
        if kind == "normal":
            _check_keys(obj, ["type", "mean", "stddev"], "model.jump_marks")
            return NormalMarks(
                mean=_number(obj.get("mean", 0.0), "model.jump_marks.mean"),
                stddev=_number(obj.get("stddev", 1.0), "model.jump_marks.stddev"))
        if kind == "point_mass":
            _check_keys(obj, ["type", "value"], "model.jump_marks")
            return PointMassMarks(
                value=_number(obj.get("value", 1.0), "model.jump_marks.value"))
        if kind == "uniform":
            _check_keys(obj, ["type", "a", "b"], "model.jump_marks")
            return UniformMarks(a=_number(obj.get("a", -1.0), "model.jump_marks.a"),
                                b=_number(obj.get("b", 1.0), "model.jump_marks.b"))
    except ValueError as exc:
        raise ConfigError(f"model.jump_marks: {exc}") from exc
    raise ConfigError("'model.jump_marks.type' must be one of normal|point_mass|uniform")


def _parse_model(obj: Any) -> ModelParams:
    if not isinstance(obj, dict):
        raise ConfigError("'model' must be an object")
    allowed = ["x", "r", "sigma", "T", "gamma_tilde", "lam", "alpha",
               "jump_marks", "risk_neutral"]
    _check_keys(obj, allowed, "model")
    kwargs = dict(
        x=_number(_require(obj, "x", "model"), "model.x"),
        r=_number(_require(obj, "r", "model"), "model.r"),
        sigma=_number(_require(obj, "sigma", "model"), "model.sigma"),
        T=_number(_require(obj, "T", "model"), "model.T"),
        lam=_number(obj.get("lam", 0.0), "model.lam"),
        alpha=_number(obj.get("alpha", 0.0), "model.alpha"),
    )
    if "jump_marks" in obj:
        kwargs["jump_marks"] = _parse_marks(obj["jump_marks"])
    risk_neutral = _boolean(obj.get("risk_neutral", False), "model.risk_neutral")
    try:
        if risk_neutral:
            if "gamma_tilde" in obj:
                raise ConfigError(
                    "'model.gamma_tilde' conflicts with 'model.risk_neutral'")
            return ModelParams.risk_neutral(**kwargs)
        if "gamma_tilde" in obj:
            kwargs["gamma_tilde"] = _number(obj["gamma_tilde"], "model.gamma_tilde")
        return ModelParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc


def _parse_payoff(obj: Any) -> PayoffSpec:
    if not isinstance(obj, dict):
        raise ConfigError("'payoff' must be an object")
    _check_keys(obj, ["kind", "strike", "style"], "payoff")
    kind = _enum_token(_require(obj, "kind", "payoff"),
                       {k.value: k for k in PayoffKind}, "payoff.kind")
    style = _enum_token(obj.get("style", "european"),
                        {s.value: s for s in ExerciseStyle}, "payoff.style")
    strike = _number(obj.get("strike", 0.0), "payoff.strike")
    try:
        return PayoffSpec(kind, strike, style)
    except ValueError as exc:
        raise ConfigError(f"payoff: {exc}") from exc


def _parse_run(obj: Any) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("'run' must be an object")
    allowed = ["n_paths", "grid_steps", "master_seed", "antithetic",
               "confidence_level", "workers", "batch_size"]
    _check_keys(obj, allowed, "run")
    kwargs = dict(
        n_paths=_integer(_require(obj, "n_paths", "run"), "run.n_paths"),
        grid_steps=_integer(_require(obj, "grid_steps", "run"), "run.grid_steps"),
        master_seed=_integer(_require(obj, "master_seed", "run"), "run.master_seed"),
    )
    if "antithetic" in obj:
        kwargs["antithetic"] = _boolean(obj["antithetic"], "run.antithetic")
    if "confidence_level" in obj:
        kwargs["confidence_level"] = _number(obj["confidence_level"],
                                             "run.confidence_level")
    if "workers" in obj:
        kwargs["workers"] = _integer(obj["workers"], "run.workers")
    if "batch_size" in obj:
        kwargs["batch_size"] = _integer(obj["batch_size"], "run.batch_size")
    try:
        return RunConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"run: {exc}") from exc


def _parse_greeks(v: Any) -> tuple[GreekKind, ...]:
    if not isinstance(v, list):
        raise ConfigError("'greeks' must be a list")
    tokens = {g.value: g for g in GreekKind}
    out = []
    for item in v:
        out.append(_enum_token(item, tokens, "greeks"))
    return tuple(out)


def _parse_int_list(v: Any, name: str) -> tuple[int, ...]:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"'{name}' must be a non-empty list of integers")
    return tuple(_integer(item, name) for item in v)


def load_job(config: dict, command: str) -> JobSpec:
    """Parse and validate one job document for the given command."""
    if not isinstance(config, dict):
        raise ConfigError("config root must be an object")
    allowed = ["command", "model", "payoff", "run", "greeks", "gamma_variant",
               "output", "output_path", "convergence"]
    _check_keys(config, allowed, "")
    if "command" in config:
        declared = config["command"]
        if declared not in COMMANDS:
            raise ConfigError(f"'command' must be one of {'|'.join(COMMANDS)}")
        if declared != command:
            raise ConfigError(
                f"config 'command' is '{declared}' but '{command}' was invoked")

    model = _parse_model(_require(config, "model", ""))
    payoff = _parse_payoff(_require(config, "payoff", ""))
    run = _parse_run(_require(config, "run", ""))
    greeks = _parse_greeks(config["greeks"]) if "greeks" in config else ()
    variant = _enum_token(config.get("gamma_variant", "derived"),
                          {v.value: v for v in GammaVariant}, "gamma_variant")
    output = config.get("output", "csv")
    if output not in ("csv", "json"):
        raise ConfigError("'output' must be one of csv|json")
    output_path = config.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError("'output_path' must be a string")

    paths_grid: tuple[int, ...] = ()
    steps_grid: tuple[int, ...] = ()
    if "convergence" in config:
        if command != "convergence":
            raise ConfigError(
                "'convergence' section is only valid for the convergence command")
        conv = config["convergence"]
        if not isinstance(conv, dict):
            raise ConfigError("'convergence' must be an object")
        _check_keys(conv, ["paths_grid", "steps_grid"], "convergence")
        paths_grid = _parse_int_list(_require(conv, "paths_grid", "convergence"),
                                     "convergence.paths_grid")
        if "steps_grid" in conv:
            steps_grid = _parse_int_list(conv["steps_grid"],
                                         "convergence.steps_grid")
    elif command == "convergence":
        raise ConfigError("missing required field 'convergence'")
    if not steps_grid:
        steps_grid = (run.grid_steps,)

    return JobSpec(model=model, payoff=payoff, run=run, greeks=greeks,
                   gamma_variant=variant, output=output,
                   output_path=output_path, paths_grid=paths_grid,
                   steps_grid=steps_grid)


def _apply_overrides(job: JobSpec, args: argparse.Namespace) -> JobSpec:
    run = job.run
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.paths is not None:
        updates["n_paths"] = args.paths
    if args.steps is not None:
        updates["grid_steps"] = args.steps
    if args.workers is not None:
        updates["workers"] = args.workers
    try:
        if updates:
            run = replace(run, **updates)
    except ValueError as exc:
        raise ConfigError(f"run: {exc}") from exc
    variant = job.gamma_variant
    if args.gamma_variant is not None:
        variant = GammaVariant(args.gamma_variant)
    output = args.format or job.output
    output_path = args.out or job.output_path
    return replace(job, run=run, gamma_variant=variant, output=output,
                   output_path=output_path)


def _fmt17(v: float) -> str:
    return format(float(v), ".17g")


def _base_row(est: PriceEstimate | GreekEstimate, job: JobSpec,
              greek_label: str, theta_sign: str) -> dict[str, Any]:
    value = est.value
    lo = est.value - est.ci_half_width
    hi = est.value + est.ci_half_width
    if greek_label == GreekKind.THETA.value and theta_sign == "maturity":
        value = -value
        lo, hi = -hi, -lo
    return {
        "style": est.style.value,
        "greek": greek_label,
        "value": value,
        "std_error": est.std_error,
        "ci_low": lo,
        "ci_high": hi,
        "n_paths": est.n_paths,
        "grid_steps": job.run.grid_steps,
        "seed": est.seed,
        "variant": job.gamma_variant.value,
        "wall_time_ms": None,
    }


def _cmd_price(job: JobSpec, theta_sign: str) -> list[dict]:
    (est,) = estimate_requests(job.model, [StatRequest(job.payoff)], job.run)
    return [_base_row(est, job, "price", theta_sign)]


def _cmd_greeks(job: JobSpec, theta_sign: str) -> list[dict]:
    greeks = job.greeks or ALL_GREEKS
    requests = [StatRequest(job.payoff, g, job.gamma_variant) for g in greeks]
    ests = estimate_requests(job.model, requests, job.run)
    return [_base_row(est, job, g.value, theta_sign)
            for g, est in zip(greeks, ests)]


def _cmd_compare(job: JobSpec, theta_sign: str) -> list[dict]:
    greeks = job.greeks or ALL_GREEKS
    requests = [StatRequest(job.payoff, g, job.gamma_variant) for g in greeks]
    ests = estimate_requests(job.model, requests, job.run)
    fd = fd_greeks_matrix(job.model, [job.payoff], list(greeks), job.run)
    rows = []
    for g, est in zip(greeks, ests):
        ref = fd[(0, g)]
        combined = (est.std_error ** 2 + ref.std_error ** 2) ** 0.5
        z = (est.value - ref.value) / combined if combined > 0 else 0.0
        row = _base_row(est, job, g.value, theta_sign)
        fd_value = ref.value
        if g is GreekKind.THETA and theta_sign == "maturity":
            fd_value = -fd_value
        row["fd_value"] = fd_value
        row["fd_std_error"] = ref.std_error
        row["z_score"] = z
        rows.append(row)
    return rows


def _cmd_convergence(job: JobSpec, theta_sign: str) -> list[dict]:
    greeks = job.greeks or (GreekKind.DELTA,)
    rows = []
    for steps in job.steps_grid:
        for n in job.paths_grid:
            try:
                run = replace(job.run, n_paths=n, grid_steps=steps)
            except ValueError as exc:
                raise ConfigError(f"convergence: {exc}") from exc
            sub = replace(job, run=run)
            requests = [StatRequest(job.payoff)]
            requests += [StatRequest(job.payoff, g, job.gamma_variant)
                         for g in greeks]
            ests = estimate_requests(job.model, requests, run)
            labels = ["price"] + [g.value for g in greeks]
            for label, est in zip(labels, ests):
                rows.append(_base_row(est, sub, label, theta_sign))
    return rows


def _render_rows(rows: list[dict], columns: list[str], output: str,
                 wall_ms: int | None) -> str:
    for row in rows:
        row["wall_time_ms"] = wall_ms
    if output == "json":
        payload = [{col: row[col] for col in columns} for row in rows]
        return json.dumps({"rows": payload}, indent=2) + "\n"
    buf = []
    out = csv.writer(_ListWriter(buf), lineterminator="\n")
    out.writerow(columns)
    for row in rows:
        rendered = []
        for col in columns:
            v = row[col]
            if v is None:
                rendered.append("")
            elif isinstance(v, float):
                rendered.append(_fmt17(v))
            else:
                rendered.append(str(v))
        out.writerow(rendered)
    return "".join(buf)


class _ListWriter:
    def __init__(self, sink: list[str]):
        self._sink = sink

    def write(self, s: str) -> None:
        self._sink.append(s)


def _dump_paths(job: JobSpec, path: str, limit: int) -> None:
    grid = GridSpec(job.run.grid_steps)
    n_streams = (job.run.n_paths // 2 if job.run.antithetic
                 else job.run.n_paths)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(DUMP_COLUMNS)
        for i in range(min(limit, n_streams)):
            sample = simulate_path(job.model, grid,
                                   derive_stream(job.run.master_seed, i))
            for k in range(sample.t.size):
                out.writerow([i, _fmt17(sample.t[k]), _fmt17(sample.w[k]),
                              _fmt17(sample.x_left[k]), _fmt17(sample.x_right[k]),
                              _fmt17(sample.x2[k])])


def _figure_path(out_path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(out_path)
    return f"{stem}_{suffix}.png"


def _render_figures(command: str, rows: list[dict], job: JobSpec,
                    out_path: str) -> None:
    from . import figures

    if command == "compare":
        bars = [(f"{row['style']}/{row['greek']}", row["z_score"])
                for row in rows]
        figures.zscore_figure(bars, _figure_path(out_path, "zscores"))
    elif command == "convergence":
        series: dict[str, tuple[list[int], list[float]]] = {}
        for row in rows:
            key = f"{row['greek']} (M={row['grid_steps']})"
            ns, ses = series.setdefault(key, ([], []))
            ns.append(row["n_paths"])
            ses.append(row["std_error"])
        figures.convergence_figure(series, _figure_path(out_path, "convergence"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-greeks",
        description="Monte Carlo pricing and Malliavin-weight Greeks for an "
                    "exponential jump-diffusion.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("price", "estimate the option price"),
            ("greeks", "estimate the requested Greeks"),
            ("compare", "Greeks vs the finite-difference oracle with z-scores"),
            ("convergence", "sweep path/step grids and tabulate standard errors")):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", required=True, help="JSON job file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override run.master_seed")
        cmd.add_argument("--paths", type=int, default=None,
                         help="override run.n_paths")
        cmd.add_argument("--steps", type=int, default=None,
                         help="override run.grid_steps")
        cmd.add_argument("--workers", type=int, default=None,
                         help="override run.workers")
        cmd.add_argument("--out", default=None,
                         help="output file (default: config output_path or stdout)")
        cmd.add_argument("--format", choices=["csv", "json"], default=None,
                         help="override config 'output'")
        cmd.add_argument("--gamma-variant",
                         choices=[v.value for v in GammaVariant], default=None,
                         help="second-order weight arrangement for Asian gamma")
        cmd.add_argument("--theta-sign", choices=["decay", "maturity"],
                         default="decay",
                         help="report theta as -dV/dT (decay) or +dV/dT")
        cmd.add_argument("--timing", action="store_true",
                         help="fill wall_time_ms (costs byte-determinism)")
        cmd.add_argument("--no-plot", action="store_true",
                         help="skip figure rendering")
        cmd.add_argument("--dump-paths", default=None, metavar="FILE",
                         help="also write the first paths' nodes as CSV")
        cmd.add_argument("--dump-limit", type=int, default=10,
                         help="how many paths to dump (default 10)")
    return parser


_HANDLERS = {
    "price": _cmd_price,
    "greeks": _cmd_greeks,
    "compare": _cmd_compare,
    "convergence": _cmd_convergence,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        job = load_job(config, args.command)
        job = _apply_overrides(job, args)

        started = time.perf_counter()
        rows = _HANDLERS[args.command](job, args.theta_sign)
        wall_ms = (int(round((time.perf_counter() - started) * 1000.0))
                   if args.timing else None)

        columns = COMPARE_COLUMNS if args.command == "compare" else COLUMNS
        text = _render_rows(rows, columns, job.output, wall_ms)
        if job.output_path:
            with open(job.output_path, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)

        if (job.output_path and not args.no_plot
                and args.command in ("compare", "convergence")):
            _render_figures(args.command, rows, job, job.output_path)
        if args.dump_paths:
            _dump_paths(job, args.dump_paths, args.dump_limit)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
