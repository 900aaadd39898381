"""Command-line runner: ``declab list`` and ``declab run <config.json>``.

Exit codes: 0 when every check passes, 2 when a check fails, 1 on any
error (bad config, unknown experiment, numerical failure).
"""
from __future__ import annotations

import argparse
import copy
import csv
import difflib
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import ConfigError
from .experiments import EXPERIMENTS, ExperimentResult, to_jsonable, thread_cap, time_grid

EXIT_OK, EXIT_ERROR, EXIT_CHECK_FAILED = 0, 1, 2

_TIME_SCHEMA = {
    "type": "object",
    "properties": {
        "t_start": {"type": "number"},
        "t_end": {"type": "number"},
        "n_steps": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment", "seed"],
    "properties": {
        "experiment": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "time": _TIME_SCHEMA,
        "params": {"type": "object"},
        "tolerances": {"type": "object"},
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2}
_PARAM_OVERRIDES = {
    "N": {"type": "integer", "minimum": 1},
    "n_env": {"type": "integer", "minimum": 2},
    "n_points": {"type": "integer", "minimum": 2},
    "n_seeds": {"type": "integer", "minimum": 1},
    "n_trials": {"type": "integer", "minimum": 1},
    "n_partitions": {"type": "integer", "minimum": 1},
    "j": {"type": "integer", "minimum": 1},
    "a": _COMPLEX,
    "b": _COMPLEX,
    "observable": {"enum": ["x", "y", "z"]},
    "families": {"type": "array", "items": {"enum": ["gaussian", "lorentzian"]}, "minItems": 1},
    "spin_j": {
        "type": ["object", "null"],
        "required": ["g", "alpha", "beta"],
        "properties": {"g": {"type": "number"}, "alpha": _COMPLEX, "beta": _COMPLEX},
        "additionalProperties": False,
    },
    "expected_budget": {"type": ["integer", "null"]},
    "spacing": {"type": "number", "exclusiveMinimum": 0},
}
_COUPLING_DIST = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["uniform", "constant"]},
        "low": {"type": "number"},
        "high": {"type": "number"},
        "value": {"type": "number"},
    },
    "additionalProperties": False,
}


def _schema_of(value) -> dict:
    if isinstance(value, bool):
        return {"type": "boolean"}
    if isinstance(value, int):
        return {"type": "integer"}
    if isinstance(value, float):
        return {"type": "number"}
    if isinstance(value, str):
        return {"type": "string"}
    if isinstance(value, list):
        return {"type": "array", "items": _schema_of(value[0]) if value else {}}
    if isinstance(value, dict):
        return {
            "type": "object",
            "properties": {k: _schema_of(v) for k, v in value.items()},
            "additionalProperties": False,
        }
    return {}


def params_schema(name: str) -> dict:
    exp = EXPERIMENTS[name]
    props = {}
    for key, default in exp.params.items():
        if key == "coupling":
            props[key] = _COUPLING_DIST if isinstance(default, dict) else {"type": "number"}
        elif key in _PARAM_OVERRIDES:
            props[key] = _PARAM_OVERRIDES[key]
        else:
            props[key] = _schema_of(default)
    return {"type": "object", "properties": props, "additionalProperties": False}


def tolerances_schema(name: str) -> dict:
    keys = EXPERIMENTS[name].tolerances
    return {
        "type": "object",
        "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in keys},
        "additionalProperties": False,
    }


def _field(err: jsonschema.ValidationError, prefix=()) -> str:
    path = list(prefix) + list(err.absolute_path)
    return "/".join(str(p) for p in path) or "<root>"


def _validate(instance, schema, prefix=()) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = "; ".join(f"field '{_field(e, prefix)}': {e.message}" for e in errors)
        raise ConfigError(msgs)


def suggest(name: str) -> str:
    close = difflib.get_close_matches(name, list(EXPERIMENTS), n=1, cutoff=0.4)
    return f"; did you mean '{close[0]}'?" if close else f"; available: {', '.join(EXPERIMENTS)}"


def load_config(path) -> dict:
    """Parse and validate a config file, returning the resolved config.

    Raises
    ------
    ConfigError
        With the line/column of a JSON syntax error or the path of the
        offending field.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    """Validate ``raw`` and fill in experiment defaults."""
    _validate(raw, CONFIG_SCHEMA)
    name = raw["experiment"]
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment '{name}'{suggest(name)}")
    exp = EXPERIMENTS[name]
    _validate(raw.get("params", {}), params_schema(name), ("params",))
    _validate(raw.get("tolerances", {}), tolerances_schema(name), ("tolerances",))
    cfg = {
        "experiment": name,
        "seed": raw["seed"],
        "params": {**copy.deepcopy(exp.params), **copy.deepcopy(raw.get("params", {}))},
        "tolerances": {**exp.tolerances, **raw.get("tolerances", {})},
        "output": {"dir": raw.get("output", {}).get("dir", f"declab-out/{name}")},
    }
    if exp.time is not None:
        cfg["time"] = {**exp.time, **raw.get("time", {})}
        _check_time(cfg["time"])
    elif "time" in raw:
        raise ConfigError(f"field 'time': experiment '{name}' has no time grid")
    return cfg


def _check_time(spec: dict) -> None:
    if not spec["t_end"] > spec["t_start"]:
        raise ConfigError(f"field 'time/t_end': {spec['t_end']} must exceed t_start = {spec['t_start']}")


def run_config(cfg: dict) -> tuple[ExperimentResult, float]:
    exp = EXPERIMENTS[cfg["experiment"]]
    t = time_grid(cfg["time"]) if "time" in cfg else None
    start = time.perf_counter()
    result = exp.run(cfg["params"], cfg["seed"], t, cfg["tolerances"])
    return result, time.perf_counter() - start


def write_csv(path: Path, columns, rows) -> None:
    # repr gives the shortest round-tripping form with a '.' decimal regardless of locale
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in np.asarray(rows):
            w.writerow([repr(float(x)) for x in row])


def write_outputs(cfg: dict, result: ExperimentResult, elapsed: float) -> Path:
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    name = cfg["experiment"]
    files = []
    for table, data in result.tables.items():
        p = out / f"{name}_{table}.csv"
        write_csv(p, data.columns, data.rows)
        files.append(p.name)
    report = {
        "experiment": name,
        "version": __version__,
        "config": cfg,
        "passed": result.passed,
        "checks": {k: c.as_dict() for k, c in result.checks.items()},
        "summary": to_jsonable(result.summary),
        "artifacts": files,
        "timing_seconds": elapsed,
        "threads": thread_cap(),
    }
    rp = out / f"{name}_report.json"
    rp.write_text(json.dumps(report, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return rp


def _config_from_arg(arg: str) -> dict:
    # a bare experiment name runs its defaults with seed 0
    if Path(arg).is_file() or arg.endswith(".json"):
        return load_config(arg)
    if arg in EXPERIMENTS:
        return resolve_config({"experiment": arg, "seed": 0})
    raise ConfigError(f"unknown experiment '{arg}'{suggest(arg)}")


def list_experiments(stream=None) -> None:
    stream = stream or sys.stdout
    width = max(map(len, EXPERIMENTS))
    for name, exp in EXPERIMENTS.items():
        print(f"{name:<{width}}  {exp.description}", file=stream)


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 so that 2 stays reserved for failed checks
    def error(self, message):
        self.print_usage(sys.stderr)
        if "invalid choice" in message:
            bad = message.split("'")[1] if "'" in message else ""
            close = difflib.get_close_matches(bad, ["list", "run"], n=1, cutoff=0.4)
            if close:
                message += f"; did you mean '{close[0]}'?"
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="declab", description="Decoherence simulation lab.")
    ap.add_argument("--version", action="version", version=f"declab {__version__}")
    sub = ap.add_subparsers(dest="command")
    sub.add_parser("list", help="list shipped experiments")
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="path to a JSON config, or the name of a shipped experiment")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--t-end", type=float, dest="t_end", help="override time/t_end")
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = _parser().parse_args(argv)
    if args.command in (None, "list"):
        list_experiments()
        return EXIT_OK
    try:
        thread_cap()
        cfg = _config_from_arg(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg["seed"] = args.seed
        if args.out is not None:
            cfg["output"]["dir"] = args.out
        if args.t_end is not None:
            if "time" not in cfg:
                raise ConfigError(f"--t-end: experiment '{cfg['experiment']}' has no time grid")
            cfg["time"]["t_end"] = args.t_end
            _check_time(cfg["time"])
        result, elapsed = run_config(cfg)
        report = write_outputs(cfg, result, elapsed)
    except ConfigError as exc:
        print(f"declab: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # any failure inside an experiment is an error, not a check failure
        print(f"declab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for k, c in result.checks.items():
        print(f"{'PASS' if c.passed else 'FAIL'}  {k}  value={c.value:.6g} {c.relation} {c.threshold:.6g}")
    print(f"report: {report}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
