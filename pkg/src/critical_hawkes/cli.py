"""Command-line front end: ``critical-hawkes {simulate,solve,verify,resolvent,report}``.

Exit codes: 0 success, 1 a verification check failed, 2 usage or
configuration error, 3 numerical failure (solver error, exhausted budget).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import jsonschema
import numpy as np

from . import io
from .analytics import LaplaceQuery, limit_solution, solve_gT
from .errors import BudgetExhausted, ConfigError, CriticalHawkesError, NumericalError, RegimeError
from .model import ModelSpec
from .primitives import REGIMES
from .resolvent import asymptotic_check, resolvent_volterra
from .simulator import DEFAULT_BUDGET, sample_scaling, simulate_counting
from .svg import write_loglog
from .verify import VerificationReport, run_regime_sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

_QUERY = {
    "type": "object",
    "required": ["thetas", "times"],
    "additionalProperties": False,
    "properties": {
        "thetas": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
        "times": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
    },
}
_TYPED = {"type": "object", "required": ["type"], "properties": {"type": {"type": "string"}}}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["model"],
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "required": ["mu", "kernel", "offspring"],
            "additionalProperties": False,
            "properties": {
                "mu": {"type": "number", "exclusiveMinimum": 0},
                "kernel": _TYPED,
                "offspring": _TYPED,
                "strict": {"type": "boolean"},
            },
        },
        "regime": {"enum": list(REGIMES) + [None]},
        "query": _QUERY,
        "probes": {"type": "array", "minItems": 1, "items": _QUERY},
        "T_list": {"type": "array", "items": {"type": "number", "minimum": 1}},
        "replicas": {"type": "integer", "minimum": 1},
        "horizon": {"type": "number", "minimum": 0},
        "grid_points": {"type": "integer", "minimum": 1},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "step": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "v_step": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "resolvent_step": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "resolvent_horizon": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "refine_min_cells": {"type": "integer", "minimum": 1},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "budget": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
        "tolerance_se": {"type": "number", "minimum": 0},
        "limit_tolerance_se": {"type": ["number", "null"], "minimum": 0},
    },
}

# keys that do not influence results and are left out of the config hash
_VOLATILE = ("out", "workers")


def load_config(path, overrides: dict | None = None) -> dict:
    """Read, merge flag overrides into, and validate a JSON config."""
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(exc.message, path) from None
    for i, q in enumerate(_queries_raw(cfg)):
        if len(q["thetas"]) != len(q["times"]):
            raise ConfigError("thetas and times must have the same length", f"query[{i}]")


def _queries_raw(cfg):
    if "probes" in cfg:
        return cfg["probes"]
    return [cfg["query"]] if "query" in cfg else []


def _queries(cfg):
    qs = [LaplaceQuery(q["thetas"], q["times"]) for q in _queries_raw(cfg)]
    if not qs:
        raise ConfigError("a 'query' or 'probes' entry is required", "query")
    return qs


def _spec(cfg) -> ModelSpec:
    return ModelSpec.from_dict(cfg["model"], regime=cfg.get("regime"), path="model")


def _seed(cfg):
    if "seed" not in cfg:
        raise ConfigError("a seed is required (config 'seed' or --seed)", "seed")
    return np.random.SeedSequence(int(cfg["seed"]))


def _out(cfg) -> Path:
    out = Path(cfg.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _hashed(cfg):
    return {k: v for k, v in cfg.items() if k not in _VOLATILE}


def _write_manifest(out: Path, cfg, spec, files, extra):
    files = [Path(f) for f in files]
    m = io.manifest(_hashed(cfg), spec.constants if spec is not None else None, files, extra)
    m["config"] = _hashed(cfg)
    return io.write_json(out / "manifest.json", m)


def _label(T):
    return f"{T:g}".replace(".", "p")


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg) -> int:
    spec = _spec(cfg)
    out = _out(cfg)
    seed = _seed(cfg)
    budget = int(cfg.get("budget", DEFAULT_BUDGET))
    workers = int(cfg.get("workers", 1))
    files = []
    extra = {"command": "simulate", "status": "ok"}
    try:
        if cfg.get("T_list"):
            qs = _queries(cfg)
            times = np.unique(np.concatenate([q.times for q in qs]))
            reps = int(cfg.get("replicas", 1000))
            for T, sd in zip(cfg["T_list"], seed.spawn(len(cfg["T_list"]))):
                s = sample_scaling(spec, T, times, reps, sd, budget=budget, workers=workers)
                p = s.to_csv(out / f"scaling_T{_label(T)}.csv")
                files += [p, Path(str(p) + ".json")]
        else:
            horizon = float(cfg.get("horizon", 1.0))
            path = simulate_counting(spec, horizon, int(cfg.get("grid_points", 101)), seed, budget)
            files.append(path.to_csv(out / "path.csv"))
            extra["total_events"] = path.total_events
    except BudgetExhausted as exc:
        extra.update(status="budget_exhausted", truncation=exc.report.to_dict(), replica=exc.replica)
        _write_manifest(out, cfg, spec, files, extra)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write_manifest(out, cfg, spec, files, extra)
    return EXIT_OK


def cmd_solve(cfg) -> int:
    spec = _spec(cfg)
    out = _out(cfg)
    _seed(cfg)
    grid = cfg.get("grid", {})
    qs = _queries(cfg)
    regime = spec.constants.regime
    results = {"regime": regime, "probes": []}
    files = []
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for i, q in enumerate(qs):
            entry = {"query": q.to_dict(), "prelimit": {}}
            for T in cfg.get("T_list", []):
                sol = solve_gT(q, T, spec, step=grid.get("step"))
                files.append(sol.to_csv(out / f"gT_p{i}_T{_label(T)}.csv"))
                files.append(Path(str(files[-1]) + ".json"))
                entry["prelimit"][f"{T:g}"] = sol.laplace_value
            kw = {"step": grid.get("v_step")} if regime == "alpha_eq_beta" else {}
            lim = limit_solution(q, spec, **kw)
            entry["limit"] = lim.laplace_value
            entry["residual_norm"] = lim.residual_norm
            if regime == "alpha_eq_beta" and not q.is_zero:
                cells = lim.meta["cells"]
                need = int(grid.get("refine_min_cells", 1000))
                if cells < need:
                    notes.append(f"probe {i}: v grid has {cells} cells (< {need}); refine v_step")
            files.append(lim.to_csv(out / f"limit_p{i}.csv"))
            files.append(Path(str(files[-1]) + ".json"))
            results["probes"].append(entry)
    notes += [str(w.message) for w in caught]
    results["warnings"] = notes
    files.append(io.write_json(out / "solve.json", results))
    for n in notes:
        print(f"warning: {n}", file=sys.stderr)
    _write_manifest(out, cfg, spec, files, {"command": "solve", "warnings": notes})
    return EXIT_OK


def cmd_verify(cfg) -> int:
    spec = _spec(cfg)
    out = _out(cfg)
    seed = _seed(cfg)
    qs = _queries(cfg)
    grid = cfg.get("grid", {})
    regime = cfg.get("regime") or spec.constants.regime
    report = VerificationReport(meta={"regime": regime})
    series = {}
    kw = {"step": grid.get("v_step")} if regime == "alpha_eq_beta" else {}
    for i, (q, sd) in enumerate(zip(qs, seed.spawn(len(qs)))):
        label = "theta=" + ",".join(f"{x:g}" for x in q.thetas)
        r = run_regime_sweep(spec, regime, q, cfg.get("T_list", []), int(cfg.get("replicas", 1000)),
                             sd, tolerance_se=float(cfg.get("tolerance_se", 3.0)),
                             workers=int(cfg.get("workers", 1)),
                             budget=int(cfg.get("budget", DEFAULT_BUDGET)), step=grid.get("step"),
                             limit_tolerance_se=cfg.get("limit_tolerance_se"), limit_kw=kw,
                             label=f"p{i}")
        report.extend(r)
        gaps = r.meta.get("limit_gaps", [])
        Ts = [T for T, _ in zip(cfg.get("T_list", []), gaps)]
        series[label if label not in series else f"{label} (p{i})"] = (Ts, gaps)
    files = [report.to_json(out / "report.json")]
    (out / "report.txt").write_text(report.to_text())
    files.append(out / "report.txt")
    files.append(write_loglog(out / "limit_gap.svg", series, title="gap to the limit transform",
                              xlabel="T", ylabel="|prediction - limit|"))
    sys.stdout.write(report.to_text())
    _write_manifest(out, cfg, spec, files, {"command": "verify", "passed": report.passed})
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_resolvent(cfg) -> int:
    spec = _spec(cfg)
    out = _out(cfg)
    _seed(cfg)
    grid = cfg.get("grid", {})
    horizon = grid.get("resolvent_horizon")
    if horizon is None:
        T_max = max(cfg.get("T_list", [1.0]))
        a = max((q.a for q in _queries(cfg)), default=1.0) if _queries_raw(cfg) else 1.0
        horizon = T_max * a
    step = grid.get("resolvent_step") or horizon / 16384.0
    table = resolvent_volterra(spec.kernel, horizon, step)
    files = [table.to_csv(out / "resolvent.csv")]
    files.append(Path(str(files[0]) + ".json"))
    asym = asymptotic_check(table, spec.constants)
    extra = {"command": "resolvent", "asymptotics": asym.__dict__}
    _write_manifest(out, cfg, spec, files, extra)
    return EXIT_OK


def cmd_report(out_dir) -> int:
    out = Path(out_dir)
    lines = [f"output directory: {out}"]
    man = out / "manifest.json"
    if not man.exists():
        raise ConfigError(f"no manifest.json in {out}")
    m = json.loads(man.read_text())
    lines.append(f"command: {m.get('command')}  backend: {m.get('backend')}  "
                 f"config sha256: {m.get('config_sha256', '')[:16]}")
    c = m.get("constants") or {}
    if c:
        lines.append("constants: " + ", ".join(f"{k}={c[k]}" for k in
                                                ("regime", "beta", "K", "alpha", "m_phi", "sigma_G2")
                                                if k in c))
    if (out / "solve.json").exists():
        s = json.loads((out / "solve.json").read_text())
        for i, p in enumerate(s["probes"]):
            pre = ", ".join(f"T={k}: {v:.6g}" for k, v in p["prelimit"].items())
            lines.append(f"probe {i} {p['query']}: limit {p['limit']:.8g}" + (f"; {pre}" if pre else ""))
    if (out / "report.txt").exists():
        lines.append((out / "report.txt").read_text().rstrip())
    for w in m.get("warnings", []) or []:
        lines.append(f"warning: {w}")
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="critical-hawkes",
                                description="Critical marked Hawkes processes: simulation, "
                                            "Laplace-functional solvers and limit checks.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "sample counting paths or scaled counts"),
                        ("solve", "solve the pre-limit and limit Laplace functionals"),
                        ("verify", "compare simulation with the solvers along a T sweep"),
                        ("resolvent", "tabulate R and I_R")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--seed", type=int, help="root seed (overrides the config)")
        s.add_argument("--workers", type=int, help="worker processes")
        s.add_argument("--out", help="output directory")
        s.add_argument("--budget", type=int, help="per-path particle budget")
    r = sub.add_parser("report", help="summarise an output directory")
    r.add_argument("--out", required=True, help="output directory of a previous run")
    return p


_COMMANDS = {"simulate": cmd_simulate, "solve": cmd_solve, "verify": cmd_verify,
             "resolvent": cmd_resolvent}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "report":
            return cmd_report(args.out)
        cfg = load_config(args.config, {"seed": args.seed, "workers": args.workers,
                                        "out": args.out, "budget": args.budget})
        return _COMMANDS[args.command](cfg)
    except (ConfigError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CriticalHawkesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
