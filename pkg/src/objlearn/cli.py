"""Command-line interface.

Subcommands::

    objlearn run --config CONFIG.json
    objlearn parse-check {tntp,tsplib} FILE [--zone-threshold N]
    objlearn project --set {simplex,box,l2ball} --vector=1.2,0.4 [--lo=...] [--hi=...] [--radius R]
    objlearn lp-solve FILE.json [--method {simplex,highs}]
    objlearn slope LEDGER.csv --window 50,500

Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
run fails.

Run configuration
-----------------
A JSON object with exactly these keys (only ``problem`` and ``learner``
are required)::

    problem          "knapsack-lp" | "knapsack-ip" | "shortest-path" | "pctsp"
    learner          "mwu" | "ogd-fixed" | "ogd-dynamic" | "lp-ftl"
    seed             integer, default 0
    replications     integer, default 1
    checkpoints      list of rounds for the summary, default [5, 50, 500]
    output_dir       directory for the results, default "objlearn-out"
    generator        object of generator settings (see below)
    learner_options  object; OGD accepts "G": "K", "K^2" or a number
    plot_svg         boolean, also write plot_<rep>.svg, default false

Generator settings per problem:

* knapsack-*: ``n``, ``T``, ``suboptimality_eps``
* shortest-path: ``T``, ``schedule`` (``kind``, ``bottleneck_fraction``,
  ``abrupt_factor``), ``grid_rows``, ``grid_cols``, ``network_file``,
  ``zone_threshold``
* pctsp: ``node_count``, ``coord_range``, ``revenue_scale``,
  ``cost_jitter``, ``revenue_jitter``, ``T``, ``coords``, ``prizes``,
  ``instance_file``

Unknown keys anywhere are errors.

``lp-solve`` reads ``{"c": [...], "ub_lhs": [[...]], "ub_rhs": [...],
"eq_lhs": ..., "eq_rhs": ..., "lower": ..., "upper": ...}`` and minimizes
``c.x``.  Omitted bounds default to ``x >= 0``; ``null`` entries in
``lower``/``upper`` mean unbounded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as oio
from .experiments import (KnapsackGenConfig, PctspGenConfig, SpGenConfig, convergence_slope,
                          learner_factory, problem_bounds, run_replicated)
from .lp import DenseLp, solve_lp
from .projections import Box, L2Ball, UnitSimplex

PROBLEMS = ("knapsack-lp", "knapsack-ip", "shortest-path", "pctsp")
CONFIG_KEYS = {"problem", "learner", "seed", "replications", "checkpoints", "output_dir",
               "generator", "learner_options", "plot_svg"}
LEARNER_OPTION_KEYS = {"G"}
GENERATOR_KEYS = {
    "knapsack": {"n", "T", "suboptimality_eps"},
    "shortest-path": {"T", "schedule", "grid_rows", "grid_cols", "network_file",
                      "zone_threshold"},
    "pctsp": {"node_count", "coord_range", "revenue_scale", "cost_jitter", "revenue_jitter",
              "T", "coords", "prizes", "instance_file"},
}
SCHEDULE_KEYS = {"kind", "bottleneck_fraction", "abrupt_factor"}


class ConfigError(ValueError):
    """Invalid configuration or command-line input (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _reject_unknown(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return validate_config(doc)


def validate_config(doc) -> dict:
    """Fill defaults and check keys, types and learner/problem compatibility."""
    _reject_unknown(doc, CONFIG_KEYS, "config")
    for key in ("problem", "learner"):
        if key not in doc:
            raise ConfigError(f"config lacks {key!r}")
    if doc["problem"] not in PROBLEMS:
        raise ConfigError(f"unknown problem {doc['problem']!r}; choose from {', '.join(PROBLEMS)}")
    cfg = {"seed": 0, "replications": 1, "checkpoints": [5, 50, 500],
           "output_dir": "objlearn-out", "generator": {}, "learner_options": {},
           "plot_svg": False, **doc}
    for key in ("seed", "replications"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool):
            raise ConfigError(f"{key} must be an integer")
    if cfg["replications"] < 1:
        raise ConfigError("replications must be at least 1")
    if (not isinstance(cfg["checkpoints"], list)
            or not all(isinstance(c, int) and c >= 1 for c in cfg["checkpoints"])):
        raise ConfigError("checkpoints must be a list of positive integers")
    family = "knapsack" if cfg["problem"].startswith("knapsack") else cfg["problem"]
    _reject_unknown(cfg["generator"], GENERATOR_KEYS[family], "generator")
    if "schedule" in cfg["generator"]:
        _reject_unknown(cfg["generator"]["schedule"], SCHEDULE_KEYS, "generator.schedule")
    _reject_unknown(cfg["learner_options"], LEARNER_OPTION_KEYS, "learner_options")
    try:
        gen = build_generator(cfg)
        learner_factory(gen, cfg["learner"], **cfg["learner_options"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def build_generator(cfg: dict):
    common = {"seed": cfg["seed"], "replications": cfg["replications"]}
    problem, g = cfg["problem"], dict(cfg["generator"])
    if problem.startswith("knapsack"):
        return KnapsackGenConfig(divisible=problem == "knapsack-lp", **g, **common)
    if problem == "shortest-path":
        return SpGenConfig(**g, **common)
    return PctspGenConfig(**g, **common)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    gen = build_generator(cfg)
    factory = learner_factory(gen, cfg["learner"], **cfg["learner_options"])
    checkpoints = [c for c in cfg["checkpoints"] if c <= gen.T]
    if not checkpoints:
        raise ConfigError(f"no checkpoint lies within the horizon T={gen.T}")
    result = run_replicated(gen, factory, checkpoints)
    out = cfg["output_dir"]
    oio.ensure_dir(out)
    bound_kind = "mwu" if cfg["learner"] == "mwu" else "ogd"
    for rep, ledger in enumerate(result.ledgers):
        oio.emit_ledger_csv(ledger, os.path.join(out, f"ledger_{rep}.csv"))
        if cfg["learner"] == "lp-ftl":
            continue
        n = len(ledger.played_objectives[0])
        bounds = problem_bounds(gen, n, cfg["learner"])
        bound = bounds.mwu_bound if bound_kind == "mwu" else bounds.ogd_bound
        oio.emit_plot_csv(ledger, os.path.join(out, f"plot_{rep}.csv"), bound)
        if cfg["plot_svg"]:
            oio.emit_plot_svg(ledger, os.path.join(out, f"plot_{rep}.svg"), bound)
    oio.emit_summary_json(result.table, os.path.join(out, "summary.json"),
                          config=cfg, seed=cfg["seed"])
    print(result.table.format())
    return 0


def cmd_parse_check(args) -> int:
    try:
        with open(args.file) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.file}: {exc.strerror or exc}") from None
    try:
        if args.format == "tntp":
            net = oio.parse_tntp(text, zone_threshold=args.zone_threshold)
            print(f"nodes={net.node_count} arcs={net.arc_count}")
        else:
            inst = oio.parse_tsplib_lite(text)
            print(f"name={inst.name or '-'} dimension={inst.dimension} depot={inst.depot} "
                  f"total_prize={inst.prizes.sum():.12g}")
    except oio.ParseError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 2
    return 0


def _floats(text, what):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"{what} must be comma-separated numbers, got {text!r}") from None


def cmd_project(args) -> int:
    v = _floats(args.vector, "--vector")
    if args.set == "simplex":
        F = UnitSimplex(len(v))
    elif args.set == "box":
        if args.lo is None or args.hi is None:
            raise ConfigError("--set box needs --lo and --hi")
        F = Box(_floats(args.lo, "--lo"), _floats(args.hi, "--hi"))
    else:
        centre = np.zeros(len(v)) if args.center is None else _floats(args.center, "--center")
        F = L2Ball(centre, args.radius)
    try:
        x = F.project(v)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(",".join(f"{c:.12g}" for c in x))
    return 0


LP_KEYS = {"c", "ub_lhs", "ub_rhs", "eq_lhs", "eq_rhs", "lower", "upper"}


def cmd_lp_solve(args) -> int:
    try:
        with open(args.file) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"LP file not found: {args.file}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.file}: invalid JSON ({exc})") from None
    _reject_unknown(doc, LP_KEYS, "LP file")
    if "c" not in doc:
        raise ConfigError("LP file lacks 'c'")
    n = len(doc["c"])

    def bound(key, default, unbounded):
        v = doc.get(key)
        if v is None:
            return np.full(n, default)
        return np.array([unbounded if b is None else b for b in v], dtype=float)

    try:
        lp = DenseLp(np.asarray(doc["c"], dtype=float),
                     ub_lhs=doc.get("ub_lhs"), ub_rhs=doc.get("ub_rhs"),
                     eq_lhs=doc.get("eq_lhs"), eq_rhs=doc.get("eq_rhs"),
                     var_lower=bound("lower", 0.0, -np.inf),
                     var_upper=bound("upper", np.inf, np.inf))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{args.file}: {exc}") from None
    sol = solve_lp(lp, method=args.method)
    print(f"status={sol.status.value}")
    if sol.optimal:
        print(f"value={sol.value:.12g}")
        print("x=" + ",".join(f"{v:.12g}" for v in sol.point))
    return 0


def cmd_slope(args) -> int:
    try:
        ledger = oio.load_ledger_csv(args.ledger)
    except FileNotFoundError:
        raise ConfigError(f"ledger file not found: {args.ledger}") from None
    lo, hi = (int(v) for v in _floats(args.window, "--window"))
    try:
        print(f"{convergence_slope(ledger, (lo, hi)):.12g}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="objlearn", description="Learn linear objectives from observed decisions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a replicated experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("parse-check", help="parse a TNTP network or TSPLIB-lite instance")
    c.add_argument("format", choices=("tntp", "tsplib"))
    c.add_argument("file")
    c.add_argument("--zone-threshold", type=int, default=0)
    c.set_defaults(func=cmd_parse_check)

    j = sub.add_parser("project", help="Euclidean projection onto a convex set")
    j.add_argument("--set", required=True, choices=("simplex", "box", "l2ball"))
    j.add_argument("--vector", required=True)
    j.add_argument("--lo")
    j.add_argument("--hi")
    j.add_argument("--center")
    j.add_argument("--radius", type=float, default=1.0)
    j.set_defaults(func=cmd_project)

    s = sub.add_parser("lp-solve", help="solve a small LP given as JSON")
    s.add_argument("file")
    s.add_argument("--method", choices=("simplex", "highs"), default="simplex")
    s.set_defaults(func=cmd_lp_solve)

    g = sub.add_parser("slope", help="log-log slope of a ledger's running average")
    g.add_argument("ledger")
    g.add_argument("--window", required=True, help="first,last round, e.g. 50,500")
    g.set_defaults(func=cmd_slope)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"objlearn: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # any failure inside a run
        print(f"objlearn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
