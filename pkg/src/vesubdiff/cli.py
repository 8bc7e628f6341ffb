"""Command-line front end.

    vesubdiff sweep --config exp.ini --out results/ [--jobs K]
    vesubdiff check [--out results/]
    vesubdiff solve --config exp.ini --out results/

Config files are INI documents; every section describes one experiment.  A
file without any section header is read as a single experiment.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError
from .harness import (ExperimentConfig, build_problem, report_json, run_invariant_suite,
                      run_sweep, solve_problem)

log = logging.getLogger("vesubdiff")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INVARIANT = 0, 1, 2, 3

_INT_KEYS = {"example", "levels", "N", "J", "d"}
_FLOAT_KEYS = {"alpha0", "alphaT", "r", "T", "mu", "w1", "w2"}
_STR_KEYS = {"axis", "name"}
_AXIS_ALIASES = {"time": "time", "temporal": "time", "space": "space", "spatial": "space"}
DEFAULT_SOLVE_N = 128


def _coerce(key, raw):
    try:
        if key in _INT_KEYS:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r}", key) from None
    if key == "axis":
        if raw.lower() not in _AXIS_ALIASES:
            raise ConfigError(f"must be 'time' or 'space', got {raw!r}", key)
        return _AXIS_ALIASES[raw.lower()]
    return raw


def _section_to_config(name, section) -> ExperimentConfig:
    known = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS
    lookup = {k.lower(): k for k in known}
    kwargs = {}
    for raw_key, raw in section.items():
        key = lookup.get(raw_key.lower())
        if key is None:
            raise ConfigError(f"unknown key in section [{name}]", raw_key)
        kwargs[key] = _coerce(key, raw.strip())
    for required in ("example", "alpha0"):
        if required not in kwargs:
            raise ConfigError(f"missing from section [{name}]", required)
    kwargs.setdefault("name", name)
    return ExperimentConfig(**kwargs)


def parse_config(path) -> list[ExperimentConfig]:
    """Read an experiment file into validated configs, defaults filled in."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such file: {path}", "config")
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        try:
            parser.read_string(text, source=str(path))
        except configparser.MissingSectionHeaderError:
            parser.read_string("[experiment]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}", "config") from None
    sections = parser.sections()
    if not sections:
        raise ConfigError("no experiments defined", "config")
    return [_section_to_config(s, parser[s]) for s in sections]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser():
    p = _Parser(prog="vesubdiff", description="L1 / graded-mesh solver for "
                "variable-exponent subdiffusion and its convergence experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sw = sub.add_parser("sweep", help="run convergence ladders and write rate tables")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    ck = sub.add_parser("check", help="run the invariant suite")
    ck.add_argument("--out", default=None)

    so = sub.add_parser("solve", help="solve one problem per config section")
    so.add_argument("--config", required=True)
    so.add_argument("--out", required=True)
    return p


def _cmd_sweep(args) -> int:
    configs = parse_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for cfg in configs:
        log.info("sweep %s: %s ladder %s", cfg.name, cfg.axis, cfg.ladder())
        table = run_sweep(cfg, jobs=max(1, args.jobs))
        stem = cfg.file_stem()
        (out / f"{stem}.csv").write_text(table.to_csv(), encoding="utf-8")
        (out / f"{stem}.md").write_text(table.to_markdown(), encoding="utf-8")
        print(table.to_markdown())
    return EXIT_OK


def _cmd_check(args) -> int:
    report = run_invariant_suite()
    text = report_json(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "invariants.json").write_text(text + "\n", encoding="utf-8")
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  {c['value']:.3e}")
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def _cmd_solve(args) -> int:
    configs = parse_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for cfg in configs:
        N = cfg.N if cfg.N is not None else DEFAULT_SOLVE_N
        J = cfg.J if cfg.J is not None else 32
        hist = solve_problem(build_problem(cfg, N, J))
        grid = hist.grid
        cols = np.column_stack([grid.nodes.reshape(grid.m, -1), hist.final])
        header = ("x," if grid.d == 1 else "x,y,") + "u"
        lines = [header] + [",".join(f"{v:.17g}" for v in row) for row in cols]
        path = out / f"{cfg.file_stem()}_N{N}_J{J}_solution.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"sweep": _cmd_sweep, "check": _cmd_check, "solve": _cmd_solve}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
