"""Command line entry point: ``hmhf <experiment> [flags]``.

Exit codes: 0 success, 2 a run diverged, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from hmhf.study import EXPERIMENTS, ConfigError, StudyConfig, StudyResult, run_study

EXIT_OK = 0
EXIT_DIVERGED = 2
EXIT_INVALID = 3

log = logging.getLogger("hmhf")


def format_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def to_csv(result: StudyResult) -> str:
    lines = []
    if result.comment is not None:
        lines.append(f"# {result.comment}")
    if result.header != ("r", "value"):
        lines.append(",".join(result.header))
    for row in result.rows:
        lines.append(",".join(format_float(row[k]) for k in result.header))
    return "\n".join(lines) + "\n"


def _json_value(x):
    if x is None:
        return None
    if isinstance(x, int) and not isinstance(x, bool):
        return x
    x = float(x)
    return None if not math.isfinite(x) else x


def to_json(result: StudyResult) -> str:
    rows = [{k: _json_value(row[k]) for k in result.header} for row in result.rows]
    return json.dumps(rows, indent=1) + "\n"


def read_config_file(path: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment; keys match flag names."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hmhf", description="Corotational harmonic map heat flow experiments.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="key=value file mirroring the flags; flags take precedence")
    p.add_argument("--degree", type=int, choices=(1, 2))
    p.add_argument("--cells", help="cell count or comma-separated list")
    p.add_argument("--tau", help="time step or comma-separated list")
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--u0", help="poly[:a] | linear[:a] | random[:E] | file:<path>")
    p.add_argument("--ref-cells", type=int, dest="ref_cells")
    p.add_argument("--ref-degree", type=int, choices=(1, 2), dest="ref_degree")
    p.add_argument("--ref-tau", type=float, dest="ref_tau")
    p.add_argument("--ref-scheme", choices=("euler", "bdf2"), dest="ref_scheme")
    p.add_argument("--no-cross-check", action="store_false", dest="cross_check", default=None)
    p.add_argument("--scheme", choices=("euler", "bdf2"))
    p.add_argument("--init", choices=("interp", "project"))
    p.add_argument("--quad-bulk", type=int, dest="quad_bulk")
    p.add_argument("--quad-first", type=int, dest="quad_first")
    p.add_argument("--monitor-threshold", type=float, dest="monitor_threshold")
    p.add_argument("--target", choices=("sin", "poly", "in-space"), help="project-test target")
    p.add_argument("--n-radial", type=int, dest="n_radial")
    p.add_argument("--n-angular", type=int, dest="n_angular")
    p.add_argument("--solution", help="solution dump to lift")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


_FILE_TYPES = {
    "degree": int,
    "t_end": float,
    "ref_cells": int,
    "ref_degree": int,
    "ref_tau": float,
    "quad_bulk": int,
    "quad_first": int,
    "monitor_threshold": float,
    "n_radial": int,
    "n_angular": int,
    "seed": int,
    "cross_check": lambda s: s.lower() in ("1", "true", "yes", "on"),
}


def make_config(args: argparse.Namespace) -> StudyConfig:
    values = {}
    if args.config:
        for key, raw in read_config_file(args.config).items():
            if key not in StudyConfig.__dataclass_fields__ or key == "experiment":
                raise ConfigError(f"unknown config key {key!r}")
            try:
                values[key] = _FILE_TYPES.get(key, str)(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    for key in StudyConfig.__dataclass_fields__:
        v = getattr(args, key, None)
        if v is not None and key != "experiment":
            values[key] = v
    return StudyConfig(experiment=args.experiment, **values)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = make_config(args)
        result = run_study(cfg)
    except (ValueError, OSError) as exc:  # ConfigError and invalid data alike
        print(f"hmhf: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = to_json(result) if cfg.format == "json" else to_csv(result)
    if cfg.out:
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if result.verdict:
        print(f"verdict: {result.verdict}", file=sys.stderr if not cfg.out else sys.stdout)
    return EXIT_DIVERGED if result.diverged else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
