"""Spatial (P1, P2) and temporal convergence ladders for u0 = pi (1-r) r, T = 0.1.

Defaults are desk scale (tau = 1e-5 for the spatial ladders, a 1024-cell
fine mesh for the temporal one). Larger runs:

    python3 scripts/convergence_tables.py --tau 1e-6 --time-cells 16384
"""

import argparse
import sys

from hmhf.cli import to_csv
from hmhf.study import StudyConfig, run_study


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--tau", type=float, default=1e-5, help="time step of the spatial ladders")
    p.add_argument("--cells", default="2,4,8,16,32")
    p.add_argument("--ref-cells", type=int, default=1024)
    p.add_argument("--ref-scheme", choices=("euler", "bdf2"), default="euler")
    p.add_argument("--time-cells", type=int, default=1024)
    p.add_argument("--taus", default="1.25e-2,6.25e-3,3.125e-3,1.5625e-3,7.8125e-4")
    p.add_argument("--only", choices=("space-p1", "space-p2", "time"))
    args = p.parse_args(argv)

    studies = {
        "space-p1": StudyConfig(experiment="converge-space", degree=1, cells=args.cells, tau=[args.tau],
                                ref_cells=args.ref_cells, ref_scheme=args.ref_scheme),
        "space-p2": StudyConfig(experiment="converge-space", degree=2, cells=args.cells, tau=[args.tau],
                                ref_cells=args.ref_cells, ref_scheme=args.ref_scheme),
        "time": StudyConfig(experiment="converge-time", degree=1, cells=[args.time_cells], tau=args.taus),
    }
    for name, cfg in studies.items():
        if args.only and name != args.only:
            continue
        result = run_study(cfg)
        sys.stdout.write(f"# {name}\n" + to_csv(result))
        for w in result.warnings:
            sys.stdout.write(f"# warning: {w}\n")


if __name__ == "__main__":
    main()
