"""Growth of the first-cell gradient for u0 = a r under mesh refinement.

With |a| > pi the gradient at the origin keeps growing as the mesh is
refined; with |a| < pi it saturates.
"""

import argparse

from hmhf.study import StudyConfig, run_study


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--amplitudes", default="pi/2,1.2pi")
    p.add_argument("--cells", default="32,64,128,256")
    p.add_argument("--tau", type=float, default=1e-4)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--monitor-threshold", type=float, default=1e6)
    args = p.parse_args(argv)

    print("amplitude,cells,max_grad_first_cell,final_energy,verdict")
    for amp in args.amplitudes.split(","):
        for n in args.cells.split(","):
            cfg = StudyConfig(experiment="blowup", u0=f"linear:{amp}", cells=[int(n)], tau=[args.tau],
                              t_end=args.t_end, monitor_threshold=args.monitor_threshold)
            res = run_study(cfg)
            peak = max(r["max_grad_first_cell"] for r in res.rows)
            print(f"{amp},{n},{peak:.6g},{res.rows[-1]['energy']:.6g},{res.verdict}")


if __name__ == "__main__":
    main()
