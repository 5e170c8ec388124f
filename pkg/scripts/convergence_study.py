"""Adaptive vs non-adaptive error and cost over n, written to results/.

    python scripts/convergence_study.py --reps 100000 --workers 4
"""

import argparse
import os
import warnings

from pathsde.coefficients import ModelParams, normalize
from pathsde.gaussian_model import VarianceTable
from pathsde.harness import ExperimentConfig, cost_profile, fit_log, fit_power, run_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max-log2", type=int, default=12)
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    params = ModelParams()
    cs = normalize(params)
    vt = VarianceTable(cs)
    n_list = [2**k for k in range(4, args.n_max_log2 + 1)]
    runs = [("adaptive", 2.0), ("interp", 1.0), ("interp", 2.0)]
    # euler needs tau1 on its grid: n a multiple of T / tau1 = 3
    euler_n = [3 * 2**k for k in range(2, min(args.n_max_log2, 10))]

    for scheme, r in runs + [("euler", 1.0)]:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            cfg = ExperimentConfig(
                scheme=scheme,
                r=r,
                n_list=euler_n if scheme == "euler" else n_list,
                replications=args.reps,
                worker_count=args.workers,
                params=params,
                output=os.path.join(args.out, f"{scheme}_r{r:g}.csv"),
            )
        rows = run_convergence(cfg, cs, vt)
        power = fit_power(rows)
        logf = fit_log(rows, params.p)
        print(
            f"{scheme:8s} r={r:g}: power slope {power.params['slope']:+.4f} (resid {power.residual:.3f}), "
            f"log-model c {logf.params['c']:.4f} (resid {logf.residual:.3f})"
        )
        if scheme == "adaptive":
            for c in cost_profile(cfg, rows, cs, vt):
                print(f"    n={c.n:5d} cost/n {c.cost_over_n:.4f} +- {c.ci / c.n:.4f}  max level {c.max_level}  bound {c.bound:.4f}")


if __name__ == "__main__":
    main()
