"""Symmetrisation bound against the explicit constant curve C ln^(-2/p)(12 n^3).

Checks every n up to --dense and a log-spaced grid up to 2^--n-max-log2.
Both sides decrease in n, so bound(n_{k+1}) >= curve(n_k) on consecutive
grid points covers the gaps.
"""

import argparse

import numpy as np

from pathsde.coefficients import ModelParams, normalize
from pathsde.oracles import constant_curve, constant_threshold, slope_extrema, symmetrization_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dense", type=int, default=64)
    ap.add_argument("--n-max-log2", type=int, default=16)
    ap.add_argument("--per-octave", type=int, default=4)
    args = ap.parse_args()

    cs = normalize(ModelParams())
    alpha, beta = slope_extrema(cs)
    start = constant_threshold(cs)
    print(f"alpha = {alpha:.6g}, beta = {beta:.6g}, first n = {start}")
    top = args.n_max_log2 * args.per_octave
    grid = sorted(
        set(range(start, args.dense + 1))
        | {int(round(2 ** (k / args.per_octave))) for k in range(top + 1) if 2 ** (k / args.per_octave) > args.dense}
    )
    bound = np.array([symmetrization_bound(cs, n, 2) for n in grid])
    curve = constant_curve(cs, np.array(grid))
    for n, b, c in zip(grid[:: max(1, len(grid) // 20)], bound[:: max(1, len(grid) // 20)], curve[:: max(1, len(grid) // 20)]):
        print(f"n={n:6d}  bound {b:.6f}  curve {c:.3e}  ratio {b / c:8.1f}")
    ok = np.all(bound >= curve) and np.all(bound[1:] >= curve[:-1]) and np.all(np.diff(bound) < 0)
    print("PASS" if ok else "FAIL")
    raise SystemExit(0 if ok else 2)


if __name__ == "__main__":
    main()
