"""Bounds for every region in regions/ over a range of N.

Coarse nets by default so the whole table finishes in a few minutes; the
upper bound uses integer multiplicities.
"""

import argparse
import time
from pathlib import Path

from polarize.cli import RunConfig, solve_bounds
from polarize.geometry import load_region
from polarize.potential import PotentialSpec

ROOT = Path(__file__).resolve().parent.parent
SHAPES = ("triangle", "disk", "two_triangles", "l_shape")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--a", type=float, default=5.0)
    ap.add_argument("--n", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--shapes", nargs="+", default=list(SHAPES))
    ap.add_argument("--time-limit", type=float, default=600.0)
    args = ap.parse_args()

    print("shape,N,lower,upper,gap,status_lower,status_upper,seconds")
    for shape in args.shapes:
        path = ROOT / "regions" / f"{shape}.json"
        load_region(path)  # fail early on a bad document
        for n in args.n:
            cfg = RunConfig(str(path), PotentialSpec(args.a), n, args.eps,
                            time_limit=args.time_limit).validate()
            t0 = time.perf_counter()
            res = solve_bounds(cfg)
            lo, up = res["lower"].report, res["upper"].report
            print(f"{shape},{n},{lo.value:.6f},{up.value:.6f},{up.value - lo.value:.6f},"
                  f"{lo.status},{up.status},{time.perf_counter() - t0:.1f}", flush=True)


if __name__ == "__main__":
    main()
