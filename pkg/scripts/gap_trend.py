"""Sandwich gap on the triangle as the net resolution shrinks.

Prints a CSV table eps,lower,upper,gap,n_lambda,n_gamma,seconds.
"""

import argparse
import time
from pathlib import Path

from polarize.cli import RunConfig, solve_bounds
from polarize.potential import PotentialSpec

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.08, 0.06, 0.04])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--a", type=float, default=5.0)
    ap.add_argument("--region", default=str(ROOT / "regions" / "triangle.json"))
    args = ap.parse_args()

    print("eps,lower,upper,gap,n_lambda,n_gamma,seconds")
    for eps in args.eps:
        cfg = RunConfig(args.region, PotentialSpec(args.a), args.n, eps).validate()
        t0 = time.perf_counter()
        res = solve_bounds(cfg)
        dt = time.perf_counter() - t0
        lo, up = res["lower"].report.value, res["upper"].report.value
        print(f"{eps},{lo:.9f},{up:.9f},{up - lo:.9f},"
              f"{len(res['lower'].lam)},{len(res['lower'].gamma)},{dt:.2f}", flush=True)


if __name__ == "__main__":
    main()
