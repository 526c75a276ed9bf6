"""Lower and upper bounds for N lamps on the unit equilateral triangle.

    python3 scripts/triangle_sandwich.py --eps 0.04 --n 3 --out runs/triangle
"""

import argparse
import sys
from pathlib import Path

from polarize.cli import run_command

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.04)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--a", type=float, default=5.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/triangle")
    args = ap.parse_args()
    out = Path(args.out)
    rc = run_command(["sandwich", "--region", str(ROOT / "regions" / "triangle.json"),
                      "--a", str(args.a), "--n", str(args.n), "--eps", str(args.eps),
                      "--seed", str(args.seed), "--out", str(out)])
    if rc == 0:
        rc = run_command(["conditions", "--region", str(ROOT / "regions" / "triangle.json"),
                          "--a", str(args.a), "--eps", str(args.eps / 2),
                          "--configuration", str(out / "report_lower.json"), "--out", str(out)])
    sys.exit(rc)


if __name__ == "__main__":
    main()
