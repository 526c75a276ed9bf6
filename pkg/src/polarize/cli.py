"""``polarize`` command line.

    polarize net        --region R --eps E [--k K] [--tag on-A|on-conv-A] --out DIR
    polarize lower      --region R --a A --n N --eps E [--eps-lambda E] [--binary|--integer] --out DIR
    polarize upper      ... [--multiplicity K]
    polarize sandwich   ...
    polarize verify     --region R --a A --eps E --configuration FILE [--out DIR]
    polarize conditions --region R --a A --eps E --configuration FILE [--dark-tol T] --out DIR
    polarize heatmap    --region R --a A --configuration FILE [--resolution K] --out DIR
    polarize oracle-test [--seeds S]

Every run-style command also takes ``--config FILE`` (a JSON run document);
flags given on the command line win over the file.  Errors go to stderr
prefixed with ``ERROR:``; exit status is 1 for usage errors and 2 for
infeasible instances or failed net validation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .geometry import (ON_A, ON_CONV_A, NetValidationError, RegionError, SampleNet, build_net,
                       load_region, save_net)
from .model import InstanceError, build_lower_instance, build_upper_instance
from .potential import PotentialSpec, pairwise_distances, control_g
from .solver import BoundReport, run_oracle_suite, solve_bnb

MODES = ("lower", "upper", "sandwich")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    region: str
    potential: PotentialSpec
    n: int
    eps: float
    mode: str = "sandwich"
    eps_lambda: float | None = None
    binary: bool | None = None
    multiplicity: int | None = None
    tol: float = 1e-9
    time_limit: float | None = None
    seed: int = 0
    out: str = "."

    def validate(self, check_paths: bool = True) -> "RunConfig":
        if self.n < 1:
            raise UsageError(f"n must be at least 1, got {self.n}")
        if not self.eps > 0:
            raise UsageError(f"eps must be positive, got {self.eps}")
        if self.eps_lambda is not None and not self.eps_lambda > 0:
            raise UsageError(f"eps_lambda must be positive, got {self.eps_lambda}")
        if self.mode not in MODES:
            raise UsageError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.tol > 0:
            raise UsageError("tol must be positive")
        if self.multiplicity is not None and self.multiplicity < 1:
            raise UsageError("multiplicity must be at least 1")
        if check_paths and not Path(self.region).exists():
            raise UsageError(f"region file {self.region} does not exist")
        return self

    def lambda_eps(self, mode: str) -> float:
        if self.eps_lambda is not None:
            return self.eps_lambda
        return self.eps / 3 if mode == "lower" else self.eps

    def is_binary(self, mode: str) -> bool:
        if self.binary is not None:
            return self.binary
        if mode == "lower":
            return True
        return self.multiplicity is not None and self.multiplicity >= self.n


_RUN_KEYS = {f.name for f in dataclasses.fields(RunConfig)} | {"a"}


def load_run_config(path, overrides: dict | None = None, check_paths: bool = True) -> RunConfig:
    """Parse a JSON run document; ``overrides`` (non-None values) take precedence."""
    doc = json.loads(Path(path).read_text()) if path is not None else {}
    if not isinstance(doc, dict):
        raise UsageError("run document must be a JSON object")
    unknown = set(doc) - _RUN_KEYS
    if unknown:
        raise UsageError(f"unknown run-config keys: {sorted(unknown)}")
    merged = dict(doc)
    for key, val in (overrides or {}).items():
        if val is not None:
            merged[key] = val
    if "region" in doc and path is not None and (overrides or {}).get("region") is None:
        # region paths in a run document are relative to the document
        merged["region"] = str(Path(path).parent / merged["region"])
    pot = merged.pop("potential", None)
    a = merged.pop("a", None)
    try:
        potential = PotentialSpec.from_doc(pot) if pot is not None else None
        if a is not None:
            potential = PotentialSpec(float(a))
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad potential: {exc}") from exc
    if potential is None:
        raise UsageError("kernel parameter a is required")
    missing = {"region", "n", "eps"} - merged.keys()
    if missing:
        raise UsageError(f"missing run-config keys: {sorted(missing)}")
    try:
        cfg = RunConfig(region=str(merged.pop("region")), potential=potential,
                        n=int(merged.pop("n")), eps=float(merged.pop("eps")), **merged)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    return cfg.validate(check_paths)


# ---------------------------------------------------------------------------
# reports on disk

def write_report(report: BoundReport, path, extra: dict | None = None) -> dict:
    rec = report.to_record()
    if extra:
        rec.update(extra)
    Path(path).write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
    return rec


def read_configuration(path) -> np.ndarray:
    """Lamp multiset from a report JSON or a CSV with columns x,y[,count]."""
    path = Path(path)
    if path.suffix == ".json":
        rec = json.loads(path.read_text())
        rows = rec["configuration"]
    else:
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2).tolist()
    pts = []
    for row in rows:
        count = int(row[2]) if len(row) > 2 else 1
        pts.extend([(float(row[0]), float(row[1]))] * count)
    if not pts:
        raise UsageError(f"configuration file {path} is empty")
    return np.asarray(pts)


def recompute_report_value(rec: dict, spec: PotentialSpec, gamma: np.ndarray) -> float:
    """Re-evaluate a report's objective from its configuration and Gamma."""
    C = np.asarray([[x, y] for x, y, k in rec["configuration"]])
    counts = np.asarray([k for _, _, k in rec["configuration"]], dtype=float)
    D = pairwise_distances(C, gamma)
    sign = -1 if rec["sense"] == "lower" else 1
    W = np.exp(-spec.a * D * D) + sign * control_g(spec, D, rec["epsilon_used"])
    return float((counts @ W).min())


# ---------------------------------------------------------------------------
# commands

def _log(msg: str) -> None:
    print(msg, flush=True)


@dataclass
class Solved:
    report: BoundReport
    lam: SampleNet
    gamma: SampleNet


def solve_bounds(cfg: RunConfig, modes=("lower", "upper"), nets_cache: dict | None = None) -> dict:
    """Build nets and instances for each mode and solve them; nothing is written."""
    region = load_region(cfg.region)
    spec = cfg.potential
    cache = {} if nets_cache is None else nets_cache

    def net(eps, kk, tag):
        key = (eps, kk, tag)
        if key not in cache:
            cache[key] = build_net(region, eps, kk, tag, seed=cfg.seed)
        return cache[key]

    out = {}
    for mode in modes:
        binary = cfg.is_binary(mode)
        k = 1
        if mode == "upper" and binary:
            k = cfg.multiplicity if cfg.multiplicity is not None else cfg.n
        gamma = net(cfg.eps, 1, ON_A)
        lam = net(cfg.lambda_eps(mode), k, ON_CONV_A)
        if mode == "lower":
            inst = build_lower_instance(spec, lam, gamma, cfg.n, binary)
        else:
            inst = build_upper_instance(spec, lam, gamma, cfg.n, binary)
        out[mode] = Solved(solve_bnb(inst, cfg.tol, cfg.time_limit), lam, gamma)
    return out


def _solve_mode(cfg: RunConfig, mode: str, out: Path, nets_cache: dict) -> BoundReport:
    res = solve_bounds(cfg, (mode,), nets_cache)[mode]
    report, lam, gamma = res.report, res.lam, res.gamma
    save_net(gamma, out / f"net_gamma_{mode}.csv")
    save_net(lam, out / f"net_lambda_{mode}.csv")
    write_report(report, out / f"report_{mode}.json",
                 {"potential": cfg.potential.to_doc(), "seed": cfg.seed,
                  "n_lambda": len(lam), "n_gamma": len(gamma),
                  "gamma_net": f"net_gamma_{mode}.csv"})
    _log(f"{mode}: value={report.value:.9f} status={report.status} gap={report.gap:.3g} "
         f"|Lambda|={len(lam)} |Gamma|={len(gamma)} nodes={report.nodes_explored} "
         f"time={report.wall_time:.2f}s")
    return report


def cmd_run(args, mode: str) -> int:
    cfg = load_run_config(args.config, _overrides(args, mode))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cache: dict = {}
    if mode != "sandwich":
        _solve_mode(cfg, mode, out, cache)
        return 0
    lo = _solve_mode(cfg, "lower", out, cache)
    up = _solve_mode(cfg, "upper", out, cache)
    gap = up.value - lo.value
    ok = lo.value <= up.value + cfg.tol
    _log(f"sandwich: value_lower={lo.value:.9f} {'<=' if ok else '>'} "
         f"value_upper={up.value:.9f} gap={gap:.9f}")
    if not ok:
        print("ERROR: lower bound exceeds upper bound", file=sys.stderr)
        return 2
    return 0


def _overrides(args, mode=None) -> dict:
    ov = {
        "region": getattr(args, "region", None),
        "a": getattr(args, "a", None),
        "n": getattr(args, "n", None),
        "eps": getattr(args, "eps", None),
        "eps_lambda": getattr(args, "eps_lambda", None),
        "binary": getattr(args, "binary", None),
        "multiplicity": getattr(args, "multiplicity", None),
        "tol": getattr(args, "tol", None),
        "time_limit": getattr(args, "time_limit", None),
        "seed": getattr(args, "seed", None),
        "out": getattr(args, "out", None),
        "mode": mode,
    }
    return ov


def _region_spec(args):
    if args.region is None:
        raise UsageError("--region is required")
    if args.a is None:
        raise UsageError("--a is required")
    return load_region(args.region), PotentialSpec(args.a)


def cmd_net(args) -> int:
    if args.region is None or args.eps is None or args.out is None:
        raise UsageError("net needs --region, --eps and --out")
    region = load_region(args.region)
    net = build_net(region, args.eps, args.k, args.tag, seed=args.seed or 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = "lambda" if args.tag == ON_CONV_A else "gamma"
    save_net(net, out / f"net_{name}.csv")
    _log(f"net: {len(net)} points, eps={args.eps}, k={args.k}, tag={args.tag}")
    return 0


def cmd_verify(args) -> int:
    region, spec = _region_spec(args)
    if args.eps is None or args.configuration is None:
        raise UsageError("verify needs --eps and --configuration")
    C = read_configuration(args.configuration)
    bound = analysis.certified_lower_bound(spec, region, C, args.eps, seed=args.seed or 0)
    _log(f"certified lower bound: {bound:.9f} (N={len(C)}, eps={args.eps})")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.json").write_text(json.dumps(
            {"certified_lower_bound": bound, "eps": args.eps, "N": len(C),
             "potential": spec.to_doc()}, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_conditions(args) -> int:
    region, spec = _region_spec(args)
    if args.eps is None or args.configuration is None or args.out is None:
        raise UsageError("conditions needs --eps, --configuration and --out")
    C = read_configuration(args.configuration)
    net = build_net(region, args.eps, 1, ON_A, seed=args.seed or 0)
    dark = analysis.darkest_points(spec, region, C, net, args.dark_tol)
    reports = [analysis.check_containment(C, dark),
               analysis.check_dark_location(region, C, dark, args.boundary_tol)]
    certs = [analysis.shadow_certificate(spec, region, C, p) for p in dark.points]
    hits = np.asarray([p for p, q in zip(dark.points, certs) if q is not None]).reshape(-1, 2)
    reports.append(analysis.ConditionReport(
        "shadow-sweep", len(hits) == 0, hits,
        f"{len(hits)} of {len(dark.points)} dark-set points have a strictly darker point "
        "of A in their shadow cone"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_condition_reports(reports, out / "conditions.txt")
    analysis.write_darkset_csv(dark, out / "darkset.csv")
    for r in reports:
        _log(f"{r.name}: {'holds' if r.holds else 'VIOLATED'} ({len(r.violators)} violators) - {r.note}")
    return 0


def cmd_heatmap(args) -> int:
    region, spec = _region_spec(args)
    if args.configuration is None or args.out is None:
        raise UsageError("heatmap needs --configuration and --out")
    C = read_configuration(args.configuration)
    grid = analysis.heatmap_grid(spec, region, C, args.resolution)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid.to_csv(out / "heatmap.csv")
    _log(f"heatmap: {args.resolution}x{args.resolution} cells written to {out / 'heatmap.csv'}")
    return 0


def cmd_oracle(args) -> int:
    rows = run_oracle_suite(args.seeds)
    good = sum(r[3] for r in rows)
    for seed, ref, got, ok in rows:
        if not ok:
            print(f"ERROR: seed {seed}: oracle {ref!r} != solver {got!r}", file=sys.stderr)
    _log(f"{good}/{len(rows)} match")
    return 0 if good == len(rows) else 2


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polarize", description="Bounds on maximal polarization via MIP.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON run document")
        p.add_argument("--region", help="region JSON file")
        p.add_argument("--a", type=float, help="Gaussian parameter, f(x) = exp(-a x^2)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")

    for mode in MODES:
        p = sub.add_parser(mode, help=f"{mode} bound(s)")
        common(p)
        p.add_argument("--n", type=int)
        p.add_argument("--eps", type=float)
        p.add_argument("--eps-lambda", type=float)
        g = p.add_mutually_exclusive_group()
        g.add_argument("--binary", dest="binary", action="store_const", const=True)
        g.add_argument("--integer", dest="binary", action="store_const", const=False)
        p.add_argument("--multiplicity", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--time-limit", type=float)

    p = sub.add_parser("net", help="build and export a validated net")
    common(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--tag", choices=(ON_A, ON_CONV_A), default=ON_A)

    for name in ("verify", "conditions", "heatmap"):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--configuration", help="report JSON or CSV x,y[,count]")
        p.add_argument("--eps", type=float)
    sub.choices["conditions"].add_argument("--dark-tol", type=float)
    sub.choices["conditions"].add_argument("--boundary-tol", type=float, default=1e-6)
    sub.choices["heatmap"].add_argument("--resolution", type=int, default=100)

    p = sub.add_parser("oracle-test", help="solver against brute force on random instances")
    p.add_argument("--seeds", type=int, default=100)
    return parser


def run_command(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.command in MODES:
            return cmd_run(args, args.command)
        return {"net": cmd_net, "verify": cmd_verify, "conditions": cmd_conditions,
                "heatmap": cmd_heatmap, "oracle-test": cmd_oracle}[args.command](args)
    except UsageError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    except (RegionError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    except (InstanceError, NetValidationError) as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command())
