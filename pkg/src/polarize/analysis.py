"""Certified bounds for a given configuration and the necessary-condition checks.

All verdicts here are evidence, not proofs: darkest points are only known up
to the resolution of a net, so a failed condition says a configuration is
(numerically) not locally optimal, and a passed one says nothing about
optimality.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (ON_A, Region, SampleNet, bounding_box, build_net, contains,
                       convex_hull, diameter, in_hull, in_hull_interior, on_boundary,
                       sample_uniform)
from .potential import (PotentialSpec, as_configuration, control_g, pairwise_distances,
                        polarization_over_net, potential_U)

HULL_TOL = 1e-9
INTERIOR_MARGIN = 1e-9


def _net_points(net) -> np.ndarray:
    pts = net.points if isinstance(net, SampleNet) else np.asarray(net, dtype=float)
    pts = pts.reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("net is empty")
    return pts


def certified_lower_bound(spec: PotentialSpec, region: Region, C, eps: float, *,
                          probes: int = 20000, seed: int = 0) -> float:
    """min over a validated eps-net of U(p, C) - sum_c g(|c - p|, eps).

    Every point of A lies within eps of the net, so the true polarization of C
    is at least this value.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    C = as_configuration(C)
    net = build_net(region, eps, 1, ON_A, probes=probes, seed=seed)
    return certified_lower_bound_on(spec, net, C)


def certified_lower_bound_on(spec: PotentialSpec, net: SampleNet, C) -> float:
    C = as_configuration(C)
    D = pairwise_distances(net.points, C)
    vals = (np.exp(-spec.a * D * D) - control_g(spec, D, net.epsilon)).sum(axis=1)
    return float(vals.min())


def monte_carlo_floor(spec: PotentialSpec, region: Region, C, probes: int = 10 ** 6,
                      seed: int = 0, chunk: int = 200000) -> tuple[float, np.ndarray]:
    """Smallest U(p, C) over uniform random p in A, and where it was seen."""
    C = as_configuration(C)
    rng = np.random.default_rng(seed)
    best, where = math.inf, None
    left = probes
    while left > 0:
        X = sample_uniform(region, min(chunk, left), rng)
        U = potential_U(spec, X, C)
        k = int(np.argmin(U))
        if U[k] < best:
            best, where = float(U[k]), X[k]
        left -= len(X)
    return best, where


# ---------------------------------------------------------------------------
# darkest points

@dataclass(frozen=True)
class DarkSet:
    points: np.ndarray
    level: float
    tol: float
    values: np.ndarray = field(repr=False, default=None)


def default_dark_tol(spec: PotentialSpec, n_points: int, eps: float) -> float:
    return n_points * control_g(spec, 0.0, eps)


def darkest_points(spec: PotentialSpec, region: Region, C, net, tol: float | None = None) -> DarkSet:
    """Net points whose potential is within ``tol`` of the net minimum.

    ``tol`` defaults to N * g(0, eps) of the net.
    """
    C = as_configuration(C)
    pts = _net_points(net)
    if tol is None:
        if not isinstance(net, SampleNet):
            raise ValueError("tol is required when the net carries no epsilon")
        tol = default_dark_tol(spec, len(C), net.epsilon)
    U = potential_U(spec, pts, C)
    level = float(U.min())
    keep = U <= level + tol
    return DarkSet(pts[keep].copy(), level, float(tol), U[keep].copy())


@dataclass(frozen=True)
class ConditionReport:
    name: str
    holds: bool
    violators: np.ndarray
    note: str = ""

    def to_record(self) -> dict:
        return {"condition": self.name, "holds": self.holds,
                "violators": self.violators.tolist(), "note": self.note}


def check_containment(C, dark: DarkSet, tol: float = HULL_TOL) -> ConditionReport:
    """Every lamp must lie in the convex hull of the darkest points."""
    C = as_configuration(C)
    if len(dark.points) == 0:
        raise ValueError("dark set is empty")
    hull = convex_hull(dark.points)
    inside = in_hull(hull, C, tol)
    note = ("configuration is not locally optimal (up to net resolution)"
            if not inside.all() else "necessary condition satisfied; not a proof of optimality")
    return ConditionReport("containment", bool(inside.all()), C[~inside], note)


def check_dark_location(region: Region, C, dark: DarkSet, tol: float) -> ConditionReport:
    """Darkest points must sit in int conv(C) or on the boundary of A."""
    C = as_configuration(C)
    hull = convex_hull(C)
    interior = in_hull_interior(hull, dark.points, INTERIOR_MARGIN)
    boundary = on_boundary(region, dark.points, tol)
    ok = interior | boundary
    note = ("violators are net artifacts or errors" if not ok.all()
            else "all darkest points in int conv(C) or on the boundary")
    return ConditionReport("dark-location", bool(ok.all()), dark.points[~ok], note)


def _shadow_direction(W: np.ndarray) -> np.ndarray | None:
    """v in the unit box maximising min_i v.w_i, if that minimum is >= 0.

    In the plane the maximum sits at a box corner, an axis or w-direction, or
    where two constraints are tied, so a finite candidate list is exact.
    """
    cands = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0),
             (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
    dirs = list(W)
    for i in range(len(W)):
        for j in range(i + 1, len(W)):
            d = W[i] - W[j]
            dirs.append(np.array([-d[1], d[0]]))
        dirs.append(np.array([-W[i][1], W[i][0]]))
    for d in dirs:
        scale = np.abs(d).max()
        if scale > 0:
            cands.append(tuple(d / scale))
            cands.append(tuple(-d / scale))
    V = np.unique(np.asarray(cands), axis=0)
    phi = (V @ W.T).min(axis=1) if len(W) else np.zeros(len(V))
    best = phi.max()
    if best < 0:
        return None
    tied = np.flatnonzero(phi >= best - 1e-12)
    norms = np.hypot(V[tied, 0], V[tied, 1])
    k = tied[np.lexsort((V[tied, 1], V[tied, 0], norms))[0]]
    return V[k]


def shadow_certificate(spec: PotentialSpec, region: Region, C, p) -> np.ndarray | None:
    """A point q of A with U(q, C) < U(p, C), found inside the shadow cone of p.

    Returns None when no such point turns up; that is inconclusive.
    """
    C = as_configuration(C)
    p = np.asarray(p, dtype=float)
    W = p[None, :] - C
    W = W[np.hypot(W[:, 0], W[:, 1]) > 1e-15]
    v = _shadow_direction(W)
    if v is None:
        return None
    Up = potential_U(spec, p, C)
    step, top = 1e-3, max(diameter(region), 1e-3)
    while step <= top:
        q = p + step * v
        if contains(region, q) and potential_U(spec, q, C) < Up:
            return q
        step *= 2
    return None


@dataclass(frozen=True)
class MoveReport:
    p_old: float
    p_new: float
    decreased: bool


def single_move_check(spec: PotentialSpec, region: Region, C, index: int, new_point,
                      net) -> MoveReport:
    """Net polarization before and after moving one lamp."""
    C = as_configuration(C)
    if not 0 <= index < len(C):
        raise IndexError(f"configuration index {index} out of range")
    pts = _net_points(net)
    old, _ = polarization_over_net(spec, pts, C)
    C2 = C.copy()
    C2[index] = np.asarray(new_point, dtype=float)
    new, _ = polarization_over_net(spec, pts, C2)
    return MoveReport(old, new, new < old)


# ---------------------------------------------------------------------------
# heatmaps and exports

@dataclass(frozen=True)
class Heatmap:
    x: np.ndarray
    y: np.ndarray
    inside: np.ndarray
    u: np.ndarray

    def records(self):
        return list(zip(self.x.tolist(), self.y.tolist(), self.inside.tolist(), self.u.tolist()))

    def to_csv(self, path) -> None:
        with Path(path).open("w") as fh:
            fh.write("x,y,inside,u\n")
            for x, y, ins, u in self.records():
                fh.write(f"{x!r},{y!r},{int(ins)},{u!r}\n")


def heatmap_grid(spec: PotentialSpec, region: Region, C, resolution: int) -> Heatmap:
    """Potential at the cell centres of a resolution x resolution grid, row-major."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    C = as_configuration(C)
    lo, hi = bounding_box(region)
    xs = lo[0] + (np.arange(resolution) + 0.5) * (hi[0] - lo[0]) / resolution
    ys = lo[1] + (np.arange(resolution) + 0.5) * (hi[1] - lo[1]) / resolution
    X, Y = np.meshgrid(xs, ys)
    P = np.column_stack([X.ravel(), Y.ravel()])
    return Heatmap(P[:, 0], P[:, 1], contains(region, P), potential_U(spec, P, C))


def write_darkset_csv(dark: DarkSet, path) -> None:
    with Path(path).open("w") as fh:
        fh.write("x,y,u\n")
        for (x, y), u in zip(dark.points.tolist(), dark.values.tolist()):
            fh.write(f"{x!r},{y!r},{u!r}\n")


def write_condition_reports(reports, path) -> None:
    Path(path).write_text(json.dumps([r.to_record() for r in reports], indent=2) + "\n")
