"""Planar regions, convex hulls and sample nets.

A region is a disk, a convex polygon, or a finite union of those.  Nets are
built from a scaled A2 (triangular) lattice, completed near the boundary by
projecting outside lattice points back onto each primitive, and are only
handed out after an empirical covering check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np
from scipy.spatial import cKDTree

ON_A = "on-A"
ON_CONV_A = "on-conv-A"
DOMAIN_TAGS = (ON_A, ON_CONV_A)

# slack used by all membership predicates
GEOM_TOL = 1e-12
# vertices of the polygon standing in for a disk inside conv(A)
DISK_HULL_SIDES = 256
LATTICE_MARGIN = 0.95


class RegionError(ValueError):
    """Malformed or degenerate region document."""


class NetValidationError(RuntimeError):
    """A net failed its covering check after all refinement rounds."""


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise RegionError(f"disk radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Polygon:
    """Convex polygon, vertices counterclockwise."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple(tuple(float(v) for v in p) for p in self.vertices)
        object.__setattr__(self, "vertices", verts)
        _check_convex_ccw(verts)


@dataclass(frozen=True)
class RegionUnion:
    parts: tuple[Union[Disk, Polygon], ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise RegionError("union needs at least one part")


Region = Union[Disk, Polygon, RegionUnion]


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _check_convex_ccw(vertices) -> None:
    n = len(vertices)
    if n < 3:
        raise RegionError(f"polygon needs at least 3 vertices, got {n}")
    turns = []
    for i in range(n):
        a, b, c = vertices[i - 1], vertices[i], vertices[(i + 1) % n]
        if a == b:
            raise RegionError(f"repeated polygon vertex {b}")
        turns.append(_cross(a, b, c))
    if min(turns) < 0:
        raise RegionError("polygon is not convex and counterclockwise "
                          "(non-convex shapes must be given as unions)")
    area2 = sum(vertices[i - 1][0] * vertices[i][1] - vertices[i][0] * vertices[i - 1][1]
                for i in range(n))
    if area2 <= 0:
        raise RegionError("polygon has zero area")
    # a star polygon turns left everywhere but winds more than once
    winding = 0.0
    for i in range(n):
        a, b, c = vertices[i - 1], vertices[i], vertices[(i + 1) % n]
        u = (b[0] - a[0], b[1] - a[1])
        v = (c[0] - b[0], c[1] - b[1])
        winding += math.atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1])
    if abs(winding - 2 * math.pi) > 1e-6:
        raise RegionError("polygon is self-intersecting")


# ---------------------------------------------------------------------------
# parsing

def parse_region(doc) -> Region:
    """Build a region from its JSON-shaped document (dict or JSON text).

    Clockwise polygons are reoriented; anything degenerate raises
    ``RegionError``.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise RegionError(f"region document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "type" not in doc:
        raise RegionError("region document must be an object with a 'type' key")
    kind = doc["type"]
    try:
        if kind == "disk":
            _expect_keys(doc, {"type", "center", "radius"})
            cx, cy = (float(v) for v in doc["center"])
            return Disk((cx, cy), float(doc["radius"]))
        if kind == "polygon":
            _expect_keys(doc, {"type", "vertices"})
            verts = [tuple(float(v) for v in p) for p in doc["vertices"]]
            if any(len(p) != 2 for p in verts):
                raise RegionError("polygon vertices must be [x, y] pairs")
            if len(verts) >= 3:
                area2 = sum(verts[i - 1][0] * verts[i][1] - verts[i][0] * verts[i - 1][1]
                            for i in range(len(verts)))
                if area2 < 0:
                    verts.reverse()
            return Polygon(tuple(verts))
        if kind == "union":
            _expect_keys(doc, {"type", "parts"})
            parts = []
            for sub in doc["parts"]:
                r = parse_region(sub)
                parts.extend(r.parts if isinstance(r, RegionUnion) else [r])
            return RegionUnion(tuple(parts))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, RegionError):
            raise
        raise RegionError(f"malformed {kind} primitive: {exc}") from exc
    raise RegionError(f"unknown region type {kind!r}")


def _expect_keys(doc, allowed):
    missing = allowed - doc.keys()
    extra = doc.keys() - allowed
    if missing or extra:
        raise RegionError(f"{doc['type']}: missing keys {sorted(missing)}, "
                          f"unknown keys {sorted(extra)}")


def region_to_doc(region: Region) -> dict:
    if isinstance(region, Disk):
        return {"type": "disk", "center": list(region.center), "radius": region.radius}
    if isinstance(region, Polygon):
        return {"type": "polygon", "vertices": [list(v) for v in region.vertices]}
    return {"type": "union", "parts": [region_to_doc(p) for p in region.parts]}


def load_region(path) -> Region:
    return parse_region(Path(path).read_text())


def primitives(region: Region) -> tuple:
    return region.parts if isinstance(region, RegionUnion) else (region,)


# ---------------------------------------------------------------------------
# per-primitive predicates, vectorised over (n, 2) arrays

def _prim_contains(prim, P: np.ndarray) -> np.ndarray:
    if isinstance(prim, Disk):
        d = np.hypot(P[:, 0] - prim.center[0], P[:, 1] - prim.center[1])
        return d <= prim.radius + GEOM_TOL
    return _convex_contains(np.asarray(prim.vertices), P, GEOM_TOL)


def _convex_contains(V: np.ndarray, P: np.ndarray, tol: float) -> np.ndarray:
    ok = np.ones(len(P), dtype=bool)
    for a, b in zip(V, np.roll(V, -1, axis=0)):
        e = b - a
        cr = e[0] * (P[:, 1] - a[1]) - e[1] * (P[:, 0] - a[0])
        ok &= cr >= -tol * np.hypot(e[0], e[1])
    return ok


def _segment_distance(P, a, b):
    e = b - a
    t = np.clip(((P - a) @ e) / (e @ e), 0.0, 1.0)
    q = a + t[:, None] * e
    return np.hypot(P[:, 0] - q[:, 0], P[:, 1] - q[:, 1]), q


def _prim_boundary_distance(prim, P):
    if isinstance(prim, Disk):
        d = np.hypot(P[:, 0] - prim.center[0], P[:, 1] - prim.center[1])
        return np.abs(d - prim.radius)
    V = np.asarray(prim.vertices)
    return np.min([_segment_distance(P, a, b)[0] for a, b in zip(V, np.roll(V, -1, axis=0))],
                  axis=0)


def _prim_project(prim, P):
    """Nearest point of the (convex) primitive for every row of P."""
    P = np.asarray(P, dtype=float)
    if isinstance(prim, Disk):
        c = np.asarray(prim.center)
        d = np.hypot(*(P - c).T)
        scale = np.where(d > prim.radius, prim.radius / np.maximum(d, 1e-300), 1.0)
        return c + (P - c) * scale[:, None]
    V = np.asarray(prim.vertices)
    inside = _convex_contains(V, P, 0.0)
    best_d = np.full(len(P), np.inf)
    best_q = P.copy()
    for a, b in zip(V, np.roll(V, -1, axis=0)):
        d, q = _segment_distance(P, a, b)
        upd = d < best_d
        best_d[upd] = d[upd]
        best_q[upd] = q[upd]
    best_q[inside] = P[inside]
    return best_q


def _prim_bbox(prim):
    if isinstance(prim, Disk):
        (cx, cy), r = prim.center, prim.radius
        return np.array([cx - r, cy - r]), np.array([cx + r, cy + r])
    V = np.asarray(prim.vertices)
    return V.min(axis=0), V.max(axis=0)


# ---------------------------------------------------------------------------
# region-level queries

def _as_points(p) -> tuple[np.ndarray, bool]:
    P = np.asarray(p, dtype=float)
    single = P.ndim == 1
    return P.reshape(-1, 2), single


def contains(region: Region, p):
    """Closed membership; accepts one point or an (n, 2) array."""
    P, single = _as_points(p)
    ok = np.zeros(len(P), dtype=bool)
    for prim in primitives(region):
        ok |= _prim_contains(prim, P)
    return bool(ok[0]) if single else ok


def boundary_distance(region: Region, p):
    """Distance to the nearest primitive boundary.

    For overlapping unions this also counts seams buried inside other parts.
    """
    P, single = _as_points(p)
    d = np.min([_prim_boundary_distance(prim, P) for prim in primitives(region)], axis=0)
    return float(d[0]) if single else d


def on_boundary(region: Region, p, tol: float):
    """True for points of A within ``tol`` of a primitive boundary and not deep
    inside any other primitive."""
    P, single = _as_points(p)
    prims = primitives(region)
    near = np.zeros(len(P), dtype=bool)
    for prim in prims:
        near |= (_prim_boundary_distance(prim, P) <= tol) & _prim_contains(prim, P)
    for prim in prims:
        deep = _prim_contains(prim, P) & (_prim_boundary_distance(prim, P) > tol)
        near &= ~deep
    return bool(near[0]) if single else near


def bounding_box(region: Region) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = zip(*(_prim_bbox(p) for p in primitives(region)))
    return np.min(lo, axis=0), np.max(hi, axis=0)


def diameter(region: Region) -> float:
    H = hull_vertices(region)
    diff = H[:, None, :] - H[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def boundary_sample(region: Region, spacing: float) -> np.ndarray:
    """Points on the boundary with consecutive gaps at most ``spacing``.

    Polygon vertices are always included; for unions, points buried in the
    interior of another part are dropped.
    """
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    prims = primitives(region)
    chunks = []
    for i, prim in enumerate(prims):
        pts = _prim_boundary_sample(prim, spacing)
        for j, other in enumerate(prims):
            if j == i:
                continue
            buried = _prim_contains(other, pts) & (_prim_boundary_distance(other, pts) > 1e-9)
            pts = pts[~buried]
        chunks.append(pts)
    return np.vstack(chunks) if chunks else np.empty((0, 2))


def _prim_boundary_sample(prim, spacing):
    if isinstance(prim, Disk):
        n = max(3, math.ceil(2 * math.pi * prim.radius / spacing))
        t = 2 * math.pi * np.arange(n) / n
        return np.column_stack([prim.center[0] + prim.radius * np.cos(t),
                                prim.center[1] + prim.radius * np.sin(t)])
    V = np.asarray(prim.vertices)
    out = []
    for a, b in zip(V, np.roll(V, -1, axis=0)):
        m = max(1, math.ceil(np.hypot(*(b - a)) / spacing))
        t = np.arange(m)[:, None] / m
        out.append(a + t * (b - a))
    return np.vstack(out)


# ---------------------------------------------------------------------------
# convex hulls

def convex_hull(points) -> np.ndarray:
    """Andrew's monotone chain; counterclockwise, no repeated endpoint.

    Degenerate inputs give one or two vertices.
    """
    P = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(P) <= 2:
        return P
    pts = [tuple(p) for p in P]

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower, upper = half(pts), half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    return np.asarray(hull)


def in_hull(hull: np.ndarray, p, tol: float = 0.0):
    """Membership in the convex polygon / segment / point ``hull`` up to tol."""
    P, single = _as_points(p)
    tol = tol + GEOM_TOL
    if len(hull) == 0:
        ok = np.zeros(len(P), dtype=bool)
    elif len(hull) == 1:
        ok = np.hypot(*(P - hull[0]).T) <= tol
    elif len(hull) == 2:
        ok = _segment_distance(P, hull[0], hull[1])[0] <= tol
    else:
        ok = _convex_contains(hull, P, tol)
    return bool(ok[0]) if single else ok


def in_hull_interior(hull: np.ndarray, p, margin: float):
    """Strictly inside by at least ``margin``; empty for degenerate hulls."""
    P, single = _as_points(p)
    if len(hull) < 3:
        ok = np.zeros(len(P), dtype=bool)
    else:
        ok = _convex_contains(hull, P, -margin)
    return bool(ok[0]) if single else ok


@lru_cache(maxsize=64)
def hull_vertices(region: Region) -> np.ndarray:
    """Vertices of conv(A), disks replaced by circumscribed regular polygons."""
    pts = []
    for prim in primitives(region):
        if isinstance(prim, Disk):
            n = DISK_HULL_SIDES
            R = prim.radius / math.cos(math.pi / n)
            t = 2 * math.pi * np.arange(n) / n
            pts.append(np.column_stack([prim.center[0] + R * np.cos(t),
                                        prim.center[1] + R * np.sin(t)]))
        else:
            pts.append(np.asarray(prim.vertices, dtype=float))
    H = convex_hull(np.vstack(pts))
    H.setflags(write=False)
    return H


def hull_region(region: Region) -> Region:
    """conv(A) as a region; a single disk or polygon is its own hull."""
    if isinstance(region, (Disk, Polygon)):
        return region
    return Polygon(tuple(map(tuple, hull_vertices(region).tolist())))


def hull_membership(region: Region, p, tol: float = 0.0):
    return in_hull(hull_vertices(region), p, tol)


# ---------------------------------------------------------------------------
# sample nets

@dataclass(frozen=True)
class SampleNet:
    points: np.ndarray
    epsilon: float
    multiplicity: int = 1
    domain_tag: str = ON_A
    validated: bool = False
    seed: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.domain_tag not in DOMAIN_TAGS:
            raise ValueError(f"unknown domain tag {self.domain_tag!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be at least 1")

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class NetReport:
    max_gap: float
    min_multiplicity: int
    passed: bool
    probes: int = 0


def domain_of(region: Region, tag: str) -> Region:
    if tag == ON_A:
        return region
    if tag == ON_CONV_A:
        return hull_region(region)
    raise ValueError(f"unknown domain tag {tag!r}")


def sample_uniform(region: Region, n: int, rng: np.random.Generator) -> np.ndarray:
    """Rejection sampling over the bounding box."""
    lo, hi = bounding_box(region)
    out = []
    got = 0
    while got < n:
        batch = rng.uniform(lo, hi, size=(max(1024, 2 * (n - got)), 2))
        batch = batch[contains(region, batch)]
        out.append(batch)
        got += len(batch)
    return np.vstack(out)[:n]


def a2_lattice(lo, hi, spacing: float) -> np.ndarray:
    """Triangular lattice points covering the box [lo, hi] with one layer to spare."""
    h = spacing * math.sqrt(3) / 2
    lo = np.asarray(lo, dtype=float) - spacing
    hi = np.asarray(hi, dtype=float) + spacing
    rows = np.arange(math.floor((hi[1] - lo[1]) / h) + 2)
    cols = np.arange(math.floor((hi[0] - lo[0]) / spacing) + 2)
    X = lo[0] + cols[None, :] * spacing + (rows[:, None] % 2) * spacing / 2
    Y = lo[1] + rows[:, None] * h + 0 * X
    return np.column_stack([X.ravel(), Y.ravel()])


def _dedupe(P: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    # lexicographic order doubles as the canonical net order
    key = np.round(P / tol).astype(np.int64)
    _, idx = np.unique(key, axis=0, return_index=True)
    Q = P[np.sort(idx)]
    order = np.lexsort((Q[:, 1], Q[:, 0]))
    return Q[order]


def lattice_net_points(domain: Region, epsilon: float, spacing: float) -> np.ndarray:
    rho = spacing / math.sqrt(3)
    lo, hi = bounding_box(domain)
    L = a2_lattice(lo, hi, spacing)
    inside = contains(domain, L)
    pts = [L[inside]]
    outside = L[~inside]
    # projecting onto a convex primitive is 1-Lipschitz, so the projections of
    # outside lattice points keep the covering radius rho
    for prim in primitives(domain):
        near = outside[_prim_distance(prim, outside) <= rho * (1 + 1e-9)]
        if len(near):
            pts.append(_prim_project(prim, near))
    pts.append(boundary_sample(domain, epsilon))
    return _dedupe(np.vstack(pts))


def _prim_distance(prim, P):
    return np.hypot(*(P - _prim_project(prim, P)).T)


def build_net(region: Region, epsilon: float, k: int = 1, domain_tag: str = ON_A, *,
              probes: int = 20000, seed: int = 0, max_rounds: int = 12,
              shrink: float = 0.85) -> SampleNet:
    """Validated (epsilon, k)-net of A or conv(A) built from a scaled A2 lattice.

    The lattice spacing starts at sqrt(3) * 0.95 * epsilon (covering radius
    0.95 * epsilon) and shrinks until the probe check sees ``k`` net points
    within epsilon everywhere.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if k < 1:
        raise ValueError("k must be at least 1")
    domain = domain_of(region, domain_tag)
    spacing = math.sqrt(3) * epsilon * LATTICE_MARGIN
    report = None
    for _ in range(max_rounds):
        pts = lattice_net_points(domain, epsilon, spacing)
        net = SampleNet(pts, epsilon, k, domain_tag, False, seed)
        report = validate_net(net, region, probes, seed=seed)
        if report.passed:
            return SampleNet(pts, epsilon, k, domain_tag, True, seed)
        spacing *= shrink
    raise NetValidationError(
        f"no valid ({epsilon}, {k})-net after {max_rounds} rounds: "
        f"max gap {report.max_gap:.6g}, min multiplicity {report.min_multiplicity}")


def validate_net(net: SampleNet, region: Region, probes: int = 100000,
                 seed: int = 0) -> NetReport:
    """Monte Carlo covering check over the net's tagged domain."""
    if probes < 1:
        raise ValueError("probes must be at least 1")
    domain = domain_of(region, net.domain_tag)
    rng = np.random.default_rng(seed)
    X = sample_uniform(domain, probes, rng)
    if len(net) == 0:
        return NetReport(math.inf, 0, False, probes)
    tree = cKDTree(net.points)
    gaps, _ = tree.query(X)
    # strict "< epsilon" as in the net definition
    radius = np.nextafter(net.epsilon, 0.0)
    counts = tree.query_ball_point(X, radius, return_length=True)
    max_gap = float(gaps.max())
    min_mult = int(counts.min())
    in_domain = bool(np.all(contains(domain, net.points)))
    passed = max_gap < net.epsilon and min_mult >= net.multiplicity and in_domain
    return NetReport(max_gap, min_mult, passed, probes)


def save_net(net: SampleNet, path) -> None:
    """CSV ``x,y`` plus a ``.meta.json`` sidecar."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write("x,y\n")
        for x, y in net.points.tolist():
            fh.write(f"{x!r},{y!r}\n")
    meta = {"epsilon": net.epsilon, "k": net.multiplicity, "domain_tag": net.domain_tag,
            "validated": net.validated, "seed": net.seed}
    path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_net(path) -> SampleNet:
    path = Path(path)
    meta = json.loads(path.with_suffix(".meta.json").read_text())
    pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return SampleNet(pts, meta["epsilon"], meta["k"], meta["domain_tag"],
                     meta["validated"], meta["seed"])
