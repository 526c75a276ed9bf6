"""Gaussian kernel, discrete potentials and the control-function family.

Every function here accepts scalars or numpy arrays and broadcasts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SampleNet

# absolute tolerance for ties and bound comparisons
TIE_TOL = 1e-12


@dataclass(frozen=True)
class PotentialSpec:
    """f(r) = exp(-a r^2)."""

    a: float = 5.0
    family: str = "gaussian"

    def __post_init__(self):
        if self.family != "gaussian":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"kernel parameter a must be positive, got {self.a}")

    def to_doc(self) -> dict:
        return {"family": self.family, "a": self.a}

    @classmethod
    def from_doc(cls, doc: dict) -> "PotentialSpec":
        unknown = set(doc) - {"family", "a"}
        if unknown:
            raise ValueError(f"unknown potential keys {sorted(unknown)}")
        return cls(a=float(doc["a"]), family=doc.get("family", "gaussian"))


def eval_f(spec: PotentialSpec, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be non-negative")
    out = np.exp(-spec.a * r * r)
    return float(out) if out.ndim == 0 else out


def _f(spec, r):
    return np.exp(-spec.a * r * r)


def as_configuration(C) -> np.ndarray:
    C = np.asarray(C, dtype=float).reshape(-1, 2)
    if len(C) == 0:
        raise ValueError("configuration is empty")
    return C


def pairwise_distances(P, Q) -> np.ndarray:
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    Q = np.asarray(Q, dtype=float).reshape(-1, 2)
    return np.hypot(P[:, None, 0] - Q[None, :, 0], P[:, None, 1] - Q[None, :, 1])


def potential_U(spec: PotentialSpec, p, C):
    """Sum of f(|p - c|) over the multiset C; ``p`` may be an (n, 2) array."""
    C = as_configuration(C)
    P = np.asarray(p, dtype=float)
    single = P.ndim == 1
    U = _f(spec, pairwise_distances(P, C)).sum(axis=1)
    return float(U[0]) if single else U


def polarization_over_net(spec: PotentialSpec, net, C) -> tuple[float, np.ndarray]:
    """Minimum of U over the net and the lexicographically first minimiser.

    Values within ``TIE_TOL`` of the minimum count as ties.
    """
    pts = net.points if isinstance(net, SampleNet) else np.asarray(net, dtype=float)
    pts = pts.reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("net is empty")
    U = potential_U(spec, pts, C)
    value = float(U.min())
    ties = np.flatnonzero(U <= value + TIE_TOL)
    first = ties[np.lexsort((pts[ties, 1], pts[ties, 0]))[0]]
    return value, pts[first].copy()


def control_hat(spec: PotentialSpec, d, x):
    """One-sided change bound of f at distance d under a shift x of the distance."""
    d = np.asarray(d, dtype=float)
    x = np.asarray(x, dtype=float)
    fd = _f(spec, d)
    far = 1.0 - fd
    near = np.abs(_f(spec, np.maximum(d + x, 0.0)) - fd)
    out = np.where(x < -d, far, near)
    return float(out) if out.ndim == 0 else out


def control_g(spec: PotentialSpec, d, eps):
    """g(eps) = max(hat(eps), hat(-eps)): bounds |f(|c-p|) - f(|c-p'|)| for |p-p'| <= eps."""
    d = np.asarray(d, dtype=float)
    eps = np.asarray(eps, dtype=float)
    out = np.maximum(control_hat(spec, d, eps), control_hat(spec, d, -eps))
    return float(out) if out.ndim == 0 else out
