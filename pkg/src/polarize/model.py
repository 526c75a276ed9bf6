"""Weight matrices and max-min integer programs for the two bounding hierarchies.

An instance asks for y in {0..u_c}^Lambda with sum(y) = N maximising
min_p sum_c y_c W[c, p].  The lower instance shifts the kernel down by the
control function at the resolution of Gamma, the upper one shifts it up at
the resolution of Lambda.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ON_A, ON_CONV_A, SampleNet
from .potential import PotentialSpec, control_g, pairwise_distances

LOWER = "lower"
UPPER = "upper"


class InstanceError(ValueError):
    """The requested instance is infeasible or its nets break a precondition."""


@dataclass(frozen=True)
class MipInstance:
    weights: np.ndarray  # |Lambda| x |Gamma|
    upper_bounds: np.ndarray  # per-column cap on y
    n_points: int
    sense: str = LOWER
    binary: bool = False
    lambda_points: np.ndarray | None = None
    gamma_points: np.ndarray | None = None
    epsilon_used: float = 0.0

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.ndim != 2 or 0 in W.shape:
            raise InstanceError("weight matrix must be a non-empty 2-d array")
        u = np.array(self.upper_bounds, dtype=np.int64).reshape(-1)
        if len(u) != W.shape[0]:
            raise InstanceError("one upper bound per column of Lambda required")
        if self.n_points < 1:
            raise InstanceError("N must be at least 1")
        if np.any(u < 0):
            raise InstanceError("upper bounds must be non-negative")
        if u.sum() < self.n_points:
            raise InstanceError(f"infeasible: sum of upper bounds {u.sum()} < N = {self.n_points}")
        W.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "upper_bounds", u)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def objective(self, y) -> float:
        """min_p (W^T y)[p] for an integer vector y."""
        return float((np.asarray(y, dtype=float) @ self.weights).min())

    def is_feasible(self, y) -> bool:
        y = np.asarray(y)
        return bool(y.sum() == self.n_points and np.all(y >= 0)
                    and np.all(y <= self.upper_bounds))


def weight_matrix(spec: PotentialSpec, lam, gamma, eps: float, sign: int) -> np.ndarray:
    """W[c, p] = f(|c - p|) + sign * g(|c - p|, eps)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    L = lam.points if isinstance(lam, SampleNet) else lam
    G = gamma.points if isinstance(gamma, SampleNet) else gamma
    D = pairwise_distances(L, G)
    if 0 in D.shape:
        raise ValueError("nets must be non-empty")
    return np.exp(-spec.a * D * D) + sign * control_g(spec, D, eps)


def kernel_matrix(spec: PotentialSpec, lam, gamma) -> np.ndarray:
    L = lam.points if isinstance(lam, SampleNet) else lam
    G = gamma.points if isinstance(gamma, SampleNet) else gamma
    D = pairwise_distances(L, G)
    return np.exp(-spec.a * D * D)


def _check_tags(lam: SampleNet, gamma: SampleNet):
    if lam.domain_tag != ON_CONV_A:
        raise InstanceError(f"Lambda must be tagged {ON_CONV_A}, got {lam.domain_tag}")
    if gamma.domain_tag != ON_A:
        raise InstanceError(f"Gamma must be tagged {ON_A}, got {gamma.domain_tag}")


def build_lower_instance(spec: PotentialSpec, lam: SampleNet, gamma: SampleNet, N: int,
                         binary: bool = True) -> MipInstance:
    """Lower-bound program: kernel minus g at the covering radius of Gamma."""
    _check_tags(lam, gamma)
    if not gamma.validated:
        raise InstanceError("Gamma must be a validated net of A")
    if binary and len(lam) < N:
        raise InstanceError(f"infeasible: binary mode needs |Lambda| >= N ({len(lam)} < {N})")
    W = weight_matrix(spec, lam, gamma, gamma.epsilon, -1)
    u = np.full(len(lam), 1 if binary else N)
    return MipInstance(W, u, N, LOWER, binary, lam.points, gamma.points, gamma.epsilon)


def build_upper_instance(spec: PotentialSpec, lam: SampleNet, gamma: SampleNet, N: int,
                         binary: bool = False) -> MipInstance:
    """Upper-bound program: kernel plus g at the covering radius of Lambda.

    Binary mode is only valid when Lambda is an (eps, N)-net of conv(A).
    """
    _check_tags(lam, gamma)
    if not lam.validated:
        raise InstanceError("Lambda must be a validated net of conv(A)")
    if binary and lam.multiplicity < N:
        raise InstanceError(
            f"binary upper bound needs an (eps, N)-net: multiplicity {lam.multiplicity} < N = {N}")
    W = weight_matrix(spec, lam, gamma, lam.epsilon, +1)
    u = np.full(len(lam), 1 if binary else N)
    return MipInstance(W, u, N, UPPER, binary, lam.points, gamma.points, lam.epsilon)


def dump_instance(inst: MipInstance, path) -> None:
    """Debug dump: W as headerless CSV plus a ``.meta.json`` sidecar."""
    path = Path(path)
    np.savetxt(path, inst.weights, delimiter=",", fmt="%.17g")
    meta = {"sense": inst.sense, "N": inst.n_points, "binary": inst.binary,
            "epsilon_used": inst.epsilon_used, "n_lambda": inst.shape[0],
            "n_gamma": inst.shape[1]}
    path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
