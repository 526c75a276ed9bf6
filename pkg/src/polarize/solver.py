"""Exact solver for the max-min selection programs built in :mod:`polarize.model`.

The branch-and-bound tree enumerates the multiset of selected columns in
index order, so every node fixes a prefix of picks and leaves a suffix of
columns open.  Node bounds are Lagrangian: for a probability vector lam over
the rows, ``min_p (W^T y)[p] <= lam . (W^T y)`` and the right-hand side is
maximised over the open picks by sorting.  lam is tuned per node by
projected subgradient steps warm-started from the parent.  Nodes with two
picks left are solved exactly by screening candidate pairs, first with the
Lagrangian bound, then on a small set of rows that were binding before.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import InstanceError, MipInstance
from .potential import PotentialSpec, control_g

OPTIMAL = "optimal"
GAP_LIMIT = "gap-limit"
TIME_LIMIT = "time-limit"
INFEASIBLE = "infeasible"

MAX_ENUMERATION = 10 ** 6
# pairs screened per block in the two-picks-left solve
PAIR_BLOCK = 1 << 21
MAX_CRITICAL_ROWS = 256


class InfeasibleError(InstanceError):
    pass


@dataclass
class BoundReport:
    value: float
    y: np.ndarray
    dual_lambda: np.ndarray
    dual_bound: float
    gap: float
    nodes_explored: int
    wall_time: float
    status: str
    sense: str = ""
    n_points: int = 0
    binary: bool = False
    epsilon_used: float = 0.0
    lambda_points: np.ndarray | None = field(default=None, repr=False)

    @property
    def configuration(self) -> np.ndarray:
        """Rows (x, y, count) for every selected site."""
        idx = np.flatnonzero(self.y)
        if self.lambda_points is None:
            return np.column_stack([idx, np.full(len(idx), np.nan), self.y[idx]])
        P = self.lambda_points[idx]
        return np.column_stack([P, self.y[idx]])

    @property
    def points(self) -> np.ndarray:
        """The configuration as an (N, 2) multiset."""
        if self.lambda_points is None:
            raise ValueError("instance carries no point coordinates")
        return np.repeat(self.lambda_points, self.y, axis=0)

    def to_record(self) -> dict:
        rows = [] if self.lambda_points is None else [
            [float(x), float(yy), int(k)] for x, yy, k in self.configuration]
        return {
            "value": self.value,
            "gap": self.gap,
            "status": self.status,
            "nodes": self.nodes_explored,
            "wall_ms": round(self.wall_time * 1000, 3),
            "sense": self.sense,
            "N": self.n_points,
            "binary": self.binary,
            "epsilon_used": self.epsilon_used,
            "dual_bound": self.dual_bound,
            "configuration": rows,
            "selected": [int(i) for i in np.flatnonzero(self.y)],
            "dual_lambda": [float(v) for v in self.dual_lambda],
        }


def _report(inst, y, lam, bound, nodes, t0, status) -> BoundReport:
    value = inst.objective(y)
    return BoundReport(value=value, y=np.asarray(y, dtype=np.int64), dual_lambda=lam,
                       dual_bound=float(bound), gap=max(0.0, float(bound) - value),
                       nodes_explored=nodes, wall_time=time.perf_counter() - t0,
                       status=status, sense=inst.sense, n_points=inst.n_points,
                       binary=inst.binary, epsilon_used=inst.epsilon_used,
                       lambda_points=inst.lambda_points)


# ---------------------------------------------------------------------------
# reference solvers

def count_selections(caps, N: int) -> int:
    """Number of integer y with 0 <= y <= caps and sum(y) = N."""
    ways = [1] + [0] * N
    for u in caps:
        u = min(int(u), N)
        new = [0] * (N + 1)
        acc = 0
        for t in range(N + 1):
            acc += ways[t]
            if t - u - 1 >= 0:
                acc -= ways[t - u - 1]
            new[t] = acc
        ways = new
    return ways[N]


def brute_force_oracle(inst: MipInstance, limit: int = MAX_ENUMERATION) -> BoundReport:
    """Exhaustive enumeration of all feasible multisets."""
    t0 = time.perf_counter()
    n, m = inst.shape
    N = inst.n_points
    u = inst.upper_bounds
    total = count_selections(u, N)
    if total > limit:
        raise InstanceError(f"instance too large to enumerate: {total} selections > {limit}")
    W = inst.weights
    best_val, best = -math.inf, None
    gen = (c for c in itertools.combinations_with_replacement(range(n), N)
           if all(c.count(j) <= u[j] for j in set(c)))
    while True:
        block = list(itertools.islice(gen, 20000))
        if not block:
            break
        idx = np.asarray(block)
        vals = W[idx].sum(axis=1).min(axis=1)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best = vals[k], block[k]
    y = np.bincount(best, minlength=n)
    lam = np.full(m, 1.0 / m)
    return _report(inst, y, lam, inst.objective(y), total, t0, OPTIMAL)


def greedy_incumbent(inst: MipInstance) -> tuple[np.ndarray, float]:
    """Add the column that maximises the resulting minimum row sum, N times."""
    W = inst.weights
    n, m = W.shape
    cap = inst.upper_bounds.astype(np.int64).copy()
    y = np.zeros(n, dtype=np.int64)
    cur = np.zeros(m)
    for _ in range(inst.n_points):
        vals = (cur[None, :] + W).min(axis=1)
        vals[cap <= 0] = -np.inf
        c = int(np.argmax(vals))  # first maximiser: lexicographic tie-break
        y[c] += 1
        cap[c] -= 1
        cur = cur + W[c]
    return y, inst.objective(y)


def _swap_search(inst: MipInstance, y: np.ndarray, max_rounds: int = 50) -> np.ndarray:
    """Replace one pick at a time by the best alternative until nothing improves."""
    W = inst.weights
    u = inst.upper_bounds
    y = y.copy()
    best = inst.objective(y)
    for _ in range(max_rounds):
        improved = False
        for c in np.flatnonzero(y):
            if y[c] == 0:
                continue
            y[c] -= 1
            base = y @ W
            vals = (base[None, :] + W).min(axis=1)
            vals[y >= u] = -np.inf
            k = int(np.argmax(vals))
            if vals[k] > best + 1e-12:
                y[k] += 1
                best = inst.objective(y)
                improved = True
            else:
                y[c] += 1
        if not improved:
            break
    return y


# ---------------------------------------------------------------------------
# Lagrangian bound

def _check_lambda(lam, m):
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if len(lam) != m:
        raise ValueError(f"lambda must have {m} entries, got {len(lam)}")
    if np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-9:
        raise ValueError("lambda must be a probability vector")
    return lam


def _capped_top(s: np.ndarray, caps: np.ndarray, r: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Best sum of r scores with column j usable caps[j] times.

    Returns (sum, columns, multiplicities).
    """
    if r <= 0:
        return 0.0, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    avail = np.flatnonzero(caps > 0)
    sa = s[avail]
    if r < len(sa):
        part = np.argpartition(-sa, r - 1)[:r]
    else:
        part = np.arange(len(sa))
    order = part[np.lexsort((avail[part], -sa[part]))]
    cols, mult, total, left = [], [], 0.0, r
    for j in order:
        c = avail[j]
        take = min(int(caps[c]), left)
        cols.append(c)
        mult.append(take)
        total += take * s[c]
        left -= take
        if left == 0:
            break
    if left:
        return -math.inf, np.asarray(cols), np.asarray(mult)
    return total, np.asarray(cols, dtype=np.int64), np.asarray(mult, dtype=np.int64)


def dual_bound(inst: MipInstance, lam) -> float:
    """Weak-duality bound max_y lam . (W^T y) >= optimum, by sorting column scores."""
    lam = _check_lambda(lam, inst.shape[1])
    s = inst.weights @ lam
    return _capped_top(s, inst.upper_bounds, inst.n_points)[0]


def project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.nonzero(u - css / np.arange(1, len(u) + 1) > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


def _optimize_lambda(Wsub, caps, base, r, lam, target, iters):
    """Projected subgradient (Polyak steps towards ``target``) on
    phi(lam) = lam . base + capped_top(Wsub @ lam, r).

    Returns the best (phi, lam) seen; stops early once phi <= target.
    """
    best_val, best_lam = math.inf, lam
    for t in range(iters + 1):
        s = Wsub @ lam
        top, cols, mult = _capped_top(s, caps, r)
        val = lam @ base + top
        if val < best_val:
            best_val, best_lam = val, lam
        if best_val <= target or t == iters:
            break
        grad = base + mult @ Wsub[cols]
        centred = grad - grad.mean()
        nrm = centred @ centred
        if nrm < 1e-18:
            break
        step = (val - target) / nrm + 1e-3 / ((t + 1) * math.sqrt(nrm))
        lam = project_simplex(lam - step * grad)
    return best_val, best_lam


# ---------------------------------------------------------------------------
# branch and bound

class _Search:
    def __init__(self, inst, tolerance, deadline, dual_iters):
        self.inst = inst
        self.W = inst.weights
        self.u = inst.upper_bounds
        self.N = inst.n_points
        self.tol = tolerance
        self.deadline = deadline
        self.dual_iters = dual_iters
        self.inc_val = -math.inf
        self.inc_picks: tuple = ()
        self.crit: list[int] = []
        self.crit_set: set[int] = set()
        self.timed_out = False

    def out_of_time(self) -> bool:
        if self.deadline is not None and time.perf_counter() > self.deadline:
            self.timed_out = True
        return self.timed_out

    def offer(self, picks: tuple) -> None:
        y = np.bincount(np.asarray(picks, dtype=np.int64), minlength=len(self.u))
        val = self.inst.objective(y)
        if val > self.inc_val:
            self.inc_val, self.inc_picks = val, tuple(sorted(picks))

    def add_critical(self, rows) -> None:
        for r in rows:
            r = int(r)
            if r not in self.crit_set and len(self.crit) < MAX_CRITICAL_ROWS:
                self.crit.append(r)
                self.crit_set.add(r)

    def node_frame(self, picks, start):
        """Open suffix of columns with remaining caps, and the fixed row sums."""
        caps = self.u[start:].astype(np.int64).copy()
        if picks and picks[-1] == start:
            caps[0] -= picks.count(start)
        base = self.W[list(picks)].sum(axis=0) if picks else np.zeros(self.W.shape[1])
        return caps, base

    # -- exact leaves -------------------------------------------------------

    def solve_one(self, picks, start, caps, base):
        ok = np.flatnonzero(caps > 0)
        if not len(ok):
            return
        vals = (base[None, :] + self.W[start + ok]).min(axis=1)
        k = int(np.argmax(vals))
        if vals[k] > self.inc_val:
            self.offer(picks + (start + int(ok[k]),))

    def solve_two(self, picks, start, caps, base, lam):
        Wsub = self.W[start:]
        s = Wsub @ lam
        lb = float(lam @ base)
        avail = np.flatnonzero(caps > 0)
        order = avail[np.lexsort((avail, -s[avail]))]
        ss = s[order]
        thr = self.inc_val + self.tol - lb
        # partner counts: positions b with ss[b] > thr - ss[a]
        counts = np.searchsorted(-ss, -(thr - ss), side="left")
        counts[ss + ss[0] <= thr] = 0
        a = 0
        while a < len(order) and counts[a] > 0:
            if self.out_of_time():
                return
            cum = np.cumsum(counts[a:])
            stop = a + max(1, int(np.searchsorted(cum, PAIR_BLOCK)))
            nb = counts[a:stop]
            tot = int(nb.sum())
            off = np.repeat(np.cumsum(nb) - nb, nb)
            I = np.repeat(order[a:stop], nb)
            J = order[np.arange(tot) - off]
            keep = (J > I) | ((J == I) & (caps[I] >= 2))
            self._screen_pairs(picks, start, base, Wsub, I[keep], J[keep])
            a = stop
            # incumbent may have improved: tighten the remaining partner counts
            thr = self.inc_val + self.tol - lb
            counts = np.searchsorted(-ss, -(thr - ss), side="left")
            counts[ss + ss[0] <= thr] = 0

    def _screen_pairs(self, picks, start, base, Wsub, I, J):
        while len(I):
            if self.out_of_time():
                return
            if self.crit:
                rows = np.asarray(self.crit)
                Wr = Wsub[:, rows]
                pre = (base[rows][None, :] + Wr[I] + Wr[J]).min(axis=1)
                alive = pre > self.inc_val + self.tol
                I, J, pre = I[alive], J[alive], pre[alive]
                if not len(I):
                    return
                pick = np.argsort(-pre, kind="stable")[:64]
            else:
                pick = np.arange(min(64, len(I)))
            full = base[None, :] + Wsub[I[pick]] + Wsub[J[pick]]
            vals = full.min(axis=1)
            k = int(np.argmax(vals))
            if vals[k] > self.inc_val:
                self.offer(picks + (start + int(I[pick[k]]), start + int(J[pick[k]])))
            self.add_critical(np.argmin(full, axis=1))
            if not self.crit:
                return
            rest = np.ones(len(I), dtype=bool)
            rest[pick] = False
            I, J = I[rest], J[rest]

    # -- children of nodes with three or more picks left ---------------------

    def children(self, picks, start, caps, lb, s, r):
        """Bound each child (next pick = column i) with the node's lam."""
        k = r - 1
        top: list[float] = []  # k largest remaining scores, descending
        out = []
        for i in range(len(s) - 1, -1, -1):
            if caps[i] <= 0:
                continue
            extra = sorted(top + [s[i]] * min(int(caps[i]) - 1, k), reverse=True)[:k]
            if len(extra) == k:
                out.append((lb + s[i] + sum(extra), i))
            top = sorted(top + [s[i]] * min(int(caps[i]), k), reverse=True)[:k]
        out.reverse()
        kids = []
        for bound, i in out:
            col = start + i
            next_start = col if caps[i] >= 2 else col + 1
            kids.append((bound, picks + (col,), next_start))
        return kids


def solve_bnb(inst: MipInstance, tolerance: float = 1e-9, time_limit: float | None = None,
              *, gap_limit: float | None = None, dual_iters: int = 50,
              root_iters: int = 500) -> BoundReport:
    """Best-bound-first branch and bound, exact up to ``tolerance``."""
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    t0 = time.perf_counter()
    n, m = inst.shape
    if int(inst.upper_bounds.sum()) < inst.n_points:
        raise InfeasibleError("sum of upper bounds is below N")
    deadline = None if time_limit is None else t0 + time_limit
    S = _Search(inst, tolerance, deadline, dual_iters)

    y0, _ = greedy_incumbent(inst)
    y0 = _swap_search(inst, y0)
    S.offer(tuple(np.repeat(np.arange(n), y0)))
    S.add_critical(np.flatnonzero(y0 @ inst.weights <= S.inc_val + 1e-12)[:8])

    lam0 = np.full(m, 1.0 / m)
    caps, base = S.node_frame((), 0)
    root_bound, root_lam = _optimize_lambda(inst.weights, caps, base, inst.n_points, lam0,
                                            S.inc_val + tolerance, root_iters)
    # the root lam certifies the whole problem
    cert_lam = root_lam

    heap = [(-root_bound, 0, (), 0, root_lam)]
    counter = itertools.count(1)
    nodes = 0
    pruned_max = -math.inf
    status = OPTIMAL
    inflight = -math.inf
    while heap:
        if S.out_of_time():
            status = TIME_LIMIT
            break
        neg, _, picks, start, lam = heap[0]
        bound = -neg
        if bound <= S.inc_val + tolerance:
            break
        if gap_limit is not None and bound - S.inc_val <= gap_limit:
            status = GAP_LIMIT
            break
        heapq.heappop(heap)
        inflight = bound
        nodes += 1
        r = inst.n_points - len(picks)
        caps, base = S.node_frame(picks, start)
        if r == 1:
            S.solve_one(picks, start, caps, base)
            continue
        Wsub = inst.weights[start:]
        val, lam = _optimize_lambda(Wsub, caps, base, r, lam, S.inc_val + tolerance, dual_iters)
        if val <= S.inc_val + tolerance:
            pruned_max = max(pruned_max, val)
            continue
        if r == 2:
            S.solve_two(picks, start, caps, base, lam)
            continue
        s = Wsub @ lam
        for cb, kid, nxt in S.children(picks, start, caps, float(lam @ base), s, r):
            if cb > S.inc_val + tolerance:
                heapq.heappush(heap, (-cb, next(counter), kid, nxt, lam))
            else:
                pruned_max = max(pruned_max, cb)

    open_bound = -heap[0][0] if heap else -math.inf
    if S.timed_out:
        status = TIME_LIMIT
        # the node being processed when time ran out is still open
        open_bound = max(open_bound, inflight)
    y = np.bincount(np.asarray(S.inc_picks, dtype=np.int64), minlength=n)
    value = inst.objective(y)
    best_bound = max(value, open_bound, pruned_max)
    return _report(inst, y, cert_lam, best_bound, nodes, t0, status)


# ---------------------------------------------------------------------------
# solver-versus-enumeration suite

def random_instance(seed: int, max_lambda: int = 10, max_gamma: int = 8,
                    max_n: int = 3) -> MipInstance:
    """Small seeded instance; even seeds are binary, odd seeds integer.

    Every third seed draws an unstructured weight matrix, the others a
    Gaussian kernel between random sites with a random control shift.
    """
    rng = np.random.default_rng(seed)
    binary = seed % 2 == 0
    N = int(rng.integers(1, max_n + 1))
    n = int(rng.integers(N if binary else 1, max_lambda + 1))
    m = int(rng.integers(1, max_gamma + 1))
    if seed % 3 == 0:
        W = rng.uniform(-0.5, 1.5, size=(n, m))
    else:
        L = rng.uniform(0, 1, size=(n, 2))
        G = rng.uniform(0, 1, size=(m, 2))
        D = np.hypot(*(L[:, None, :] - G[None, :, :]).transpose(2, 0, 1))
        a = rng.uniform(1, 10)
        eps = rng.uniform(0.01, 0.2)
        spec = PotentialSpec(a)
        sign = 1 if rng.integers(2) else -1
        W = np.exp(-a * D * D) + sign * control_g(spec, D, eps)
    u = np.full(n, 1 if binary else N)
    return MipInstance(W, u, N, binary=binary)


def run_oracle_suite(seeds: int, tolerance: float = 1e-9) -> list[tuple[int, float, float, bool]]:
    """(seed, oracle value, solver value, match) for seeds 0..seeds-1."""
    rows = []
    for seed in range(seeds):
        inst = random_instance(seed)
        ref = brute_force_oracle(inst).value
        got = solve_bnb(inst, tolerance).value
        rows.append((seed, ref, got, abs(ref - got) <= tolerance))
    return rows
