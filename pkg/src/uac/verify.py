"""Exact verification of joint kernels.

Checks implemented here: avoidance (no diagonal mass, no stepping onto the
other token's current position), per-token uniformity against the simple
random walk rows, per-token stationary marginals, and a belief-filter
faithfulness semi-decision. All arithmetic is in exact rationals; the only
floating point lives in the optional power-iteration fallback for very
large kernels.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from uac.graphs import Graph
from uac.kernels import JointKernel

__all__ = [
    "MultipleClosedClassesError",
    "StationaryDist",
    "CheckOutcome",
    "FilterResult",
    "stationary_distribution",
    "check_avoidance",
    "check_uniformity",
    "check_marginal_stationary",
    "filter_faithfulness",
    "srw_stationary",
]

State = tuple[int, int]


class MultipleClosedClassesError(ValueError):
    """The reachable part of the kernel has no unique closed class."""

    def __init__(self, classes: list[frozenset[State]]):
        reps = ", ".join(str(min(c)) for c in classes)
        super().__init__(f"{len(classes)} closed communicating classes (representatives: {reps})")
        self.classes = classes


@dataclass(frozen=True)
class StationaryDist:
    """Stationary distribution over the kernel's states.

    ``method`` is "exact" (Fraction solve on the closed class, zeros
    elsewhere) or "iterative" (damped power iteration, float64).
    """

    probs: dict[State, Fraction]
    method: str
    closed_class: frozenset[State]

    def support(self) -> set[State]:
        return {s for s, p in self.probs.items() if p > 0}


def _reachable(k: JointKernel) -> set[State]:
    seen = {k.start}
    queue = deque([k.start])
    while queue:
        s = queue.popleft()
        for t in k.rows[s]:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return seen


def _closed_classes(k: JointKernel, states: set[State]) -> list[frozenset[State]]:
    """Closed strongly connected components of the positive-transition
    digraph restricted to ``states`` (iterative Tarjan)."""
    order = {s: i for i, s in enumerate(sorted(states))}
    succ = {s: sorted(t for t in k.rows[s] if t in states) for s in states}
    index: dict[State, int] = {}
    low: dict[State, int] = {}
    on_stack: set[State] = set()
    stack: list[State] = []
    sccs: list[list[State]] = []
    counter = 0
    for root in sorted(states, key=order.get):
        if root in index:
            continue
        work: list[tuple[State, int]] = [(root, 0)]
        while work:
            s, pi = work[-1]
            if pi == 0:
                index[s] = low[s] = counter
                counter += 1
                stack.append(s)
                on_stack.add(s)
            advanced = False
            for j in range(pi, len(succ[s])):
                t = succ[s][j]
                if t not in index:
                    work[-1] = (s, j + 1)
                    work.append((t, 0))
                    advanced = True
                    break
                if t in on_stack:
                    low[s] = min(low[s], index[t])
            if advanced:
                continue
            work.pop()
            if low[s] == index[s]:
                comp = []
                while True:
                    t = stack.pop()
                    on_stack.discard(t)
                    comp.append(t)
                    if t == s:
                        break
                sccs.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[s])
    closed = []
    for comp in sccs:
        members = set(comp)
        if all(t in members for s in comp for t in k.rows[s]):
            closed.append(frozenset(comp))
    return sorted(closed, key=min)


def _solve_exact(k: JointKernel, cls: list[State]) -> dict[State, Fraction]:
    """Gaussian elimination over Fractions for pi T = pi, sum(pi) = 1."""
    m = len(cls)
    pos = {s: i for i, s in enumerate(cls)}
    # equation 0: normalization; equation j>0: column balance at state j
    a = [[Fraction(0)] * (m + 1) for _ in range(m)]
    for i in range(m):
        a[0][i] = Fraction(1)
    a[0][m] = Fraction(1)
    for i, s in enumerate(cls):
        for t, p in k.rows[s].items():
            j = pos[t]
            if j > 0:
                a[j][i] += p
    for j in range(1, m):
        a[j][j] -= 1
    for col in range(m):
        piv = next(r for r in range(col, m) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col]
        a[col] = [v / inv for v in a[col]]
        for r in range(m):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[col])]
    return {s: a[i][m] for i, s in enumerate(cls)}


def _solve_iterative(k: JointKernel, cls: list[State], tol: float = 1e-12) -> dict[State, Fraction]:
    pos = {s: i for i, s in enumerate(cls)}
    m = len(cls)
    mat = np.zeros((m, m))
    for s in cls:
        for t, p in k.rows[s].items():
            mat[pos[s], pos[t]] = float(p)
    # damping removes periodicity without moving the fixed point
    damped = 0.5 * (mat + np.eye(m))
    x = np.full(m, 1.0 / m)
    for _ in range(1_000_000):
        nxt = x @ damped
        if np.abs(nxt - x).sum() < 0.5 * tol:
            x = nxt
            break
        x = nxt
    x /= x.sum()
    return {s: Fraction(float(x[pos[s]])) for s in cls}


def stationary_distribution(k: JointKernel, exact_limit: int = 3000) -> StationaryDist:
    """Stationary distribution of the closed class reachable from the start.

    Transient states (reachable but outside the closed class) and
    unreachable states get probability zero. Raises
    MultipleClosedClassesError when the reachable set contains more than
    one closed class, since no unique stationary behavior exists then.
    """
    reach = _reachable(k)
    closed = _closed_classes(k, reach)
    if len(closed) != 1:
        raise MultipleClosedClassesError(closed)
    cls = sorted(closed[0])
    if len(cls) <= exact_limit:
        sol = _solve_exact(k, cls)
        method = "exact"
    else:
        sol = _solve_iterative(k, cls)
        method = "iterative"
    probs = {s: sol.get(s, Fraction(0)) for s in k.states}
    return StationaryDist(probs, method, frozenset(cls))


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    witness: Optional[str] = None
    warnings: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def check_avoidance(k: JointKernel, pi: StationaryDist) -> CheckOutcome:
    """Stationary-support conditions: no diagonal mass and, from any
    support state (v, w), no transition whose X target is w. Transitions
    (v, w) -> (u, v) are explicitly fine."""
    for s in sorted(pi.support()):
        if s[0] == s[1]:
            return CheckOutcome("avoidance", False, witness=f"diagonal state {s} has positive mass")
        for t in sorted(k.rows[s]):
            if t[0] == s[1]:
                return CheckOutcome(
                    "avoidance", False,
                    witness=f"transition {s} -> {t} steps token X onto token Y",
                )
    return CheckOutcome("avoidance", True)


def _worst_vertex(got: dict[int, Fraction], want: dict[int, Fraction]) -> int:
    """Most informative witness vertex: largest deviation, excess mass first."""
    return max(
        (w for w in set(got) | set(want) if got.get(w, 0) != want.get(w, 0)),
        key=lambda w: (
            abs(got.get(w, Fraction(0)) - want.get(w, Fraction(0))),
            got.get(w, Fraction(0)),
            -w,
        ),
    )


def _uniformity_at(k: JointKernel, g: Graph, s: State) -> Optional[str]:
    x, y = s
    want_x = {w: Fraction(1, g.degree(x)) for w in g.neighbors(x)}
    want_y = {w: Fraction(1, g.degree(y)) for w in g.neighbors(y)}
    got_x = k.x_marginal(s)
    got_y = k.y_marginal(s)
    if got_x != want_x:
        w = _worst_vertex(got_x, want_x)
        return (
            f"state {s}: X marginal to {w} is {got_x.get(w, Fraction(0))}, "
            f"expected {want_x.get(w, Fraction(0))}"
        )
    if got_y != want_y:
        w = _worst_vertex(got_y, want_y)
        return (
            f"state {s}: Y marginal to {w} is {got_y.get(w, Fraction(0))}, "
            f"expected {want_y.get(w, Fraction(0))}"
        )
    return None


def check_uniformity(k: JointKernel, g: Graph, pi: StationaryDist) -> CheckOutcome:
    """Exact per-token marginals of 1/d toward every neighbor, on every
    stationary-support state. Reachable transient states are checked too
    but only produce warnings: early segments may legitimately differ."""
    support = pi.support()
    for s in sorted(support):
        problem = _uniformity_at(k, g, s)
        if problem:
            return CheckOutcome("uniformity", False, witness=problem)
    warnings = []
    for s in sorted(_reachable(k) - support):
        problem = _uniformity_at(k, g, s)
        if problem:
            warnings.append(f"transient {problem}")
    return CheckOutcome("uniformity", True, warnings=warnings)


def srw_stationary(g: Graph) -> dict[int, Fraction]:
    """Stationary law of the simple random walk: degree over total degree
    (a loop counts once)."""
    total = sum(g.degrees())
    return {v: Fraction(g.degree(v), total) for v in range(g.n)}


def check_marginal_stationary(k: JointKernel, g: Graph, pi: StationaryDist) -> CheckOutcome:
    """Both tokens' stationary position laws must equal the walk's exactly."""
    want = srw_stationary(g)
    got_x = {v: Fraction(0) for v in range(g.n)}
    got_y = {v: Fraction(0) for v in range(g.n)}
    for (x, y), p in pi.probs.items():
        got_x[x] += p
        got_y[y] += p
    for v in range(g.n):
        if got_x[v] != want[v]:
            return CheckOutcome(
                "marginal-stationary", False,
                witness=f"token X at {v}: mass {got_x[v]}, walk has {want[v]}",
            )
        if got_y[v] != want[v]:
            return CheckOutcome(
                "marginal-stationary", False,
                witness=f"token Y at {v}: mass {got_y[v]}, walk has {want[v]}",
            )
    return CheckOutcome("marginal-stationary", True)


Belief = tuple[tuple[int, Fraction], ...]


@dataclass(frozen=True)
class FilterResult:
    status: str  # "faithful" | "violation" | "inconclusive"
    token: str
    beliefs_explored: int
    history: Optional[tuple[int, ...]] = None  # observed positions, oldest first
    predicted: Optional[dict[int, Fraction]] = None
    expected: Optional[dict[int, Fraction]] = None


def filter_faithfulness(
    k: JointKernel,
    g: Graph,
    token: str = "x",
    belief_cap: int = 10_000,
    pi: Optional[StationaryDist] = None,
) -> FilterResult:
    """Semi-decide whether one observed token looks like a simple random walk.

    Watching only one token, an observer maintains an exact Bayesian belief
    about the hidden token, starting from the stationary conditional at
    each observable position. The observed token is faithful when, at every
    reachable belief, the predicted next-position law equals the walk's
    uniform row. Beliefs are explored breadth-first, so a reported
    violation carries a shortest offending observation history. If more
    than ``belief_cap`` distinct beliefs appear the check is inconclusive.

    Beliefs are kept as gcd-normalized integer vectors; matching-style
    kernels can reach 10^5 distinct beliefs before closing, so the inner
    loop avoids Fraction churn.
    """
    if token not in ("x", "y"):
        raise ValueError("token must be 'x' or 'y'")
    if pi is None:
        pi = stationary_distribution(k)
    watch_x = token == "x"

    # per (observed, hidden) state: (lcm of row denominators,
    #   [(observed', hidden', weight numerator scaled to that lcm)])
    rows: dict[State, tuple[int, list[tuple[int, int, int]]]] = {}
    for s, row in k.rows.items():
        key = s if watch_x else (s[1], s[0])
        denom = math.lcm(*(p.denominator for p in row.values()))
        entries = [
            ((t[0], t[1], p.numerator * (denom // p.denominator)) if watch_x
             else (t[1], t[0], p.numerator * (denom // p.denominator)))
            for t, p in row.items()
        ]
        rows[key] = (denom, entries)

    def normalize(nums: dict[int, int]) -> Belief:
        shrink = math.gcd(*nums.values())
        return tuple(sorted((h, n // shrink) for h, n in nums.items()))

    # initial beliefs: stationary conditionals per observed position
    by_obs: dict[int, dict[int, int]] = {}
    denom = math.lcm(*(p.denominator for p in pi.probs.values() if p > 0))
    for s, p in pi.probs.items():
        if p > 0:
            o, h = (s[0], s[1]) if watch_x else (s[1], s[0])
            weight = p.numerator * (denom // p.denominator)
            by_obs.setdefault(o, {})
            by_obs[o][h] = by_obs[o].get(h, 0) + weight

    visited: dict[tuple[int, Belief], int] = {}
    nodes: list[tuple[int, int]] = []  # (observed position, parent index)
    queue: deque[tuple[int, Belief, int]] = deque()
    for o in sorted(by_obs):
        belief = normalize(by_obs[o])
        visited[(o, belief)] = len(nodes)
        nodes.append((o, -1))
        queue.append((o, belief, len(nodes) - 1))

    def history_of(idx: int) -> tuple[int, ...]:
        out = []
        while idx != -1:
            out.append(nodes[idx][0])
            idx = nodes[idx][1]
        return tuple(reversed(out))

    while queue:
        o, belief, idx = queue.popleft()
        total = sum(n for _, n in belief)
        deg = g.degree(o)
        pred: dict[int, int] = {}
        moves: dict[int, dict[int, int]] = {}
        scale = 1  # running lcm of the row denominators seen for this belief
        for hid, num in belief:
            row_denom, entries = rows[(o, hid)]
            if row_denom != scale:
                bump = math.lcm(scale, row_denom) // scale
                if bump > 1:
                    scale *= bump
                    for key in pred:
                        pred[key] *= bump
                    for sub in moves.values():
                        for key in sub:
                            sub[key] *= bump
            factor = scale // row_denom
            for obs2, hid2, w in entries:
                c = num * w * factor
                pred[obs2] = pred.get(obs2, 0) + c
                sub = moves.setdefault(obs2, {})
                sub[hid2] = sub.get(hid2, 0) + c
        # faithful step: pred must be exactly 1/deg on each neighbor of o
        full = total * scale
        want_nbrs = g.neighbors(o)
        if set(pred) != set(want_nbrs) or any(pred[w] * deg != full for w in want_nbrs):
            return FilterResult(
                "violation", token, len(visited),
                history=history_of(idx),
                predicted={w: Fraction(c, full) for w, c in sorted(pred.items())},
                expected={w: Fraction(1, deg) for w in want_nbrs},
            )
        for obs2 in sorted(moves):
            nxt = normalize(moves[obs2])
            key = (obs2, nxt)
            if key not in visited:
                if len(visited) >= belief_cap:
                    return FilterResult("inconclusive", token, len(visited))
                visited[key] = len(nodes)
                nodes.append((obs2, idx))
                queue.append((obs2, nxt, len(nodes) - 1))
    return FilterResult("faithful", token, len(visited))
