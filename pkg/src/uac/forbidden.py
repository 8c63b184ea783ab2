"""Forbidden-state analysis: decide UAC admissibility and extract kernels.

A state (x, y) is *forbidden* when no uniform avoidance coupling of two
simple random walks on the graph can give it positive stationary mass.
Generation zero holds the diagonal and all adjacent pairs; each refinement
round then removes pairs whose neighborhood flow test fails against the
current forbidden set, until a fixed point F is reached. The graph admits a
UAC iff F is not all of V x V, and in that case explicit kernels fall out
of the per-pair maximum flows (or, on regular graphs, out of per-pair
perfect matchings for the minimum-entropy variant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from uac.flow import FlowNetwork, aligned_matching
from uac.graphs import Graph
from uac.kernels import JointKernel

__all__ = [
    "PairTestResult",
    "ClosureTrace",
    "Verdict",
    "initial_forbidden",
    "pair_test",
    "refine_once",
    "forbidden_closure",
    "survivors",
    "admits_uac",
    "extract_uac_kernel",
    "minimum_entropy_kernel",
]

State = tuple[int, int]
PairSet = frozenset[State]


def initial_forbidden(g: Graph) -> PairSet:
    """Generation zero: the diagonal plus every adjacent ordered pair."""
    forbidden = {(v, v) for v in range(g.n)}
    for u, v in g.edges:
        forbidden.add((u, v))
        forbidden.add((v, u))
    return frozenset(forbidden)


@dataclass(frozen=True)
class PairTestResult:
    """Outcome of the neighborhood flow test for one ordered pair."""

    passed: bool
    l: int  # lcm(d(x), d(y)); the flow value required to pass
    value: int  # max-flow value actually achieved
    flow: dict[State, int]  # units routed on each middle arc (x', y')


def _ring_order(vertices, anchor: int, n: int) -> list[int]:
    """Sort vertices by cyclic offset from ``anchor``.

    Pair-test nodes are enumerated in this order rather than by raw label:
    it makes the deterministic augmentation equivariant under vertex
    rotations, so on circulant graphs the extracted kernels preserve a
    single token distance instead of splitting into two closed orbits.
    """
    return sorted(vertices, key=lambda v: (v - anchor) % n)


def pair_test(g: Graph, forbidden: PairSet, x: int, y: int) -> PairTestResult:
    """Flow test for (x, y) against the current forbidden set.

    Bipartite network between N(x) and N(y): a vertex adjacent to both gets
    a copy on each side, and the two copies of one vertex are never joined
    (the ghost-edge rule; the diagonal of ``forbidden`` enforces the same).
    Middle arc (x', y') exists iff (x', y') is not forbidden, with capacity
    d(y); the source feeds each left node l/d(x) and each right node drains
    l/d(y) into the sink, l = lcm(d(x), d(y)). The pair passes iff the
    maximum flow saturates all terminal arcs, i.e. equals l.
    """
    if (x, y) in forbidden:
        raise ValueError(f"pair ({x}, {y}) is already forbidden")
    left = _ring_order(g.neighbors(x), x, g.n)
    right = _ring_order(g.neighbors(y), y, g.n)
    dx, dy = len(left), len(right)
    l = math.lcm(dx, dy)
    net = FlowNetwork(dx + dy + 2, 0, dx + dy + 1)
    for i in range(dx):
        net.add_arc(0, 1 + i, l // dx)
    middle: list[tuple[int, State]] = []
    for i, xp in enumerate(left):
        for j, yp in enumerate(right):
            if xp != yp and (xp, yp) not in forbidden:
                arc = net.add_arc(1 + i, 1 + dx + j, dy)
                middle.append((arc, (xp, yp)))
    for j in range(dy):
        net.add_arc(1 + dx + j, dx + dy + 1, l // dy)
    result = net.max_flow()
    flow = {pair: result.flow[arc] for arc, pair in middle if result.flow[arc] > 0}
    return PairTestResult(result.value == l, l, result.value, flow)


def refine_once(g: Graph, forbidden: PairSet) -> PairSet:
    """One synchronous generation: every surviving pair is tested against
    the same incoming set, and the failures are added."""
    added = set()
    for x in range(g.n):
        for y in range(g.n):
            if (x, y) in forbidden:
                continue
            if not pair_test(g, forbidden, x, y).passed:
                added.add((x, y))
    return frozenset(forbidden | added) if added else forbidden


@dataclass(frozen=True)
class ClosureTrace:
    """Generations F0, F1, ... of the refinement; the last two are equal."""

    generations: list[PairSet]
    rounds: int

    @property
    def fixed_point(self) -> PairSet:
        return self.generations[-1]


@dataclass(frozen=True)
class Verdict:
    admits: bool
    witness: Optional[State]  # lexicographically smallest surviving pair


def forbidden_closure(g: Graph) -> ClosureTrace:
    """Iterate refine_once to its fixed point, recording every generation."""
    generations = [initial_forbidden(g)]
    while True:
        nxt = refine_once(g, generations[-1])
        generations.append(nxt)
        if nxt == generations[-2]:
            return ClosureTrace(generations, len(generations) - 1)


def survivors(g: Graph, forbidden: PairSet) -> list[State]:
    return [
        (x, y)
        for x in range(g.n)
        for y in range(g.n)
        if (x, y) not in forbidden
    ]


def admits_uac(g: Graph) -> Verdict:
    """Connected graphs only: admits iff the fixed point is not all pairs."""
    if not g.is_connected():
        raise ValueError("UAC analysis requires a connected graph")
    alive = survivors(g, forbidden_closure(g).fixed_point)
    return Verdict(bool(alive), min(alive) if alive else None)


def _default_start(g: Graph, forbidden: PairSet) -> State:
    alive = survivors(g, forbidden)
    if not alive:
        raise ValueError("no surviving pair: the graph admits no UAC")
    return min(alive)


def extract_uac_kernel(g: Graph, trace: ClosureTrace, start: Optional[State] = None) -> JointKernel:
    """Kernel from the fixed-point flows, restricted to the set reachable
    from ``start``: each transition (x,y) -> (x',y') carries flow/l."""
    forbidden = trace.fixed_point
    if start is None:
        start = _default_start(g, forbidden)
    if start in forbidden:
        raise ValueError(f"start state {start} is forbidden")
    rows: dict[State, dict[State, Fraction]] = {}
    stack = [start]
    while stack:
        s = stack.pop()
        if s in rows:
            continue
        test = pair_test(g, forbidden, s[0], s[1])
        if not test.passed:
            raise RuntimeError(f"fixed point is not stable: {s} fails its own test")
        rows[s] = {t: Fraction(units, test.l) for t, units in test.flow.items()}
        for t in rows[s]:
            if t not in rows:
                stack.append(t)
    return JointKernel(g, start, rows)


def minimum_entropy_kernel(
    g: Graph, trace: ClosureTrace, start: Optional[State] = None
) -> JointKernel:
    """Kernel for regular graphs where token Y's move is a function of X's.

    For each reachable surviving pair (x, y) a perfect matching between
    N(x) and N(y) is chosen among the non-forbidden target pairs; token X
    walks uniformly and Y steps to the matched partner, so every transition
    has probability 1/k.
    """
    if not g.is_regular():
        raise ValueError("minimum-entropy kernels require a regular graph")
    k = g.degree(0)
    forbidden = trace.fixed_point
    if start is None:
        start = _default_start(g, forbidden)
    if start in forbidden:
        raise ValueError(f"start state {start} is forbidden")
    rows: dict[State, dict[State, Fraction]] = {}
    stack = [start]
    while stack:
        x, y = s = stack.pop()
        if s in rows:
            continue
        left = _ring_order(g.neighbors(x), x, g.n)
        right = _ring_order(g.neighbors(y), y, g.n)
        matching = aligned_matching(
            left, right, lambda xp, yp: xp != yp and (xp, yp) not in forbidden
        )
        if len(matching) != k:
            raise RuntimeError(f"no perfect matching for surviving pair {s}")
        rows[s] = {(left[i], right[j]): Fraction(1, k) for i, j in matching.items()}
        for t in rows[s]:
            if t not in rows:
                stack.append(t)
    return JointKernel(g, start, rows)
