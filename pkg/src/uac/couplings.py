"""Constructors for every named joint-kernel family.

Each function returns a JointKernel with exact rational transitions. The
families: fixed-distance rotation on a cycle, coordinate flip on a
hypercube, automorphism tracking, the three-case bipartite coupling, the
cluster construction on complete graphs (via explicit half-steps), the
looped-K3 coupling, complement tracking on (n-2)- and (n-3)-regular graphs,
per-pair matchings on strongly regular graphs, and a deliberately
history-correlated process on a spider tree used as a negative control.

Constructors that need a start state default to the lexicographically
smallest valid one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from uac.flow import aligned_matching
from uac.graphs import (
    Graph,
    bipartition,
    common_neighbors,
    complement,
    complete,
    complete_with_loops,
    cycle as build_cycle,
    hypercube as build_hypercube,
    srg_parameters,
    validate_free_automorphism,
)
from uac.kernels import JointKernel

__all__ = [
    "HalfStep",
    "fixed_distance_cycle",
    "hypercube_flip",
    "automorphism_coupling",
    "bipartite_coupling",
    "compose_super_markovian",
    "cluster_coupling_complete",
    "k3_loops_coupling",
    "near_complete_regular_coupling",
    "srg_matching_coupling",
    "tree_noncoupling_example",
    "spider_graph",
]

State = tuple[int, int]


def _close_states(
    start: State, row_of: Callable[[State], dict[State, Fraction]]
) -> dict[State, dict[State, Fraction]]:
    """Depth-first closure of the state set under positive transitions."""
    rows: dict[State, dict[State, Fraction]] = {}
    stack = [start]
    while stack:
        s = stack.pop()
        if s in rows:
            continue
        rows[s] = row_of(s)
        for t in rows[s]:
            if t not in rows:
                stack.append(t)
    return rows


def fixed_distance_cycle(n: int, d: int) -> JointKernel:
    """Both tokens move the same direction on C_n, a fair coin per step;
    the clockwise distance d from X to Y never changes."""
    if n < 4:
        raise ValueError("fixed-distance coupling needs a cycle with n >= 4")
    if not 2 <= d <= n - 2:
        raise ValueError(f"offset d={d} leaves the tokens adjacent or equal on C_{n}")
    g = build_cycle(n)
    rows = {
        (i, (i + d) % n): {
            ((i + 1) % n, (i + d + 1) % n): Fraction(1, 2),
            ((i - 1) % n, (i + d - 1) % n): Fraction(1, 2),
        }
        for i in range(n)
    }
    return JointKernel(g, (0, d), rows)


def hypercube_flip(dim: int) -> JointKernel:
    """Tokens at bitwise-complement vertices of the dim-cube; one uniformly
    random coordinate is flipped for both."""
    if dim < 2:
        raise ValueError("hypercube flip coupling needs dim >= 2")
    g = build_hypercube(dim)
    mask = (1 << dim) - 1
    rows = {
        (v, v ^ mask): {
            (v ^ (1 << b), (v ^ (1 << b)) ^ mask): Fraction(1, dim) for b in range(dim)
        }
        for v in range(1 << dim)
    }
    return JointKernel(g, (0, mask), rows)


def automorphism_coupling(g: Graph, phi: list[int], start_x: int = 0) -> JointKernel:
    """X walks; Y tracks phi(X) for a fixed-point-free non-adjacent
    automorphism phi."""
    if not validate_free_automorphism(g, phi):
        raise ValueError("phi is not an automorphism with phi(v) != v and phi(v) !~ v for all v")
    if not 0 <= start_x < g.n:
        raise ValueError("start_x out of range")

    def row_of(s: State) -> dict[State, Fraction]:
        v = s[0]
        d = g.degree(v)
        return {(w, phi[w]): Fraction(1, d) for w in g.neighbors(v)}

    start = (start_x, phi[start_x])
    return JointKernel(g, start, _close_states(start, row_of))


def bipartite_coupling(g: Graph, start: Optional[State] = None) -> JointKernel:
    """Same-side coupling on a bipartite graph with all degrees >= 2.

    From a state (x, y) on one side, with c = |N(x) & N(y)| common
    neighbors, the next state (x', y') has probability
      c = 0:  1/(d(x)d(y))                            (independent moves)
      c >= 2: c/(d(x)d(y)(c-1)) when both targets are common, x' != y';
              1/(d(x)d(y)) for every other x' ~ x, y' ~ y, x' != y'
      c = 1:  with z the common neighbor and x', y' != z:
              (z, y') gets 1/(d(x)(d(y)-1)); (x', z) gets 1/(d(y)(d(x)-1));
              (x', y') gets 1/(d(x)d(y)) - 1/(d(x)d(y)(d(x)-1)(d(y)-1)).
    """
    if not g.is_connected():
        raise ValueError("bipartite coupling requires a connected graph")
    side = bipartition(g)
    if side is None:
        raise ValueError("graph is not bipartite")
    if min(g.degrees()) < 2:
        raise ValueError("bipartite coupling requires every degree >= 2")
    if start is None:
        start = next(
            (x, y)
            for x in range(g.n)
            for y in range(g.n)
            if x != y and side[x] == side[y]
        )
    x0, y0 = start
    if x0 == y0 or side[x0] != side[y0]:
        raise ValueError("start must be two distinct vertices on the same side")

    def row_of(s: State) -> dict[State, Fraction]:
        x, y = s
        dx, dy = g.degree(x), g.degree(y)
        shared = common_neighbors(g, x, y)
        c = len(shared)
        row: dict[State, Fraction] = {}
        if c == 0:
            p = Fraction(1, dx * dy)
            for xp in g.neighbors(x):
                for yp in g.neighbors(y):
                    row[(xp, yp)] = p
        elif c == 1:
            z = next(iter(shared))
            for yp in g.neighbors(y):
                if yp != z:
                    row[(z, yp)] = Fraction(1, dx * (dy - 1))
            for xp in g.neighbors(x):
                if xp != z:
                    row[(xp, z)] = Fraction(1, dy * (dx - 1))
            p = Fraction(1, dx * dy) - Fraction(1, dx * dy * (dx - 1) * (dy - 1))
            if p != 0:
                for xp in g.neighbors(x):
                    for yp in g.neighbors(y):
                        if xp != z and yp != z:
                            row[(xp, yp)] = p
        else:
            p_common = Fraction(c, dx * dy * (c - 1))
            p_other = Fraction(1, dx * dy)
            for xp in g.neighbors(x):
                for yp in g.neighbors(y):
                    if xp == yp:
                        continue
                    row[(xp, yp)] = p_common if (xp in shared and yp in shared) else p_other
        return row

    return JointKernel(g, start, _close_states(start, row_of))


@dataclass(frozen=True)
class HalfStep:
    """Tabulated two-phase move: X steps first, then Y sees X's new spot.

    ``move_x[(x_t, y_t)]`` is the distribution of x_{t+1};
    ``move_y[(x_{t+1}, y_t)]`` is the distribution of y_{t+1}. Every listed
    row must sum to exactly 1.
    """

    graph: Graph
    start: State
    move_x: dict[State, dict[int, Fraction]]
    move_y: dict[tuple[int, int], dict[int, Fraction]]

    def validate(self) -> None:
        for key, row in self.move_x.items():
            if sum(row.values(), Fraction(0)) != 1:
                raise ValueError(f"X half-step row {key} does not sum to 1")
        for key, row in self.move_y.items():
            if sum(row.values(), Fraction(0)) != 1:
                raise ValueError(f"Y half-step row {key} does not sum to 1")


def compose_super_markovian(h: HalfStep) -> JointKernel:
    """Product kernel T[(x,y) -> (x',y')] = move_x(x' | x,y) * move_y(y' | x',y).

    Summing the product over y' recovers move_x exactly, so the X half-step
    is the kernel's X-marginal row by row.
    """
    h.validate()
    rows: dict[State, dict[State, Fraction]] = {}
    for (x, y), fx in h.move_x.items():
        row: dict[State, Fraction] = {}
        for xp, pf in fx.items():
            if pf == 0:
                continue
            gy = h.move_y.get((xp, y))
            if gy is None:
                raise ValueError(f"missing Y half-step row for ({xp}, {y})")
            for yp, pg in gy.items():
                if pg == 0:
                    continue
                t = (xp, yp)
                row[t] = row.get(t, Fraction(0)) + pf * pg
        rows[(x, y)] = row
    return JointKernel(h.graph, h.start, rows)


def cluster_coupling_complete(a: int, b: int) -> tuple[HalfStep, JointKernel]:
    """Cluster construction on the complete graph K_{ab}.

    Vertices are split into b clusters of size a (cluster j is
    {j*a, ..., j*a + a - 1}); states are cross-cluster ordered pairs. X
    jumps to Y's cluster with probability a(b-1)/(ab-1), else stays in its
    own, choosing an unoccupied vertex uniformly; Y then leaves its cluster
    iff X just arrived there. Every composed transition comes out at
    1/((ab-1)(a-1)) or 0.
    """
    if a < 2 or b < 2:
        raise ValueError("cluster coupling needs a >= 2 and b >= 2")
    n = a * b
    g = complete(n)

    def clu(v: int) -> int:
        return v // a

    p_jump = Fraction(a * (b - 1), (a * b - 1) * (a - 1))
    p_stay = Fraction(1, a * b - 1)
    move_x: dict[State, dict[int, Fraction]] = {}
    move_y: dict[tuple[int, int], dict[int, Fraction]] = {}
    for x in range(n):
        for y in range(n):
            if clu(x) == clu(y):
                continue
            fx: dict[int, Fraction] = {}
            for xp in range(n):
                if xp in (x, y):
                    continue
                if clu(xp) == clu(y):
                    fx[xp] = p_jump
                elif clu(xp) == clu(x):
                    fx[xp] = p_stay
            move_x[(x, y)] = fx
    for xp in range(n):
        for y in range(n):
            if xp == y:
                continue
            gy: dict[int, Fraction] = {}
            if clu(xp) == clu(y):
                for yp in range(n):
                    if clu(yp) != clu(y):
                        gy[yp] = Fraction(1, a * (b - 1))
            else:
                for yp in range(n):
                    if clu(yp) == clu(y) and yp != y:
                        gy[yp] = Fraction(1, a - 1)
            move_y[(xp, y)] = gy
    half = HalfStep(g, (0, a), move_x, move_y)
    return half, compose_super_markovian(half)


def k3_loops_coupling() -> JointKernel:
    """Coupling on the looped K_3: from (x, y) the next pair is uniform over
    the three pairs (x', y') with x' != y, y' != x' and (x', y') != (x, y)."""
    g = complete_with_loops(3)
    rows: dict[State, dict[State, Fraction]] = {}
    for x in range(3):
        for y in range(3):
            if x == y:
                continue
            succ = [
                (xp, yp)
                for xp in range(3)
                for yp in range(3)
                if xp != y and yp != xp and (xp, yp) != (x, y)
            ]
            rows[(x, y)] = {t: Fraction(1, len(succ)) for t in succ}
    return JointKernel(g, (0, 1), rows)


def _complement_successor(g: Graph) -> list[int]:
    """Orientation of the complement's cycles (or matching) as a successor
    map: each cycle is traversed from its lowest vertex toward that vertex's
    lowest-labeled complement neighbor."""
    comp = complement(g)
    nxt = [-1] * g.n
    seen = [False] * g.n
    for v0 in range(g.n):
        if seen[v0]:
            continue
        nbrs = comp.neighbors(v0)
        if len(nbrs) == 1:  # matching edge: successor is the unique partner
            nxt[v0] = nbrs[0]
            nxt[nbrs[0]] = v0
            seen[v0] = seen[nbrs[0]] = True
            continue
        prev, cur = v0, min(nbrs)
        seen[v0] = True
        while cur != v0:
            nxt[prev] = cur
            seen[cur] = True
            step = [w for w in comp.neighbors(cur) if w != prev]
            if len(step) != 1:
                raise ValueError("complement is not a disjoint union of cycles")
            prev, cur = cur, step[0]
        nxt[prev] = v0
    return nxt


def near_complete_regular_coupling(g: Graph, start: Optional[State] = None) -> JointKernel:
    """Deterministic-Y coupling on regular graphs of degree n-2 or n-3.

    Degree n-2: the complement is a perfect matching and Y sits on X's
    unique non-neighbor, tracking it move for move. Degree n-3: the
    complement is a disjoint union of cycles; Y sits one oriented
    complement step ahead of X and tracks that.
    """
    if g.loops:
        raise ValueError("near-complete coupling expects a loop-free graph")
    if not g.is_connected():
        raise ValueError("near-complete coupling requires a connected graph")
    if not g.is_regular() or g.degree(0) not in (g.n - 2, g.n - 3):
        raise ValueError("graph must be regular of degree n-2 or n-3")
    comp = complement(g)
    want = 1 if g.degree(0) == g.n - 2 else 2
    if any(comp.degree(v) != want for v in range(g.n)):
        raise ValueError("complement structure invalid for this degree")
    nxt = _complement_successor(g)
    if start is None:
        start = (0, nxt[0])
    if nxt[start[0]] != start[1]:
        raise ValueError(f"start must pair a vertex with its complement successor, e.g. (0, {nxt[0]})")

    def row_of(s: State) -> dict[State, Fraction]:
        v = s[0]
        d = g.degree(v)
        return {(w, nxt[w]): Fraction(1, d) for w in g.neighbors(v)}

    return JointKernel(g, start, _close_states(start, row_of))


def srg_matching_coupling(g: Graph, start: Optional[State] = None) -> JointKernel:
    """Matching coupling on a strongly regular graph.

    Requires parameters (n, k, lambda, mu) with max(lambda, mu) <= k/2 or
    lambda < k/2; anything else is refused. For every non-adjacent ordered
    pair (x, y) a perfect matching between N(x) and N(y) is picked in the
    complement-bipartite graph (never matching a vertex to itself or to an
    adjacent vertex); X walks uniformly and Y steps to the match, so all
    non-adjacent ordered pairs are states and every transition is 1/k.
    """
    params = srg_parameters(g)
    if params is None:
        raise ValueError("graph is not connected strongly regular (non-complete)")
    n, k, lam, mu = params
    if not (2 * max(lam, mu) <= k or 2 * lam < k):
        raise ValueError(
            f"srg parameters (n={n}, k={k}, lambda={lam}, mu={mu}) violate "
            "max(lambda, mu) <= k/2 and lambda < k/2; refusing"
        )
    pairs = [(x, y) for x in range(n) for y in range(n) if x != y and not g.has_edge(x, y)]
    if start is None:
        start = pairs[0]
    if start not in set(pairs):
        raise ValueError("start must be a non-adjacent ordered pair")
    rows: dict[State, dict[State, Fraction]] = {}
    for x, y in pairs:
        left = sorted(g.neighbors(x), key=lambda v: (v - x) % n)
        right = sorted(g.neighbors(y), key=lambda v: (v - y) % n)
        matching = aligned_matching(
            left, right, lambda xp, yp: xp != yp and not g.has_edge(xp, yp)
        )
        if len(matching) != k:
            raise RuntimeError(f"no perfect matching between neighborhoods of {(x, y)}")
        rows[(x, y)] = {(left[i], right[j]): Fraction(1, k) for i, j in matching.items()}
    return JointKernel(g, start, rows)


def spider_graph() -> Graph:
    """Three-branch spider: root 0 and branch i in {1,2,3} holding vertices
    3(i-1)+depth for depth 1..3."""
    edges = []
    for i in range(3):
        base = 3 * i
        edges += [(0, base + 1), (base + 1, base + 2), (base + 2, base + 3)]
    return Graph(10, edges)


def tree_noncoupling_example() -> JointKernel:
    """Two tokens on the spider with the correct walk marginals but
    history-correlated moves; the negative control for the verifier.

    Position rules (role-symmetric; the depths always sum to 3):
    one token at the root, the other at a leaf: the leaf token steps up and
    the root token moves to a depth-1 vertex, picking the leaf token's own
    branch with probability 2/3 and each other branch with 1/6. Both
    tokens on one branch (depths 1 and 2): they move apart, to the root
    and the leaf. Depth-1 and depth-2 tokens on different branches: with
    probability 3/4 the depth-1 token moves down to depth 2 and the
    depth-2 token moves up to depth 1; with probability 1/4 the depth-1
    token retreats to the root and the depth-2 token descends to its leaf.

    The 2/3 bias toward the occupied branch is what makes every
    single-position and single-step statistic match the walk exactly (root
    mass 1/6, depth-1/2 mass 1/9, leaf mass 1/18, and 1/2 per move from
    any degree-2 vertex) while two consecutive observed moves already
    betray the hidden token with a 3/4 prediction.
    """
    g = spider_graph()

    def vert(branch: int, depth: int) -> int:
        return 3 * (branch - 1) + depth

    def place(v: int) -> tuple[int, int]:
        return ((v - 1) // 3 + 1, (v - 1) % 3 + 1) if v else (0, 0)

    def row_of(s: State) -> dict[State, Fraction]:
        x, y = s
        bx, dx = place(x)
        by, dy = place(y)
        if dx == 0:  # X at the root, Y at a leaf
            return {
                (vert(j, 1), vert(by, 2)): Fraction(2, 3) if j == by else Fraction(1, 6)
                for j in (1, 2, 3)
            }
        if dy == 0:  # Y at the root, X at a leaf
            return {
                (vert(bx, 2), vert(j, 1)): Fraction(2, 3) if j == bx else Fraction(1, 6)
                for j in (1, 2, 3)
            }
        if bx == by:  # same branch, depths {1, 2}: move apart
            if dx == 1:
                return {(0, vert(by, 3)): Fraction(1)}
            return {(vert(bx, 3), 0): Fraction(1)}
        if dx == 1:  # depth-1 token X on branch bx, depth-2 token Y on by
            return {
                (vert(bx, 2), vert(by, 1)): Fraction(3, 4),
                (0, vert(by, 3)): Fraction(1, 4),
            }
        return {
            (vert(bx, 1), vert(by, 2)): Fraction(3, 4),
            (vert(bx, 3), 0): Fraction(1, 4),
        }

    return JointKernel(g, (0, 3), _close_states((0, 3), row_of))
