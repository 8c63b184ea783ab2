"""Graph data model, family builders, file format, and structural queries.

Vertices are 0-based integers. Graphs are simple and undirected; self-loops
are permitted only when a graph is created with ``loops=True``. A loop at v
contributes v itself to ``neighbors(v)`` and adds exactly 1 to ``degree(v)``,
so on the looped complete graph every vertex has degree n and its simple
random walk steps to each of the n vertices (including staying put) with
probability 1/n.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional

__all__ = [
    "Graph",
    "GraphFormatError",
    "SearchBudgetExceeded",
    "parse_graph",
    "format_graph",
    "cycle",
    "path",
    "complete",
    "complete_with_loops",
    "hypercube",
    "petersen",
    "fig5",
    "octahedron",
    "paley",
    "double_clique",
    "BUILDERS",
    "bipartition",
    "common_neighbors",
    "complement",
    "srg_parameters",
    "validate_free_automorphism",
    "find_free_automorphism",
]


class GraphFormatError(ValueError):
    """Malformed graph file; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SearchBudgetExceeded(RuntimeError):
    """A bounded backtracking search ran out of its node budget."""


class Graph:
    """Immutable undirected graph on vertices 0..n-1.

    ``edges`` is a frozenset of (u, v) pairs with u <= v; a pair (v, v) is a
    self-loop and requires ``loops=True``. Instances are safe to share
    read-only across workers.
    """

    __slots__ = ("n", "edges", "loops", "_adj")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], loops: bool = False):
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        norm = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge endpoint out of range: ({u}, {v})")
            if u == v and not loops:
                raise ValueError(f"loop not allowed: ({u}, {v})")
            e = (u, v) if u <= v else (v, u)
            if e in norm:
                raise ValueError(f"duplicate edge: ({u}, {v})")
            norm.add(e)
        self.n = n
        self.edges = frozenset(norm)
        self.loops = bool(loops)
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in norm:
            adj[u].append(v)
            if u != v:
                adj[v].append(u)
        self._adj = tuple(tuple(sorted(a)) for a in adj)

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Sorted neighbors of v; a loop contributes v itself once."""
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        e = (u, v) if u <= v else (v, u)
        return e in self.edges

    def degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self._adj)

    def is_regular(self) -> bool:
        degs = self.degrees()
        return min(degs) == max(degs)

    def is_connected(self) -> bool:
        seen = [False] * self.n
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            u = queue.popleft()
            for w in self._adj[u]:
                if not seen[w]:
                    seen[w] = True
                    count += 1
                    queue.append(w)
        return count == self.n

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.loops == other.loops
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.n, self.loops, self.edges))

    def __repr__(self) -> str:
        kind = "Graph*" if self.loops else "Graph"
        return f"{kind}(n={self.n}, m={len(self.edges)})"


# ── file format ──────────────────────────────────────────────────────────
#
# UTF-8 text, '#' starts a comment line:
#   p <n> <m>     header for a simple graph
#   p* <n> <m>    header when self-loops are allowed
#   e <u> <v>     exactly m edge lines, 0 <= u, v < n

def parse_graph(text: str) -> Graph:
    """Parse the edge-list format above; raise GraphFormatError on bad input."""
    n = m = None
    loops = False
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if n is None:
            if fields[0] not in ("p", "p*") or len(fields) != 3:
                raise GraphFormatError(line_no, f"expected 'p <n> <m>' header, got {line!r}")
            loops = fields[0] == "p*"
            try:
                n, m = int(fields[1]), int(fields[2])
            except ValueError:
                raise GraphFormatError(line_no, f"non-integer header fields in {line!r}") from None
            if n < 1 or m < 0:
                raise GraphFormatError(line_no, f"bad sizes in header {line!r}")
            continue
        if fields[0] != "e" or len(fields) != 3:
            raise GraphFormatError(line_no, f"expected 'e <u> <v>', got {line!r}")
        try:
            u, v = int(fields[1]), int(fields[2])
        except ValueError:
            raise GraphFormatError(line_no, f"non-integer endpoints in {line!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(line_no, f"endpoint out of range 0..{n - 1}: {line!r}")
        if u == v and not loops:
            raise GraphFormatError(line_no, f"loop not allowed under 'p': {line!r}")
        e = (u, v) if u <= v else (v, u)
        if e in seen:
            raise GraphFormatError(line_no, f"duplicate edge: {line!r}")
        seen.add(e)
        edges.append(e)
    if n is None:
        raise GraphFormatError(1, "missing 'p' header line")
    if len(edges) != m:
        raise GraphFormatError(line_no if text else 1, f"header declares {m} edges, found {len(edges)}")
    return Graph(n, edges, loops=loops)


def format_graph(g: Graph) -> str:
    """Canonical text form (sorted edge lines); inverse of parse_graph."""
    head = "p*" if g.loops else "p"
    lines = [f"{head} {g.n} {len(g.edges)}"]
    lines.extend(f"e {u} {v}" for u, v in sorted(g.edges))
    return "\n".join(lines) + "\n"


# ── builders ─────────────────────────────────────────────────────────────

def cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> Graph:
    if n < 2:
        raise ValueError("path needs n >= 2")
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def complete(n: int) -> Graph:
    if n < 1:
        raise ValueError("complete needs n >= 1")
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def complete_with_loops(n: int) -> Graph:
    """Complete graph plus a self-loop at every vertex (degree n everywhere)."""
    if n < 1:
        raise ValueError("complete_with_loops needs n >= 1")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges.extend((i, i) for i in range(n))
    return Graph(n, edges, loops=True)


def hypercube(d: int) -> Graph:
    """d-dimensional hypercube; vertex v is the bit string of v."""
    if d < 1:
        raise ValueError("hypercube needs d >= 1")
    n = 1 << d
    return Graph(n, [(v, v ^ (1 << b)) for v in range(n) for b in range(d) if v < v ^ (1 << b)])


def petersen() -> Graph:
    """Petersen graph: outer 5-cycle 0..4, inner pentagram 5..9, spokes i-(i+5)."""
    edges = []
    for i in range(5):
        edges.append((i, (i + 1) % 5))
        edges.append((i, i + 5))
        edges.append((5 + i, 5 + (i + 2) % 5))
    return Graph(10, edges)


_FIG5_EDGES_1BASED = [
    (1, 3), (1, 4), (1, 5), (1, 6),
    (2, 7), (2, 8), (2, 9), (2, 10),
    (3, 7), (3, 8), (3, 9),
    (4, 7), (4, 8), (4, 11),
    (5, 7), (5, 8), (5, 12),
    (6, 9), (6, 10), (6, 11),
    (9, 12),
    (10, 11), (10, 12),
    (11, 12),
]


def fig5() -> Graph:
    """Catalog graph ``fig5``: 4-regular on 12 vertices, admits no UAC.

    The published drawing labels vertices 1..12; internally label-1 is used.
    """
    return Graph(12, [(u - 1, v - 1) for u, v in _FIG5_EDGES_1BASED])


def octahedron() -> Graph:
    """K_{2,2,2}: 4-regular on 6 vertices; complement is the matching i-(i+3)."""
    edges = [
        (i, j)
        for i in range(6)
        for j in range(i + 1, 6)
        if j - i != 3
    ]
    return Graph(6, edges)


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    f = 2
    while f * f <= q:
        if q % f == 0:
            return False
        f += 1
    return True


def paley(q: int) -> Graph:
    """Paley graph on GF(q), q a prime with q % 4 == 1: x ~ y iff x-y is a
    nonzero quadratic residue."""
    if not _is_prime(q) or q % 4 != 1:
        raise ValueError("paley needs a prime q with q % 4 == 1")
    residues = {(x * x) % q for x in range(1, q)}
    return Graph(q, [(i, j) for i in range(q) for j in range(i + 1, q) if (j - i) % q in residues])


def double_clique(k: int) -> Graph:
    """Two k-cliques {0..k-1} and {k..2k-1} joined by the rungs i-(k+i)."""
    if k < 2:
        raise ValueError("double_clique needs k >= 2")
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges += [(k + i, k + j) for i in range(k) for j in range(i + 1, k)]
    edges += [(i, k + i) for i in range(k)]
    return Graph(2 * k, edges)


# name -> (builder, number of integer parameters); the CLI catalog
BUILDERS = {
    "cycle": (cycle, 1),
    "path": (path, 1),
    "complete": (complete, 1),
    "complete-loops": (complete_with_loops, 1),
    "hypercube": (hypercube, 1),
    "petersen": (petersen, 0),
    "fig5": (fig5, 0),
    "octahedron": (octahedron, 0),
    "paley": (paley, 1),
    "double-clique": (double_clique, 1),
}


def build(name: str, params: list[int]) -> Graph:
    """Look up a builder by CLI name and apply integer parameters."""
    if name not in BUILDERS:
        raise ValueError(f"unknown builder {name!r}; known: {', '.join(sorted(BUILDERS))}")
    fn, arity = BUILDERS[name]
    if len(params) != arity:
        raise ValueError(f"builder {name!r} takes {arity} parameter(s), got {len(params)}")
    return fn(*params)


# ── structural queries ───────────────────────────────────────────────────

def bipartition(g: Graph) -> Optional[list[int]]:
    """Two-color a connected graph by BFS layering, vertex 0 on side 0.

    Returns side[v] in {0, 1}, or None when an odd closed walk (or loop)
    makes the graph non-bipartite. Raises ValueError on disconnected input.
    """
    if not g.is_connected():
        raise ValueError("bipartition requires a connected graph")
    side = [-1] * g.n
    side[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w in g.neighbors(u):
            if w == u:
                return None
            if side[w] == -1:
                side[w] = 1 - side[u]
                queue.append(w)
            elif side[w] == side[u]:
                return None
    return side


def common_neighbors(g: Graph, x: int, y: int) -> set[int]:
    return set(g.neighbors(x)) & set(g.neighbors(y))


def complement(g: Graph) -> Graph:
    """Simple complement on the same vertex set; rejects loop graphs."""
    if g.loops:
        raise ValueError("complement is defined for loop-free graphs only")
    return Graph(
        g.n,
        [(i, j) for i in range(g.n) for j in range(i + 1, g.n) if not g.has_edge(i, j)],
    )


def srg_parameters(g: Graph) -> Optional[tuple[int, int, int, int]]:
    """(n, k, lambda, mu) verified by exhaustive pair scan, else None.

    Only connected, loop-free, non-complete regular graphs qualify.
    """
    if g.loops or not g.is_connected() or not g.is_regular():
        return None
    k = g.degree(0)
    if k == g.n - 1:  # complete
        return None
    lam = mu = None
    for x in range(g.n):
        nx = set(g.neighbors(x))
        for y in range(x + 1, g.n):
            c = len(nx & set(g.neighbors(y)))
            if g.has_edge(x, y):
                if lam is None:
                    lam = c
                elif lam != c:
                    return None
            else:
                if mu is None:
                    mu = c
                elif mu != c:
                    return None
    return (g.n, k, lam if lam is not None else 0, mu if mu is not None else 0)


def validate_free_automorphism(g: Graph, phi: list[int]) -> bool:
    """True iff phi is an adjacency-preserving bijection with phi(v) != v and
    phi(v) not adjacent to v for every v."""
    if len(phi) != g.n or sorted(phi) != list(range(g.n)):
        return False
    for v in range(g.n):
        if phi[v] == v or g.has_edge(v, phi[v]):
            return False
    for u in range(g.n):
        for v in range(u, g.n):
            if g.has_edge(u, v) != g.has_edge(phi[u], phi[v]):
                return False
    return True


def find_free_automorphism(g: Graph, node_cap: int = 200_000) -> Optional[list[int]]:
    """Backtracking search for an automorphism with phi(v) != v, phi(v) !~ v.

    Vertices are assigned in increasing order and candidate images tried in
    increasing order, so the result is deterministic. Returns None when the
    search space is exhausted; raises SearchBudgetExceeded after node_cap
    search-tree nodes.
    """
    if g.loops:
        raise ValueError("automorphism search expects a loop-free graph")
    n = g.n
    degs = g.degrees()
    phi = [-1] * n
    used = [False] * n
    nodes = 0

    def extend(v: int) -> bool:
        nonlocal nodes
        if v == n:
            return True
        for w in range(n):
            if used[w] or w == v or degs[w] != degs[v] or g.has_edge(v, w):
                continue
            ok = True
            for u in range(v):
                if g.has_edge(u, v) != g.has_edge(phi[u], w):
                    ok = False
                    break
            if not ok:
                continue
            nodes += 1
            if nodes > node_cap:
                raise SearchBudgetExceeded(f"automorphism search exceeded {node_cap} nodes")
            phi[v] = w
            used[w] = True
            if extend(v + 1):
                return True
            phi[v] = -1
            used[w] = False
        return False

    return list(phi) if extend(0) else None
