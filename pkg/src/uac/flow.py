"""Integer maximum flow and bipartite matching.

All capacities are exact integers and all networks here are tiny (a pair
test touches at most 2*maxdeg + 2 nodes), so the implementations favor
determinism over asymptotics: arcs are stored in insertion order, the level
graph is rebuilt by BFS, and augmentation scans arcs in that fixed order.
Identical inputs always produce the identical flow assignment.
"""

from __future__ import annotations

from collections import deque

__all__ = ["FlowNetwork", "FlowResult", "kuhn_matching", "max_bipartite_matching", "aligned_matching"]


class FlowResult:
    """Value and per-arc integer assignment of a maximum flow."""

    __slots__ = ("value", "flow")

    def __init__(self, value: int, flow: list[int]):
        self.value = value
        self.flow = flow

    def __repr__(self) -> str:
        return f"FlowResult(value={self.value})"


class FlowNetwork:
    """Directed network with integer capacities; parallel arcs permitted.

    Arcs keep their insertion index: FlowResult.flow[i] is the flow carried
    by the i-th added arc.
    """

    def __init__(self, n: int, source: int, sink: int):
        if not (0 <= source < n and 0 <= sink < n) or source == sink:
            raise ValueError("source and sink must be distinct nodes")
        self.n = n
        self.source = source
        self.sink = sink
        # arc storage: to[], cap[] hold forward arcs at even slots and their
        # residual twins at odd slots; adj[v] lists slot indices out of v
        self._to: list[int] = []
        self._cap: list[int] = []
        self._adj: list[list[int]] = [[] for _ in range(n)]
        self._orig_cap: list[int] = []

    def add_arc(self, u: int, v: int, cap: int) -> int:
        """Add arc u->v with integer capacity; returns the arc index."""
        if cap < 0:
            raise ValueError("capacity must be non-negative")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError("arc endpoint out of range")
        idx = len(self._orig_cap)
        self._adj[u].append(len(self._to))
        self._to.append(v)
        self._cap.append(cap)
        self._adj[v].append(len(self._to))
        self._to.append(u)
        self._cap.append(0)
        self._orig_cap.append(cap)
        return idx

    @property
    def arc_count(self) -> int:
        return len(self._orig_cap)

    def max_flow(self) -> FlowResult:
        """Dinic's algorithm; deterministic given the arc insertion order."""
        to, cap, adj = self._to, self._cap, self._adj
        s, t = self.source, self.sink
        INF = float("inf")
        total = 0
        level = [0] * self.n
        it = [0] * self.n

        def bfs() -> bool:
            for i in range(self.n):
                level[i] = -1
            level[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for e in adj[u]:
                    w = to[e]
                    if cap[e] > 0 and level[w] < 0:
                        level[w] = level[u] + 1
                        queue.append(w)
            return level[t] >= 0

        def dfs(u: int, pushed) -> int:
            if u == t:
                return pushed
            while it[u] < len(adj[u]):
                e = adj[u][it[u]]
                w = to[e]
                if cap[e] > 0 and level[w] == level[u] + 1:
                    got = dfs(w, min(pushed, cap[e]))
                    if got > 0:
                        cap[e] -= got
                        cap[e ^ 1] += got
                        return got
                it[u] += 1
            return 0

        while bfs():
            for i in range(self.n):
                it[i] = 0
            while True:
                pushed = dfs(s, INF)
                if pushed == 0:
                    break
                total += pushed

        flow = [self._orig_cap[i] - self._cap[2 * i] for i in range(self.arc_count)]
        return FlowResult(total, flow)


def kuhn_matching(adjacency: list[list[int]], right_size: int) -> dict[int, int]:
    """Maximum-cardinality matching via augmenting paths (Kuhn's algorithm).

    ``adjacency[l]`` lists l's candidate right indices in preference order;
    left vertices are processed in increasing order and candidates tried in
    the given order, so the left->right assignment is deterministic.
    """
    match_right: list[int] = [-1] * right_size

    def try_augment(l: int, visited: list[bool]) -> bool:
        for r in adjacency[l]:
            if visited[r]:
                continue
            visited[r] = True
            if match_right[r] == -1 or try_augment(match_right[r], visited):
                match_right[r] = l
                return True
        return False

    for l in range(len(adjacency)):
        try_augment(l, [False] * right_size)
    return {match_right[r]: r for r in range(right_size) if match_right[r] != -1}


def max_bipartite_matching(
    left_size: int, right_size: int, allowed: set[tuple[int, int]]
) -> dict[int, int]:
    """Maximum-cardinality matching over (left, right) index pairs, with
    candidates tried in increasing index order."""
    adjacency = [sorted(r for (l, r) in allowed if l == i) for i in range(left_size)]
    return kuhn_matching(adjacency, right_size)


def aligned_matching(left: list[int], right: list[int], allow) -> dict[int, int]:
    """Matching between two vertex lists preferring equal positions.

    Each left node tries the right node at its own list position first,
    then the rest in rotation order. Used for the coupling matchings where
    the lists are neighborhoods in cyclic-offset order: token Y mimics
    token X's relative move whenever the constraints allow (on Paley
    graphs this reduces to the translation y' = y + (x' - x)), keeping
    the matchings aligned across states and the resulting kernels
    symmetric enough for the belief filter to close.
    """
    k = len(right)
    adjacency = []
    for i, xp in enumerate(left):
        cands = [j for j, yp in enumerate(right) if allow(xp, yp)]
        cands.sort(key=lambda j: (j - i) % k)
        adjacency.append(cands)
    return kuhn_matching(adjacency, k)
