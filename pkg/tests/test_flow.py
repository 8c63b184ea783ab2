import itertools
import random

import pytest

from uac.flow import FlowNetwork, aligned_matching, kuhn_matching, max_bipartite_matching
from uac.forbidden import initial_forbidden, pair_test
from uac.graphs import cycle, petersen


def test_single_arc():
    net = FlowNetwork(2, 0, 1)
    net.add_arc(0, 1, 5)
    assert net.max_flow().value == 5


def test_two_disjoint_paths():
    net = FlowNetwork(4, 0, 3)
    net.add_arc(0, 1, 1)
    net.add_arc(0, 2, 1)
    net.add_arc(1, 3, 1)
    net.add_arc(2, 3, 1)
    res = net.max_flow()
    assert res.value == 2
    assert res.flow == [1, 1, 1, 1]


def test_bottleneck_with_back_edge():
    # forces Dinic to reroute through a residual arc
    net = FlowNetwork(6, 0, 5)
    arcs = [(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 3, 1), (2, 4, 1), (3, 5, 1), (4, 5, 1)]
    for u, v, c in arcs:
        net.add_arc(u, v, c)
    assert net.max_flow().value == 2


def test_pair_test_network_on_pentagon():
    res = pair_test(cycle(5), initial_forbidden(cycle(5)), 0, 2)
    assert res.passed and res.l == 2 and res.value == 2
    # of the 4 candidate left-right combinations only (1,3) and (4,1) are
    # legal arcs: (1,1) is the ghost pair and (4,3) is adjacent
    assert res.flow == {(1, 3): 1, (4, 1): 1}


def _check_flow_valid(net, res):
    inflow = [0] * net.n
    outflow = [0] * net.n
    for i in range(net.arc_count):
        assert 0 <= res.flow[i] <= net._orig_cap[i]
    for i, f in enumerate(res.flow):
        u, v = net._to[2 * i + 1], net._to[2 * i]
        outflow[u] += f
        inflow[v] += f
    for v in range(net.n):
        if v not in (net.source, net.sink):
            assert inflow[v] == outflow[v]
    assert outflow[net.source] - inflow[net.source] == res.value


def _min_cut_value(n, arcs, s, t):
    best = None
    others = [v for v in range(n) if v not in (s, t)]
    for r in range(len(others) + 1):
        for side in itertools.combinations(others, r):
            cut = {s, *side}
            val = sum(c for u, v, c in arcs if u in cut and v not in cut)
            best = val if best is None else min(best, val)
    return best


def test_max_flow_equals_min_cut_small_networks():
    rng = random.Random(11)
    for _ in range(25):
        n = rng.randint(3, 7)
        arcs = [
            (u, v, rng.randint(0, 4))
            for u in range(n)
            for v in range(n)
            if u != v and rng.random() < 0.5
        ]
        net = FlowNetwork(n, 0, n - 1)
        for u, v, c in arcs:
            net.add_arc(u, v, c)
        res = net.max_flow()
        _check_flow_valid(net, res)
        assert res.value == _min_cut_value(n, arcs, 0, n - 1)


def test_matching_basics():
    full = {(l, r) for l in range(3) for r in range(3)}
    assert len(max_bipartite_matching(3, 3, full)) == 3
    assert len(max_bipartite_matching(2, 1, {(0, 0), (1, 0)})) == 1


def test_matching_is_injective():
    m = max_bipartite_matching(3, 3, {(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)})
    assert len(m) == 3
    assert len(set(m.values())) == len(m)


def test_petersen_complement_matching():
    g = petersen()
    x, y = 0, 2  # non-adjacent
    left, right = g.neighbors(x), g.neighbors(y)
    allowed = {
        (i, j)
        for i, xp in enumerate(left)
        for j, yp in enumerate(right)
        if xp != yp and not g.has_edge(xp, yp)
    }
    m = max_bipartite_matching(3, 3, allowed)
    assert len(m) == 3
    # ground truth by brute force over all 6 possible bijections
    count = sum(
        all((i, j) in allowed for i, j in enumerate(perm))
        for perm in itertools.permutations(range(3))
    )
    assert count >= 1


def test_matching_agrees_with_unit_flow_reduction():
    rng = random.Random(5)
    for _ in range(30):
        nl, nr = rng.randint(1, 6), rng.randint(1, 6)
        allowed = {(l, r) for l in range(nl) for r in range(nr) if rng.random() < 0.5}
        m = max_bipartite_matching(nl, nr, allowed)
        net = FlowNetwork(nl + nr + 2, 0, nl + nr + 1)
        for l in range(nl):
            net.add_arc(0, 1 + l, 1)
        for l, r in sorted(allowed):
            net.add_arc(1 + l, 1 + nl + r, 1)
        for r in range(nr):
            net.add_arc(1 + nl + r, nl + nr + 1, 1)
        assert len(m) == net.max_flow().value


def test_aligned_matching_prefers_diagonal():
    m = aligned_matching([10, 11, 12], [20, 21, 22], lambda a, b: True)
    assert m == {0: 0, 1: 1, 2: 2}
    # blocked diagonal falls back in rotation order
    m = aligned_matching([10, 11], [20, 21], lambda a, b: (a, b) != (10, 20))
    assert m == {0: 1, 1: 0}


def test_kuhn_respects_preference_order():
    assert kuhn_matching([[1, 0], [1]], 2) == {0: 0, 1: 1}


def test_network_argument_validation():
    with pytest.raises(ValueError):
        FlowNetwork(3, 1, 1)
    net = FlowNetwork(3, 0, 2)
    with pytest.raises(ValueError):
        net.add_arc(0, 1, -2)
    with pytest.raises(ValueError):
        net.add_arc(0, 5, 1)
