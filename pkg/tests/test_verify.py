from fractions import Fraction

import pytest

from uac.couplings import (
    bipartite_coupling,
    cluster_coupling_complete,
    fixed_distance_cycle,
    hypercube_flip,
    k3_loops_coupling,
    near_complete_regular_coupling,
    tree_noncoupling_example,
)
from uac.forbidden import extract_uac_kernel, forbidden_closure
from uac.graphs import Graph, complement, cycle, hypercube, octahedron, path
from uac.kernels import JointKernel
from uac.verify import (
    MultipleClosedClassesError,
    check_avoidance,
    check_marginal_stationary,
    check_uniformity,
    filter_faithfulness,
    srw_stationary,
    stationary_distribution,
)

ONE = Fraction(1)


def k33():
    return Graph(6, [(i, j) for i in (0, 1, 2) for j in (3, 4, 5)])


# ── stationary distributions ─────────────────────────────────────────────

def test_stationary_fixed_distance_uniform():
    k = fixed_distance_cycle(5, 2)
    pi = stationary_distribution(k)
    assert pi.method == "exact"
    assert all(pi.probs[s] == Fraction(1, 5) for s in k.states)


def test_stationary_k3_loops_uniform_sixth():
    pi = stationary_distribution(k3_loops_coupling())
    assert set(pi.probs.values()) == {Fraction(1, 6)}


def test_stationary_satisfies_balance_exactly():
    for k in (k3_loops_coupling(), tree_noncoupling_example(), cluster_coupling_complete(2, 2)[1]):
        pi = stationary_distribution(k)
        assert sum(pi.probs.values()) == 1
        for t in k.states:
            inflow = sum(pi.probs[s] * k.prob(s, t) for s in k.states)
            assert inflow == pi.probs[t]


def test_stationary_tree_marginals():
    k = tree_noncoupling_example()
    pi = stationary_distribution(k)
    marg = {v: Fraction(0) for v in range(10)}
    for (x, _y), p in pi.probs.items():
        marg[x] += p
    assert marg[0] == Fraction(1, 6)
    assert all(marg[3 * b + d] == Fraction(1, 9) for b in range(3) for d in (1, 2))
    assert all(marg[3 * b + 3] == Fraction(1, 18) for b in range(3))


def test_stationary_handles_transients():
    g = cycle(6)
    rows = {
        (0, 2): {(1, 3): ONE},  # transient entry state
        (1, 3): {(2, 4): ONE},
        (2, 4): {(1, 3): ONE},
    }
    pi = stationary_distribution(JointKernel(g, (0, 2), rows))
    assert pi.probs[(0, 2)] == 0
    assert pi.probs[(1, 3)] == Fraction(1, 2)


def test_stationary_rejects_multiple_closed_classes():
    g = cycle(6)
    rows = {
        (0, 2): {(1, 3): Fraction(1, 2), (3, 5): Fraction(1, 2)},
        (1, 3): {(1, 3): ONE},
        (3, 5): {(3, 5): ONE},
    }
    with pytest.raises(MultipleClosedClassesError) as err:
        stationary_distribution(JointKernel(g, (0, 2), rows))
    assert len(err.value.classes) == 2


def test_iterative_fallback_matches_exact():
    k = cluster_coupling_complete(2, 2)[1]
    exact = stationary_distribution(k)
    approx = stationary_distribution(k, exact_limit=0)
    assert approx.method == "iterative"
    for s in k.states:
        assert abs(float(exact.probs[s]) - float(approx.probs[s])) < 1e-9


def test_iterative_handles_periodic_chains():
    k = fixed_distance_cycle(6, 2)  # period-2 orbit
    approx = stationary_distribution(k, exact_limit=0)
    assert abs(sum(float(p) for p in approx.probs.values()) - 1) < 1e-12


# ── avoidance ────────────────────────────────────────────────────────────

def test_avoidance_passes():
    for k in (
        fixed_distance_cycle(9, 3),
        cluster_coupling_complete(2, 2)[1],
        tree_noncoupling_example(),
    ):
        pi = stationary_distribution(k)
        assert check_avoidance(k, pi).passed


def test_avoidance_catches_swap():
    g = path(2)
    swap = JointKernel(g, (0, 1), {(0, 1): {(1, 0): ONE}, (1, 0): {(0, 1): ONE}})
    pi = stationary_distribution(swap)
    out = check_avoidance(swap, pi)
    assert not out.passed and "(0, 1) -> (1, 0)" in out.witness


def test_avoidance_catches_diagonal_mass():
    g = cycle(4)  # X parked on Y's vertex forever
    k = JointKernel(g, (0, 0), {(0, 0): {(0, 0): ONE}})
    out = check_avoidance(k, stationary_distribution(k))
    assert not out.passed and "diagonal" in out.witness


# ── uniformity ───────────────────────────────────────────────────────────

def test_uniformity_positive_cases():
    cases = [
        (bipartite_coupling(k33()), k33()),
        (extract_uac_kernel(cycle(6), forbidden_closure(cycle(6))), cycle(6)),
        (hypercube_flip(3), hypercube(3)),
    ]
    for k, g in cases:
        assert check_uniformity(k, g, stationary_distribution(k)).passed


def test_uniformity_cluster_witness():
    k = cluster_coupling_complete(2, 2)[1]
    out = check_uniformity(k, k.graph, stationary_distribution(k))
    assert not out.passed
    assert "is 2/3, expected 1/3" in out.witness


def test_uniformity_transient_states_warn_only():
    # distance-2 orbit on C6 entered through one non-uniform transient row
    g = cycle(6)
    half = Fraction(1, 2)
    rows = {(0, 4): {(1, 3): ONE}}
    for i in range(6):
        rows[(i, (i + 2) % 6)] = {
            ((i + 1) % 6, (i + 3) % 6): half,
            ((i - 1) % 6, (i + 1) % 6): half,
        }
    k = JointKernel(g, (0, 4), rows)
    pi = stationary_distribution(k)
    assert pi.probs[(0, 4)] == 0
    out = check_uniformity(k, g, pi)
    assert out.passed  # (0,4) is transient: warning, not failure
    assert out.warnings and "transient" in out.warnings[0]


# ── stationary marginals ─────────────────────────────────────────────────

def test_srw_stationary_shapes():
    assert srw_stationary(cycle(5)) == {v: Fraction(1, 5) for v in range(5)}
    spider = tree_noncoupling_example().graph
    assert srw_stationary(spider)[0] == Fraction(1, 6)


def test_marginal_stationary_cases():
    k = hypercube_flip(3)
    pi = stationary_distribution(k)
    assert check_marginal_stationary(k, hypercube(3), pi).passed
    kt = tree_noncoupling_example()
    assert check_marginal_stationary(kt, kt.graph, stationary_distribution(kt)).passed
    k5 = fixed_distance_cycle(5, 2)
    assert check_marginal_stationary(k5, cycle(5), stationary_distribution(k5)).passed


def test_marginal_stationary_detects_skew():
    g = cycle(6)
    rows = {
        (0, 2): {(1, 3): ONE},
        (1, 3): {(0, 2): ONE},
    }
    k = JointKernel(g, (0, 2), rows)
    out = check_marginal_stationary(k, g, stationary_distribution(k))
    assert not out.passed


# ── belief-filter faithfulness ───────────────────────────────────────────

def test_filter_tree_violation_signature():
    k = tree_noncoupling_example()
    for token in ("x", "y"):
        res = filter_faithfulness(k, k.graph, token)
        assert res.status == "violation"
        # shortest witness: two observed positions, 3/4 predicted mass
        assert len(res.history) == 2
        assert max(res.predicted.values()) == Fraction(3, 4)
        assert set(res.expected.values()) == {Fraction(1, 2)}


def test_filter_positive_cases():
    k = k3_loops_coupling()
    assert filter_faithfulness(k, k.graph, "x").status == "faithful"
    assert filter_faithfulness(k, k.graph, "y").status == "faithful"
    c = cluster_coupling_complete(2, 2)[1]
    assert filter_faithfulness(c, c.graph, "x").status == "faithful"


def test_filter_uniform_kernels_close_with_one_belief_per_position():
    cases = [
        (fixed_distance_cycle(9, 3), cycle(9)),
        (hypercube_flip(3), hypercube(3)),
        (bipartite_coupling(k33()), k33()),
        (near_complete_regular_coupling(octahedron()), octahedron()),
        (near_complete_regular_coupling(complement(cycle(6))), complement(cycle(6))),
        (extract_uac_kernel(cycle(8), forbidden_closure(cycle(8))), cycle(8)),
    ]
    for k, g in cases:
        pi = stationary_distribution(k)
        assert check_uniformity(k, g, pi).passed
        res = filter_faithfulness(k, g, "x", pi=pi)
        assert res.status == "faithful"
        assert res.beliefs_explored == len({s[0] for s in pi.support()})


def test_filter_belief_cap_gives_inconclusive():
    k = tree_noncoupling_example()
    res = filter_faithfulness(k, k.graph, "x", belief_cap=3)
    assert res.status in ("inconclusive", "violation")
    res = filter_faithfulness(k, k.graph, "x", belief_cap=0)
    assert res.status == "inconclusive"


def test_filter_rejects_bad_token():
    k = k3_loops_coupling()
    with pytest.raises(ValueError):
        filter_faithfulness(k, k.graph, "z")
