import numpy as np
import pytest
from scipy.stats import chi2

from uac.couplings import (
    fixed_distance_cycle,
    k3_loops_coupling,
    tree_noncoupling_example,
)
from uac.graphs import cycle
from uac.montecarlo import (
    build_tables,
    history_frequency_test,
    sample_path,
    sampler_backend,
    simulate,
)
from uac.verify import stationary_distribution


def test_backend_env_switch(monkeypatch):
    monkeypatch.setenv("UAC_PURE_NUMPY", "1")
    assert sampler_backend() == "python"
    monkeypatch.delenv("UAC_PURE_NUMPY")
    assert sampler_backend() == "numba"


def test_backends_produce_identical_paths(monkeypatch):
    tables = build_tables(k3_loops_coupling())
    fast = sample_path(tables, 40_000, seed=123)
    monkeypatch.setenv("UAC_PURE_NUMPY", "1")
    slow = sample_path(tables, 40_000, seed=123)
    assert np.array_equal(fast, slow)


def test_simulate_deterministic():
    k = fixed_distance_cycle(9, 3)
    a = simulate(k, 10_000, seed=5)
    b = simulate(k, 10_000, seed=5)
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
    c = simulate(k, 10_000, seed=6)
    assert not np.array_equal(a.xs, c.xs)


def test_simulate_counts_and_shapes():
    k = fixed_distance_cycle(9, 3)
    t = simulate(k, 100_000, seed=1)
    assert t.steps == 100_000 and len(t.xs) == 100_001
    assert t.collisions == 0
    assert abs(t.occupancy_x.sum() - 1) < 1e-12
    # uniform stationary: every vertex near 1/9
    assert np.all(np.abs(t.occupancy_x - 1 / 9) < 0.01)


def test_simulate_tree_is_avoiding():
    t = simulate(tree_noncoupling_example(), 200_000, seed=3)
    assert t.collisions == 0


def test_simulate_validates_steps():
    with pytest.raises(ValueError):
        simulate(k3_loops_coupling(), 0, seed=1)


def test_occupancy_matches_exact_stationary():
    k = k3_loops_coupling()
    pi = stationary_distribution(k)
    marg = np.zeros(3)
    for (x, _y), p in pi.probs.items():
        marg[x] += float(p)
    t = simulate(k, 300_000, seed=11)
    assert np.all(np.abs(t.occupancy_x - marg) < 0.01)


def test_history_test_tree_h3_rejects_with_three_quarters():
    k = tree_noncoupling_example()
    t = simulate(k, 1_000_000, seed=2026)
    rep = history_frequency_test(t, k.graph, "x", window=3, alpha=0.01)
    assert rep.rejected
    # the known signature: having watched leaf -> depth2 -> depth1 on branch 1,
    # the next step goes back down with empirical mass near 3/4
    stat = rep.bucket_stats[(3, 2, 1)]
    assert stat.count > 1000
    assert abs(stat.seen.get(2, 0) / stat.count - 0.75) < 0.05
    assert stat.p_value < 1e-6


def test_history_test_tree_h1_accepts():
    k = tree_noncoupling_example()
    t = simulate(k, 1_000_000, seed=2026)
    rep = history_frequency_test(t, k.graph, "x", window=1, alpha=0.01)
    assert not rep.rejected


def test_history_test_cycle_never_rejects():
    k = fixed_distance_cycle(9, 3)
    t = simulate(k, 1_000_000, seed=7)
    for h in (1, 2, 3):
        rep = history_frequency_test(t, cycle(9), "x", window=h, alpha=0.01)
        assert not rep.rejected, (h, rep.worst_bucket, rep.min_p_value)


def test_history_test_short_trajectory_skips():
    k = fixed_distance_cycle(9, 3)
    t = simulate(k, 30, seed=7)
    rep = history_frequency_test(t, cycle(9), "x", window=3, alpha=0.01)
    assert rep.buckets_tested == 0 and not rep.rejected
    assert rep.skipped


def test_transition_frequencies_match_kernel_rows():
    # empirical per-state next-state distribution vs the exact rows
    k = k3_loops_coupling()
    tables = build_tables(k)
    idx = sample_path(tables, 500_000, seed=99)
    states = tables.states
    counts = {}
    for a, b in zip(idx[:-1], idx[1:]):
        counts.setdefault(int(a), {}).setdefault(int(b), 0)
        counts[int(a)][int(b)] += 1
    worst = 1.0
    for i, row_counts in counts.items():
        row = k.rows[states[i]]
        total = sum(row_counts.values())
        expected = {j: float(row.get(states[j], 0)) * total for j in range(len(states))}
        stat = sum(
            (row_counts.get(j, 0) - e) ** 2 / e for j, e in expected.items() if e > 0
        )
        df = sum(1 for e in expected.values() if e > 0) - 1
        worst = min(worst, float(chi2.sf(stat, df)))
        assert all(expected.get(j, 0) > 0 for j in row_counts)  # no impossible moves
    assert worst > 0.01 / len(counts)  # Bonferroni-style non-rejection
