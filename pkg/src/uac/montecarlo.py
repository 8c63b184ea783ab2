"""Seeded trajectory sampling and history-window statistics.

The per-step sampling loop is the only hot path in the package: acceptance
runs draw tens of millions of steps. It is compiled with numba when
available; setting ``UAC_PURE_NUMPY=1`` (or lacking numba) selects a plain
Python loop over the same precomputed numpy tables. Both paths perform the
identical float64 comparisons on the identical cumulative-probability
arrays, so trajectories are bit-for-bit reproducible across them.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import chi2

from uac.graphs import Graph
from uac.kernels import JointKernel

__all__ = [
    "SamplerTables",
    "Trajectory",
    "BucketStat",
    "HistoryTestReport",
    "sampler_backend",
    "build_tables",
    "sample_path",
    "simulate",
    "history_frequency_test",
]

State = tuple[int, int]


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def sampler_backend() -> str:
    """'numba' or 'python', honoring the UAC_PURE_NUMPY=1 escape hatch."""
    if os.environ.get("UAC_PURE_NUMPY") == "1" or not _numba_available():
        return "python"
    return "numba"


@dataclass(frozen=True)
class SamplerTables:
    """Flattened transition tables: row of state i lives in
    targets[offsets[i]:offsets[i+1]] with cumulative probabilities cum."""

    states: tuple[State, ...]
    offsets: np.ndarray  # int64, len = n_states + 1
    targets: np.ndarray  # int64 state indices
    cum: np.ndarray  # float64 cumulative probabilities, each row ends at 1.0
    xs: np.ndarray  # int64, X position per state index
    ys: np.ndarray  # int64, Y position per state index
    start_index: int


def build_tables(k: JointKernel) -> SamplerTables:
    states = k.states  # sorted
    index = {s: i for i, s in enumerate(states)}
    offsets = np.zeros(len(states) + 1, dtype=np.int64)
    targets: list[int] = []
    cum: list[float] = []
    for i, s in enumerate(states):
        row = sorted(k.rows[s].items())
        acc = 0.0
        for t, p in row:
            targets.append(index[t])
            acc += float(p)
            cum.append(acc)
        cum[-1] = 1.0  # guard against rounding below 1.0 at the row end
        offsets[i + 1] = len(targets)
    return SamplerTables(
        states,
        offsets,
        np.asarray(targets, dtype=np.int64),
        np.asarray(cum, dtype=np.float64),
        np.asarray([s[0] for s in states], dtype=np.int64),
        np.asarray([s[1] for s in states], dtype=np.int64),
        index[k.start],
    )


def _walk_python(offsets, targets, cum, start: int, uniforms) -> np.ndarray:
    off = offsets.tolist()
    tgt = targets.tolist()
    cmf = cum.tolist()
    out = np.empty(len(uniforms), dtype=np.int64)
    cur = start
    for i, u in enumerate(uniforms.tolist()):
        j = off[cur]
        end = off[cur + 1] - 1
        while j < end and u >= cmf[j]:
            j += 1
        cur = tgt[j]
        out[i] = cur
    return out


_walk_numba = None


def _get_numba_walk():
    global _walk_numba
    if _walk_numba is None:
        from numba import njit

        @njit(cache=True)
        def walk(offsets, targets, cum, start, uniforms, out):  # pragma: no cover
            cur = start
            for i in range(uniforms.shape[0]):
                u = uniforms[i]
                j = offsets[cur]
                end = offsets[cur + 1] - 1
                while j < end and u >= cum[j]:
                    j += 1
                cur = targets[j]
                out[i] = cur

        _walk_numba = walk
    return _walk_numba


def sample_path(tables: SamplerTables, steps: int, seed: int) -> np.ndarray:
    """State-index trajectory of length steps+1 (start state first)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    uniforms = np.random.default_rng(seed).random(steps)
    if sampler_backend() == "numba":
        out = np.empty(steps, dtype=np.int64)
        _get_numba_walk()(tables.offsets, tables.targets, tables.cum,
                          tables.start_index, uniforms, out)
    else:
        out = _walk_python(tables.offsets, tables.targets, tables.cum,
                           tables.start_index, uniforms)
    return np.concatenate(([tables.start_index], out))


@dataclass(frozen=True)
class Trajectory:
    xs: np.ndarray  # X positions, length steps+1
    ys: np.ndarray  # Y positions, length steps+1
    collisions: int  # avoidance violations observed in-run
    occupancy_x: np.ndarray  # fraction of time per vertex
    occupancy_y: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.xs) - 1


def simulate(k: JointKernel, steps: int, seed: int) -> Trajectory:
    """Run the chain from its start state with a seeded generator.

    Identical (kernel, steps, seed) give identical trajectories. The
    collision counter tallies avoidance violations: X stepping onto Y's
    pre-move position, or both tokens ending a step on one vertex.
    """
    tables = build_tables(k)
    idx = sample_path(tables, steps, seed)
    xs = tables.xs[idx]
    ys = tables.ys[idx]
    collisions = int((xs[1:] == ys[:-1]).sum() + (xs == ys).sum())
    n = k.graph.n
    occ_x = np.bincount(xs, minlength=n) / len(xs)
    occ_y = np.bincount(ys, minlength=n) / len(ys)
    return Trajectory(xs, ys, collisions, occ_x, occ_y)


@dataclass(frozen=True)
class BucketStat:
    count: int
    seen: dict[int, int]  # next-vertex counts
    p_value: float
    inflation: float  # estimated variance inflation vs iid sampling


@dataclass(frozen=True)
class HistoryTestReport:
    """Chi-square screen of next-step frequencies conditioned on observed
    history windows, with Bonferroni control across buckets."""

    token: str
    window: int
    alpha: float
    rejected: bool
    buckets_tested: int
    min_p_value: float  # 1.0 when nothing was testable
    worst_bucket: Optional[tuple[int, ...]]
    bucket_stats: dict[tuple[int, ...], BucketStat]
    skipped: list[tuple[int, ...]]  # buckets under min_count


def _variance_inflation(stream: np.ndarray, nbrs, total: int, batches: int = 16) -> float:
    """Batch-means estimate of Var(frequency)/binomial-variance, floored at 1.

    If the observed token really is a simple random walk, next-steps given
    the current vertex are iid and the true factor is 1; the floor keeps
    that case from ever becoming anti-conservative. Non-Markov processes
    can match every conditional mean while their hidden state drags
    long-range correlation into the stream; without this correction the
    plain chi-square rejects on variance, not on the means the window is
    meant to isolate.
    """
    size = len(stream) // batches
    if size < 10:
        return 1.0
    trimmed = stream[: batches * size].reshape(batches, size)
    factors = []
    for v in nbrs:
        p_hat = ((stream == v).sum()) / total
        if not 0 < p_hat < 1:
            continue
        shares = (trimmed == v).mean(axis=1)
        batch_var = shares.var(ddof=1)
        factors.append(batch_var / (p_hat * (1 - p_hat) / size))
    return max(1.0, float(np.mean(factors))) if factors else 1.0


def history_frequency_test(
    traj: Trajectory,
    g: Graph,
    token: str = "x",
    window: int = 1,
    alpha: float = 0.01,
    min_count: int = 50,
) -> HistoryTestReport:
    """Test one observed token's moves against the uniform walk rows.

    For every observed window of ``window`` consecutive positions the
    next-step counts are compared by chi-square to uniform over the
    neighbors of the window's last vertex, scaled by the batch-means
    variance-inflation estimate (see _variance_inflation). Buckets with
    fewer than ``min_count`` observations are skipped and listed. The
    overall verdict rejects when any bucket's p-value drops below alpha
    divided by the number of tested buckets.
    """
    if token not in ("x", "y"):
        raise ValueError("token must be 'x' or 'y'")
    pos = traj.xs if token == "x" else traj.ys
    if len(pos) <= window:
        return HistoryTestReport(token, window, alpha, False, 0, 1.0, None, {}, [])
    n = g.n
    # integer-encode each window; group successors per bucket in time order
    codes = np.zeros(len(pos) - window, dtype=np.int64)
    for i in range(window):
        codes = codes * n + pos[i : len(pos) - window + i]
    nxt = pos[window:]
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    sorted_next = nxt[order]
    boundaries = np.nonzero(np.diff(sorted_codes))[0] + 1
    groups = np.split(sorted_next, boundaries)
    starts = np.concatenate(([0], boundaries))

    def decode(code: int) -> tuple[int, ...]:
        out = []
        for _ in range(window):
            out.append(code % n)
            code //= n
        return tuple(reversed(out))

    stats: dict[tuple[int, ...], BucketStat] = {}
    skipped: list[tuple[int, ...]] = []
    for start, stream in zip(starts, groups):
        bucket = decode(int(sorted_codes[start]))
        total = len(stream)
        if total < min_count:
            skipped.append(bucket)
            continue
        seen_vals, seen_counts = np.unique(stream, return_counts=True)
        seen = dict(zip(seen_vals.tolist(), seen_counts.tolist()))
        nbrs = g.neighbors(bucket[-1])
        if any(v not in nbrs for v in seen):
            stats[bucket] = BucketStat(total, seen, 0.0, 1.0)  # impossible move
            continue
        d = len(nbrs)
        if d < 2:
            stats[bucket] = BucketStat(total, seen, 1.0, 1.0)
            continue
        expected = total / d
        stat = sum((seen.get(v, 0) - expected) ** 2 / expected for v in nbrs)
        kappa = _variance_inflation(stream, nbrs, total)
        stats[bucket] = BucketStat(total, seen, float(chi2.sf(stat / kappa, d - 1)), kappa)
    skipped.sort()
    if not stats:
        return HistoryTestReport(token, window, alpha, False, 0, 1.0, None, {}, skipped)
    worst = min(stats, key=lambda b: (stats[b].p_value, b))
    min_p = stats[worst].p_value
    rejected = min_p < alpha / len(stats)
    return HistoryTestReport(
        token, window, alpha, rejected, len(stats), min_p, worst, stats, skipped
    )
