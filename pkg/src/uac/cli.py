"""Command-line front end: decide | construct | verify | simulate.

Reports are deterministic key-value text (no timestamps, no machine state):
identical configuration and seed reproduce byte-identical output. Every
report echoes the tool version, the command line, and sha256 hashes of the
canonical graph/kernel serializations involved.

Exit codes: 0 success (decide: graph admits a UAC; verify: all enforced
checks passed), 1 negative outcome, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path
from typing import Optional

import uac
from uac import couplings, forbidden, graphs, montecarlo, verify
from uac.graphs import Graph
from uac.kernels import JointKernel

__all__ = ["main"]


def _sha(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _emit(lines: list[str], out: Optional[str]) -> None:
    doc = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(doc)
    else:
        sys.stdout.write(doc)


def _graph_from_args(args) -> tuple[Graph, str]:
    if getattr(args, "graph", None):
        text = Path(args.graph).read_text()
        return graphs.parse_graph(text), f"file {args.graph}"
    if getattr(args, "builder", None):
        name = args.builder[0]
        params = [int(p) for p in args.builder[1:]]
        return graphs.build(name, params), "builder " + " ".join(args.builder)
    raise ValueError("a graph is required: pass --graph FILE or --builder NAME [PARAMS]")


def _parse_start(args) -> Optional[tuple[int, int]]:
    if getattr(args, "start", None) is None:
        return None
    return (args.start[0], args.start[1])


# construction name -> (positional integer params, needs a graph argument)
CONSTRUCTIONS = {
    "fixed-distance-cycle": (2, False),
    "hypercube-flip": (1, False),
    "cluster": (2, False),
    "k3-loops": (0, False),
    "tree-noncoupling": (0, False),
    "automorphism": (0, True),
    "bipartite": (0, True),
    "near-complete": (0, True),
    "srg-matching": (0, True),
    "extracted": (0, True),
    "min-entropy": (0, True),
}


def _build_construction(args) -> tuple[JointKernel, str]:
    name = args.name
    if name not in CONSTRUCTIONS:
        raise ValueError(f"unknown construction {name!r}; known: {', '.join(sorted(CONSTRUCTIONS))}")
    arity, needs_graph = CONSTRUCTIONS[name]
    params = [int(p) for p in args.params]
    if len(params) != arity:
        raise ValueError(f"construction {name!r} takes {arity} integer parameter(s), got {len(params)}")
    start = _parse_start(args)
    desc = name + ("" if not params else " " + " ".join(map(str, params)))
    if needs_graph:
        g, gdesc = _graph_from_args(args)
        desc += f" on {gdesc}"
    if name == "fixed-distance-cycle":
        return couplings.fixed_distance_cycle(*params), desc
    if name == "hypercube-flip":
        return couplings.hypercube_flip(*params), desc
    if name == "cluster":
        return couplings.cluster_coupling_complete(*params)[1], desc
    if name == "k3-loops":
        return couplings.k3_loops_coupling(), desc
    if name == "tree-noncoupling":
        return couplings.tree_noncoupling_example(), desc
    if name == "automorphism":
        if not args.perm:
            raise ValueError("automorphism construction requires --perm v0,v1,...")
        phi = [int(v) for v in args.perm.split(",")]
        return couplings.automorphism_coupling(g, phi, start_x=args.start_x), desc
    if name == "bipartite":
        return couplings.bipartite_coupling(g, start=start), desc
    if name == "near-complete":
        return couplings.near_complete_regular_coupling(g, start=start), desc
    if name == "srg-matching":
        return couplings.srg_matching_coupling(g, start=start), desc
    trace = forbidden.forbidden_closure(g)
    if name == "extracted":
        return forbidden.extract_uac_kernel(g, trace, start=start), desc
    return forbidden.minimum_entropy_kernel(g, trace, start=start), desc


def _header(args, command: str) -> list[str]:
    return [
        f"tool = uac {uac.__version__}",
        f"command = {command}",
        f"config = uac {' '.join(args.argv)}",
    ]


# ── decide ───────────────────────────────────────────────────────────────

def cmd_decide(args) -> int:
    try:
        g, gdesc = _graph_from_args(args)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    if not g.is_connected():
        return _fail("graph is not connected; the analysis is defined for connected graphs")
    trace = forbidden.forbidden_closure(g)
    alive = forbidden.survivors(g, trace.fixed_point)
    lines = _header(args, "decide")
    lines += [
        f"graph = {gdesc}",
        f"graph_hash = {_sha(graphs.format_graph(g))}",
        f"vertices = {g.n}",
        f"edges = {len(g.edges)}",
        f"verdict = {'admits' if alive else 'does-not-admit'}",
        f"rounds = {trace.rounds}",
        "generation_sizes = " + " ".join(str(len(f)) for f in trace.generations),
        f"survivors = {len(alive)}",
        f"witness = {'%d %d' % min(alive) if alive else '-'}",
    ]
    _emit(lines, args.out)
    return 0 if alive else 1


# ── construct ────────────────────────────────────────────────────────────

def cmd_construct(args) -> int:
    try:
        kernel, desc = _build_construction(args)
    except (OSError, ValueError, RuntimeError) as exc:
        return _fail(str(exc))
    header = [
        f"uac {uac.__version__} kernel",
        f"construction: {desc}",
        f"graph-hash: {_sha(graphs.format_graph(kernel.graph))}",
        f"states: {len(kernel)}",
        f"start: {kernel.start[0]} {kernel.start[1]}",
    ]
    text = kernel.to_text(header)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(kernel)}-state kernel to {args.out}")
    else:
        sys.stdout.write(text)
    if args.graph_out:
        Path(args.graph_out).write_text(graphs.format_graph(kernel.graph))
    return 0


# ── verify ───────────────────────────────────────────────────────────────

def _edge_consistency(k: JointKernel, g: Graph) -> verify.CheckOutcome:
    """Every positive transition must move both tokens along edges."""
    for s in sorted(k.rows):
        for t in sorted(k.rows[s]):
            if t[0] not in g.neighbors(s[0]) or t[1] not in g.neighbors(s[1]):
                return verify.CheckOutcome(
                    "edge-consistency", False,
                    witness=f"transition {s} -> {t} moves a token off the graph's edges",
                )
    return verify.CheckOutcome("edge-consistency", True)


def cmd_verify(args) -> int:
    try:
        if args.kernel:
            g, gdesc = _graph_from_args(args)
            kernel = JointKernel.from_text(g, Path(args.kernel).read_text())
            kdesc = f"file {args.kernel}"
        elif args.name:
            kernel, kdesc = _build_construction(args)
            g, gdesc = kernel.graph, "from construction"
        else:
            raise ValueError("verify needs --kernel FILE (with a graph) or --construct NAME")
    except (OSError, ValueError, RuntimeError) as exc:
        return _fail(str(exc))
    lines = _header(args, "verify")
    lines += [
        f"graph = {gdesc}",
        f"graph_hash = {_sha(graphs.format_graph(g))}",
        f"kernel = {kdesc}",
        f"kernel_hash = {_sha(kernel.to_text())}",
        f"states = {len(kernel)}",
    ]
    enforced: list[tuple[str, bool]] = []

    consistency = _edge_consistency(kernel, g)
    lines.append(f"edge_consistency = {'pass' if consistency else 'fail'}")
    if consistency.witness:
        lines.append(f"edge_consistency_witness = {consistency.witness}")
    enforced.append(("edge-consistency", consistency.passed))

    try:
        pi = verify.stationary_distribution(kernel)
    except verify.MultipleClosedClassesError as exc:
        lines += [f"stationary = none ({exc})", "result = fail"]
        _emit(lines, args.out)
        return 1
    lines += [
        f"stationary_method = {pi.method}",
        f"stationary_support = {len(pi.support())}",
    ]
    for outcome, always in (
        (verify.check_avoidance(kernel, pi), True),
        (verify.check_marginal_stationary(kernel, g, pi), True),
        (verify.check_uniformity(kernel, g, pi), args.require_uniform),
    ):
        lines.append(f"{outcome.name} = {'pass' if outcome else 'fail'}")
        if outcome.witness:
            lines.append(f"{outcome.name}_witness = {outcome.witness}")
        for w in outcome.warnings:
            lines.append(f"{outcome.name}_warning = {w}")
        if always:
            enforced.append((outcome.name, outcome.passed))

    if args.filter:
        for token in ("x", "y"):
            fr = verify.filter_faithfulness(kernel, g, token, belief_cap=args.belief_cap, pi=pi)
            lines.append(f"filter_{token} = {fr.status}")
            lines.append(f"filter_{token}_beliefs = {fr.beliefs_explored}")
            if fr.status == "violation":
                lines.append(f"filter_{token}_history = {' '.join(map(str, fr.history))}")
                pred = " ".join(f"{v}:{p}" for v, p in sorted(fr.predicted.items()))
                lines.append(f"filter_{token}_predicted = {pred}")
            enforced.append((f"filter-{token}", fr.status == "faithful"))

    if args.monte_carlo:
        if args.seed is None:
            return _fail("--monte-carlo requires an explicit --seed")
        traj = montecarlo.simulate(kernel, args.steps, args.seed)
        lines.append(f"mc_steps = {args.steps}")
        lines.append(f"mc_seed = {args.seed}")
        lines.append(f"mc_collisions = {traj.collisions}")
        enforced.append(("mc-collisions", traj.collisions == 0))
        for token in ("x", "y"):
            rep = montecarlo.history_frequency_test(
                traj, g, token, window=args.window, alpha=args.alpha
            )
            tag = f"mc_history_{token}_h{args.window}"
            lines.append(f"{tag} = {'reject' if rep.rejected else 'ok'}")
            lines.append(f"{tag}_buckets = {rep.buckets_tested}")
            lines.append(f"{tag}_min_p = {rep.min_p_value:.3e}")
            if rep.worst_bucket is not None:
                lines.append(f"{tag}_worst_bucket = {' '.join(map(str, rep.worst_bucket))}")
            enforced.append((f"mc-history-{token}", not rep.rejected))

    ok = all(passed for _, passed in enforced)
    lines.append(f"result = {'pass' if ok else 'fail'}")
    _emit(lines, args.out)
    return 0 if ok else 1


# ── simulate ─────────────────────────────────────────────────────────────

def cmd_simulate(args) -> int:
    try:
        if args.kernel:
            g, _gdesc = _graph_from_args(args)
            kernel = JointKernel.from_text(g, Path(args.kernel).read_text())
            kdesc = f"file {args.kernel}"
        elif args.name:
            kernel, kdesc = _build_construction(args)
        else:
            raise ValueError("simulate needs --kernel FILE (with a graph) or --construct NAME")
    except (OSError, ValueError, RuntimeError) as exc:
        return _fail(str(exc))
    if args.seed is None:
        return _fail("simulate requires an explicit --seed")
    traj = montecarlo.simulate(kernel, args.steps, args.seed)
    if args.out:
        with open(args.out, "w") as fh:
            for x, y in zip(traj.xs.tolist(), traj.ys.tolist()):
                fh.write(f"{x} {y}\n")
    lines = _header(args, "simulate")
    lines += [
        f"kernel = {kdesc}",
        f"kernel_hash = {_sha(kernel.to_text())}",
        f"steps = {args.steps}",
        f"seed = {args.seed}",
        f"collisions = {traj.collisions}",
        "occupancy_x = " + " ".join(f"{v:.6f}" for v in traj.occupancy_x),
        "occupancy_y = " + " ".join(f"{v:.6f}" for v in traj.occupancy_y),
    ]
    if args.out:
        lines.append(f"trajectory = {args.out}")
    _emit(lines, args.report)
    return 0 if traj.collisions == 0 else 1


# ── argument parsing ─────────────────────────────────────────────────────

def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="graph file (edge-list format)")
    p.add_argument(
        "--builder", nargs="+", metavar="NAME/PARAM",
        help="built-in graph: " + ", ".join(sorted(graphs.BUILDERS)),
    )


def _add_construction_args(p: argparse.ArgumentParser, positional: bool) -> None:
    if positional:
        p.add_argument("name", help="construction: " + ", ".join(sorted(CONSTRUCTIONS)))
        p.add_argument("params", nargs="*", help="integer parameters")
    else:
        p.add_argument("--construct", dest="name", help="construction name")
        p.add_argument("--params", nargs="*", default=[], help="construction parameters")
    p.add_argument("--start", nargs=2, type=int, metavar=("X", "Y"), help="start state")
    p.add_argument("--start-x", type=int, default=0, help="token X start for automorphism coupling")
    p.add_argument("--perm", help="automorphism as comma-separated images, e.g. 7,6,5,4,3,2,1,0")


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = argparse.ArgumentParser(
        prog="uac",
        description="Uniform avoidance couplings: decide, construct, verify, simulate.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("decide", help="forbidden-state analysis of a graph")
    _add_graph_args(p)
    p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("construct", help="build a named coupling kernel")
    _add_construction_args(p, positional=True)
    _add_graph_args(p)
    p.add_argument("--out", help="kernel file to write")
    p.add_argument("--graph-out", help="also write the underlying graph file")

    p = sub.add_parser("verify", help="check a kernel exactly and statistically")
    p.add_argument("--kernel", help="kernel file; alternatively use --construct")
    _add_construction_args(p, positional=False)
    _add_graph_args(p)
    p.add_argument("--require-uniform", action="store_true",
                   help="count the uniformity check toward the exit code")
    p.add_argument("--filter", action="store_true", help="run the belief-filter faithfulness check")
    p.add_argument("--belief-cap", type=int, default=10_000)
    p.add_argument("--monte-carlo", action="store_true", help="run the seeded statistical checks")
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=int, default=3, help="history length for the frequency test")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("simulate", help="sample a seeded trajectory")
    p.add_argument("--kernel", help="kernel file; alternatively use --construct")
    _add_construction_args(p, positional=False)
    _add_graph_args(p)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="trajectory file ('x y' per line)")
    p.add_argument("--report", help="write the summary here instead of stdout")

    args = parser.parse_args(argv)
    args.argv = argv
    if args.cmd == "decide":
        return cmd_decide(args)
    if args.cmd == "construct":
        return cmd_construct(args)
    if args.cmd == "verify":
        return cmd_verify(args)
    return cmd_simulate(args)


if __name__ == "__main__":
    sys.exit(main())
