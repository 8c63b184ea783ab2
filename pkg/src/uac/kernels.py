"""Joint transition kernels on ordered vertex pairs, with exact rationals.

A JointKernel is a Markov chain whose states are ordered pairs (x, y) of
vertices of a fixed graph: x is token X's position, y is token Y's. All
transition probabilities are `fractions.Fraction`; floats appear nowhere in
the exact pipeline.

Text format (one kernel per file, '#' starts a comment):
    s <x> <y>                    state declaration; the FIRST one is the start
    t <x> <y> <x'> <y'> <p>/<q>  transition (x,y) -> (x',y') with probability p/q
Zero-probability transitions are omitted. Rows must sum to exactly 1.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from uac.graphs import Graph

__all__ = ["JointKernel", "KernelFormatError"]

State = tuple[int, int]


class KernelFormatError(ValueError):
    """Malformed kernel file; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class JointKernel:
    """Finite Markov chain on ordered vertex pairs of ``graph``.

    Invariants enforced at construction: every row sums to exactly 1, every
    positive-probability target is itself a declared state (the state set is
    closed), and the start state is declared. Instances are immutable.
    """

    __slots__ = ("graph", "start", "rows", "_states")

    def __init__(
        self,
        graph: Graph,
        start: State,
        rows: Mapping[State, Mapping[State, Fraction]],
    ):
        states = set(rows)
        if start not in states:
            raise ValueError(f"start state {start} is not in the state set")
        clean: dict[State, dict[State, Fraction]] = {}
        for s, row in rows.items():
            x, y = s
            if not (0 <= x < graph.n and 0 <= y < graph.n):
                raise ValueError(f"state {s} out of range for graph on {graph.n} vertices")
            positive = {t: Fraction(p) for t, p in row.items() if p != 0}
            if any(p < 0 for p in positive.values()):
                raise ValueError(f"negative probability in row of {s}")
            if sum(positive.values(), Fraction(0)) != 1:
                raise ValueError(f"row of {s} does not sum to 1")
            missing = set(positive) - states
            if missing:
                raise ValueError(f"row of {s} targets undeclared states {sorted(missing)}")
            clean[s] = positive
        self.graph = graph
        self.start = start
        self.rows = clean
        self._states = tuple(sorted(states))

    @property
    def states(self) -> tuple[State, ...]:
        return self._states

    def prob(self, s: State, t: State) -> Fraction:
        return self.rows[s].get(t, Fraction(0))

    def row(self, s: State) -> dict[State, Fraction]:
        return dict(self.rows[s])

    def x_marginal(self, s: State) -> dict[int, Fraction]:
        """Distribution of token X's next position out of state s."""
        out: dict[int, Fraction] = {}
        for (x2, _y2), p in self.rows[s].items():
            out[x2] = out.get(x2, Fraction(0)) + p
        return out

    def y_marginal(self, s: State) -> dict[int, Fraction]:
        """Distribution of token Y's next position out of state s."""
        out: dict[int, Fraction] = {}
        for (_x2, y2), p in self.rows[s].items():
            out[y2] = out.get(y2, Fraction(0)) + p
        return out

    def __len__(self) -> int:
        return len(self._states)

    def __repr__(self) -> str:
        return f"JointKernel(states={len(self._states)}, start={self.start})"

    # ── serialization ────────────────────────────────────────────────────

    def to_text(self, header: Iterable[str] = ()) -> str:
        """Canonical text form: start state first, everything else sorted."""
        lines = [f"# {h}" for h in header]
        order = [self.start] + [s for s in self._states if s != self.start]
        for x, y in order:
            lines.append(f"s {x} {y}")
        for s in order:
            for t in sorted(self.rows[s]):
                p = self.rows[s][t]
                lines.append(f"t {s[0]} {s[1]} {t[0]} {t[1]} {p.numerator}/{p.denominator}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, graph: Graph, text: str) -> "JointKernel":
        """Parse the kernel format against ``graph``; validates row sums."""
        start: State | None = None
        states: set[State] = set()
        rows: dict[State, dict[State, Fraction]] = {}
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] == "s" and len(fields) == 3:
                try:
                    s = (int(fields[1]), int(fields[2]))
                except ValueError:
                    raise KernelFormatError(line_no, f"non-integer state in {line!r}") from None
                if s in states:
                    raise KernelFormatError(line_no, f"duplicate state declaration {s}")
                if not (0 <= s[0] < graph.n and 0 <= s[1] < graph.n):
                    raise KernelFormatError(line_no, f"state {s} out of range")
                states.add(s)
                rows[s] = {}
                if start is None:
                    start = s
            elif fields[0] == "t" and len(fields) == 6:
                try:
                    s = (int(fields[1]), int(fields[2]))
                    t = (int(fields[3]), int(fields[4]))
                    num, den = fields[5].split("/")
                    p = Fraction(int(num), int(den))
                except (ValueError, ZeroDivisionError):
                    raise KernelFormatError(line_no, f"malformed transition {line!r}") from None
                if s not in states:
                    raise KernelFormatError(line_no, f"transition from undeclared state {s}")
                if t in rows[s]:
                    raise KernelFormatError(line_no, f"duplicate transition {s} -> {t}")
                if p < 0:
                    raise KernelFormatError(line_no, f"negative probability in {line!r}")
                rows[s][t] = p
            else:
                raise KernelFormatError(line_no, f"unrecognized line {line!r}")
        if start is None:
            raise KernelFormatError(1, "kernel declares no states")
        try:
            return cls(graph, start, rows)
        except ValueError as exc:
            raise KernelFormatError(1, str(exc)) from None
