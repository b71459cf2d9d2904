"""Difference logic over a weighted constraint graph.

Atoms ``0 <= y - x + c`` become edges ``x -c-> y``; a conjunction is
inconsistent exactly when the graph has a negative cycle.  Rational
constants are rescaled to integers by the common denominator of the whole
problem and interpolants are emitted back in original units.  Interpolation
replaces each maximal run of A-edges on the reported cycle by its summary
constraint ``0 <= end - start + weight``.

Vertices are arbitrary hashable keys so the UTVPI layer can reuse the graph
over signed variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor, lcm

from .delta import DZERO, Delta, dq
from .partition import Partition
from .proofs import side_for_cut
from .terms import (LE, LT, Context, FLit, Formula, Linear, FALSE, TRUE,
                    fand, lin_make)


class DlError(Exception):
    pass


@dataclass(frozen=True)
class Edge:
    src: object
    dst: object
    weight: Delta      # scaled; eps < 0 encodes a strict source atom
    atom: int          # 0 for synthetic edges
    negated: bool = False
    side: str = ""     # forced side for synthetic edges

    def lit(self) -> int:
        return -self.atom if self.negated else self.atom


class DlGraph:
    """Edge list with deterministic Bellman-Ford negative-cycle detection."""

    def __init__(self) -> None:
        self.edges: list[Edge] = []
        self.vertices: list[object] = []
        self._vset: dict[object, int] = {}

    def _vertex(self, v) -> None:
        if v not in self._vset:
            self._vset[v] = len(self.vertices)
            self.vertices.append(v)

    def add_edge(self, edge: Edge) -> None:
        self._vertex(edge.src)
        self._vertex(edge.dst)
        self.edges.append(edge)

    def truncate(self, n: int) -> None:
        del self.edges[n:]

    def negative_cycle(self) -> list[Edge] | None:
        """First negative cycle found; edges are scanned in insertion order."""
        dist: dict[object, Delta] = {v: DZERO for v in self.vertices}
        pred: dict[object, Edge] = {}
        n = len(self.vertices)
        changed = True
        for _ in range(n):
            if not changed:
                return None
            changed = False
            for e in self.edges:
                nd = dist[e.src] + e.weight
                if nd < dist[e.dst]:
                    dist[e.dst] = nd
                    pred[e.dst] = e
                    changed = True
        if not changed:
            return None
        # some vertex was still relaxed: walk predecessors into the cycle
        start = next(e.dst for e in self.edges
                     if dist[e.src] + e.weight < dist[e.dst])
        v = start
        for _ in range(n):
            v = pred[v].src
        cycle: list[Edge] = []
        u = v
        while True:
            e = pred[u]
            cycle.append(e)
            u = e.src
            if u == v:
                break
        cycle.reverse()
        total = DZERO
        for e in cycle:
            total = total + e.weight
        if not total.is_negative():
            raise DlError("predecessor walk produced a non-negative cycle")
        return cycle

    def potentials(self) -> dict[object, Delta]:
        """Vertex values satisfying every edge; only valid with no negative cycle."""
        dist: dict[object, Delta] = {v: DZERO for v in self.vertices}
        for _ in range(len(self.vertices)):
            changed = False
            for e in self.edges:
                nd = dist[e.src] + e.weight
                if nd < dist[e.dst]:
                    dist[e.dst] = nd
                    changed = True
            if not changed:
                break
        return {v: -d for v, d in dist.items()}


class DlSolver:
    """Theory solver for conjunctions of difference-logic literals.

    Over the integers, strict literals are rewritten a priori into weak ones
    (and rational constants floored); over the rationals strict edges carry
    an infinitesimal.  `scale` is the precomputed common-denominator factor
    of the whole problem.
    """

    def __init__(self, ctx: Context, integer: bool = False,
                 scale: int = 1) -> None:
        self.ctx = ctx
        self.integer = integer
        self.scale = scale
        self.graph = DlGraph()
        self._marks: list[int] = []
        self.last_cycle: list[Edge] | None = None

    def push(self) -> None:
        self._marks.append(len(self.graph.edges))

    def pop(self) -> None:
        self.graph.truncate(self._marks.pop())

    def edge_of_lit(self, lit: int) -> Edge:
        op, lin = self.ctx.lit_lin(lit)
        if op not in (LE, LT):
            raise DlError(f"literal {lit} is not a difference bound")
        view = dl_view_lin(lin)
        if view is None:
            raise DlError(f"literal {lit} is not a difference bound")
        src, dst, c = view
        c = c * self.scale
        if self.integer:
            w = dq(floor(c)) if op == LE else dq(-floor(-c) - 1)
        else:
            w = Delta(c) if op == LE else Delta(c, Fraction(-1))
        return Edge(src, dst, w, abs(lit), lit < 0)

    def assert_lit(self, lit: int) -> list[int] | None:
        self.graph.add_edge(self.edge_of_lit(lit))
        return None

    def check(self, final: bool = True) -> list[int] | None:
        cycle = self.graph.negative_cycle()
        self.last_cycle = cycle
        if cycle is None:
            return None
        lits: list[int] = []
        for e in cycle:
            if e.atom and e.lit() not in lits:
                lits.append(e.lit())
        return lits

    def model(self) -> dict[int, Fraction]:
        pots = self.graph.potentials()
        out = {}
        for v, val in pots.items():
            if isinstance(v, int):
                out[v] = _concrete(val) / self.scale
        return out


def dl_view_lin(lin: Linear) -> tuple[int, int, Fraction] | None:
    if len(lin.coeffs) != 2:
        return None
    (t1, c1), (t2, c2) = lin.coeffs
    if {c1, c2} != {Fraction(1), Fraction(-1)}:
        return None
    dst, src = (t1, t2) if c1 == 1 else (t2, t1)
    return (src, dst, lin.const)


def _concrete(d: Delta) -> Fraction:
    # good enough for model output; strict slack resolved by a fixed epsilon
    return d.q + d.eps * Fraction(1, 1 << 20)


def problem_scale(ctx: Context, atoms) -> int:
    """LCM of constant denominators across the given difference atoms."""
    denoms = [1]
    for aid in atoms:
        op, lin = ctx.atom_lin(aid)
        denoms.append(lin.const.denominator)
    return lcm(*denoms)


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

def edge_side(part: Partition, e: Edge, cut: int) -> str:
    if e.side:
        return e.side
    return side_for_cut(part, e.atom, cut)


def maximal_a_runs(cycle: list[Edge], sides: list[str]) -> list[list[int]]:
    """Indices of the maximal A-edge runs of a mixed cyclic edge sequence."""
    n = len(cycle)
    start = next(i for i in range(n) if sides[i] == "B")
    runs: list[list[int]] = []
    cur: list[int] = []
    for k in range(1, n + 1):
        i = (start + k) % n
        if sides[i] == "A":
            cur.append(i)
        elif cur:
            runs.append(cur)
            cur = []
    return runs


def summary_lin(ctx: Context, cycle: list[Edge], run: list[int],
                scale: int) -> tuple[Linear, Fraction]:
    """Summary constraint 0 <= dst - src + w of one A-run, in original units."""
    src = cycle[run[0]].src
    dst = cycle[run[-1]].dst
    total = DZERO
    for i in run:
        total = total + cycle[i].weight
    w = Fraction(total.q, scale)
    acc: dict[int, Fraction] = {}
    acc[dst] = acc.get(dst, Fraction(0)) + 1
    acc[src] = acc.get(src, Fraction(0)) - 1
    return lin_make(acc, w), total.eps


def interpolate_cycle(ctx: Context, part: Partition, cycle: list[Edge],
                      cut: int, scale: int = 1) -> Formula:
    """Conjunction of summary constraints of the maximal A-paths."""
    sides = [edge_side(part, e, cut) for e in cycle]
    if all(s == "A" for s in sides):
        return FALSE
    if all(s == "B" for s in sides):
        return TRUE
    conjuncts = []
    for run in maximal_a_runs(cycle, sides):
        lin, eps = summary_lin(ctx, cycle, run, scale)
        if lin.is_const():
            if lin.const > 0 or (lin.const == 0 and eps == 0):
                continue
            return FALSE
        op = LT if eps < 0 else LE
        conjuncts.append(FLit(ctx.mk_la_atom(op, lin)))
    return fand(*conjuncts)
