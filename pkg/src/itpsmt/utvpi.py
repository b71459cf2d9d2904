"""UTVPI constraints via the signed-variable difference-logic encoding.

Every constraint ``0 <= a*x1 + b*x2 + k`` (a, b unit coefficients) becomes
two dual edges over the doubled vertex set {x+, x-}; single-variable bounds
become one self-dual edge with doubled constant.  Rational consistency is
negative-cycle detection on the encoded graph.  Integer consistency is
layered on top: after a passing rational check, the conjunction is
Z-inconsistent exactly when some zero-weight cycle passes through x- and x+
with an odd-weight x- ~> x+ segment.

Interpolation maps difference-logic summary constraints back through the
signed-variable decoding; over the integers the odd-path witness is handled
by four cases (plain summaries, summaries split at the witness variable,
tightening, and conditional tightening).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor

from .delta import DZERO, Delta, dq
from .difflogic import DlGraph, Edge
from .partition import Partition
from .proofs import side_for_cut
from .terms import (LE, LT, Context, FLit, Formula, LaAtom, Linear, FALSE,
                    TRUE, fand, fimp, lin_make)


class UtvpiError(Exception):
    pass


def utvpi_view_lin(lin: Linear) -> tuple[tuple[int, int], ...] | None:
    """Signed variables of a UTVPI-shaped linear part, or None."""
    if not 1 <= len(lin.coeffs) <= 2:
        return None
    out = []
    for t, c in lin.coeffs:
        if c == 1:
            out.append((t, 1))
        elif c == -1:
            out.append((t, -1))
        else:
            return None
    return tuple(out)


def neg(v: tuple[int, int]) -> tuple[int, int]:
    return (v[0], -v[1])


@dataclass
class ZWitness:
    """Zero-weight cycle through x+/x- with odd x- ~> x+ segment."""

    var: int
    path_np: list[Edge]     # x- ~> x+, odd weight 2k+1
    path_pn: list[Edge]     # x+ ~> x-, weight -2k-1
    weight_np: int

    def cycle(self) -> list[Edge]:
        return self.path_np + self.path_pn


class UtvpiSolver:
    """Conjunction solver for UTVPI literals, layered Q-then-Z."""

    def __init__(self, ctx: Context, integer: bool = False, scale: int = 1) -> None:
        self.ctx = ctx
        self.integer = integer
        self.scale = 1 if integer else scale
        self.graph = DlGraph()
        self._marks: list[int] = []
        self.last_cycle: list[Edge] | None = None
        self.last_witness: ZWitness | None = None

    def push(self) -> None:
        self._marks.append(len(self.graph.edges))

    def pop(self) -> None:
        self.graph.truncate(self._marks.pop())

    def edges_of_lit(self, lit: int) -> list[Edge]:
        op, lin = self.ctx.lit_lin(lit)
        if op not in (LE, LT):
            raise UtvpiError(f"literal {lit} is not a UTVPI inequality")
        sv = utvpi_view_lin(lin)
        if sv is None:
            raise UtvpiError(f"literal {lit} is not a UTVPI inequality")
        k = lin.const * self.scale
        if self.integer:
            kk = Fraction(floor(k)) if op == LE else Fraction(-floor(-k) - 1)
            w = dq(kk)
        else:
            w = Delta(k) if op == LE else Delta(k, Fraction(-1))
        atom, negated = abs(lit), lit < 0
        if len(sv) == 1:
            s1 = sv[0]
            return [Edge(neg(s1), s1, w + w, atom, negated)]
        s1, s2 = sv
        return [Edge(neg(s2), s1, w, atom, negated),
                Edge(neg(s1), s2, w, atom, negated)]

    def assert_lit(self, lit: int) -> list[int] | None:
        for e in self.edges_of_lit(lit):
            self.graph.add_edge(e)
        return None

    def check_q(self) -> list[int] | None:
        cycle = self.graph.negative_cycle()
        self.last_cycle = cycle
        if cycle is None:
            return None
        return _cycle_lits(cycle)

    def check_z(self) -> list[int] | None:
        """Zero-cycle/odd-path scan; call only after check_q passed."""
        verts = list(self.graph.vertices)
        index = {v: i for i, v in enumerate(verts)}
        n = len(verts)
        INF = None
        dist = [[INF] * n for _ in range(n)]
        nxt: list[list[Edge | None]] = [[None] * n for _ in range(n)]
        for e in self.graph.edges:
            i, j = index[e.src], index[e.dst]
            w = int(e.weight.q)
            if dist[i][j] is None or w < dist[i][j]:
                dist[i][j] = w
                nxt[i][j] = e
        for i in range(n):
            if dist[i][i] is None or 0 < dist[i][i]:
                dist[i][i] = 0
                nxt[i][i] = None
        for k in range(n):
            dk = dist[k]
            for i in range(n):
                dik = dist[i][k]
                if dik is None:
                    continue
                di = dist[i]
                for j in range(n):
                    if dk[j] is None:
                        continue
                    nw = dik + dk[j]
                    if di[j] is None or nw < di[j]:
                        di[j] = nw
                        nxt[i][j] = nxt[i][k]
        best: tuple[int, int, int] | None = None
        for tid in sorted({v[0] for v in verts}):
            vp, vn = (tid, 1), (tid, -1)
            if vp not in index or vn not in index:
                continue
            i, j = index[vn], index[vp]
            d1, d2 = dist[i][j], dist[j][i]
            if d1 is None or d2 is None or d1 + d2 != 0 or d1 % 2 == 0:
                continue
            if best is None or (abs(d1), tid) < (abs(best[1]), best[0]):
                best = (tid, d1)
        if best is None:
            self.last_witness = None
            return None
        # prefer the witness with the smallest odd-path magnitude: it keeps
        # tightening constants tight and matches the shortest explanations
        tid, d1 = best
        p1 = _walk(index, nxt, verts, (tid, -1), (tid, 1))
        p2 = _walk(index, nxt, verts, (tid, 1), (tid, -1))
        self.last_witness = ZWitness(tid, p1, p2, d1)
        return _cycle_lits(p1 + p2)

    def check(self, final: bool = True) -> list[int] | None:
        conflict = self.check_q()
        if conflict is not None:
            return conflict
        if self.integer and final:
            return self.check_z()
        return None

    def model(self) -> dict[int, Fraction]:
        """Variable values from vertex potentials: x = (x+ - x-)/2."""
        pots = self.graph.potentials()
        out: dict[int, Fraction] = {}
        for v, val in pots.items():
            tid, sign = v
            if tid in out:
                continue
            up = pots.get((tid, 1), DZERO)
            un = pots.get((tid, -1), DZERO)
            q = (_approx(up) - _approx(un)) / 2
            out[tid] = q / self.scale
        if self.integer:
            out = {t: Fraction(_round_half(q)) for t, q in out.items()}
        return out


def _round_half(q: Fraction) -> int:
    return floor(q) if (q - floor(q)) < Fraction(1, 2) else floor(q) + 1


def _approx(d: Delta) -> Fraction:
    return d.q + d.eps * Fraction(1, 1 << 20)


def _walk(index, nxt, verts, src, dst) -> list[Edge]:
    path: list[Edge] = []
    cur = src
    guard = 4 * len(verts) * len(verts) + 4
    while cur != dst or not path:
        e = nxt[index[cur]][index[dst]]
        if e is None:
            raise UtvpiError("path reconstruction failed")
        path.append(e)
        cur = e.dst
        guard -= 1
        if guard < 0:
            raise UtvpiError("path reconstruction cycled")
    return path


def _cycle_lits(cycle: list[Edge]) -> list[int]:
    lits: list[int] = []
    for e in cycle:
        if e.atom and e.lit() not in lits:
            lits.append(e.lit())
    return lits


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

def _edge_side(part: Partition, e: Edge, cut: int) -> str:
    if e.side:
        return e.side
    return side_for_cut(part, e.atom, cut)


def _summary_formula(ctx: Context, src, dst, total: Delta, scale: int,
                     integer: bool) -> Formula | None:
    """UTVPI image of the summary edge src -> dst with scaled weight total."""
    if src == dst:
        if total.q > 0 or (total.q == 0 and total.eps == 0):
            return None
        return FALSE
    (ts, ss), (td, sd) = src, dst
    w = Fraction(total.q, scale)
    strict = total.eps < 0
    if ts == td:                      # opposite signs of one variable
        if integer:
            k = Fraction(floor(w / 2))
        else:
            k = w / 2
        lin = lin_make({td: Fraction(sd)}, k)
    else:
        lin = lin_make({td: Fraction(sd), ts: Fraction(-ss)}, w)
    op = LT if strict and not integer else LE
    return FLit(ctx.mk_la_atom(op, lin))


def _runs_linear(edges: list[Edge], sides: list[str], want: str) -> list[list[int]]:
    runs, cur = [], []
    for i, s in enumerate(sides):
        if s == want:
            cur.append(i)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return runs


def _conjoin_runs(ctx: Context, edges: list[Edge], runs: list[list[int]],
                  scale: int, integer: bool, split_at=None) -> Formula:
    conjuncts = []
    for run in runs:
        pieces = [run]
        if split_at is not None:
            pieces = _split_run(edges, run, split_at)
        for piece in pieces:
            total = DZERO
            for i in piece:
                total = total + edges[i].weight
            f = _summary_formula(ctx, edges[piece[0]].src, edges[piece[-1]].dst,
                                 total, scale, integer)
            if f is None:
                continue
            if f == FALSE:
                return FALSE
            if f not in conjuncts:       # dual halves repeat their summaries
                conjuncts.append(f)
    return fand(*conjuncts)


def _split_run(edges: list[Edge], run: list[int], vertices) -> list[list[int]]:
    """Split a run at interior occurrences of the given signed vertices."""
    pieces: list[list[int]] = []
    cur: list[int] = []
    for i in run:
        cur.append(i)
        if i != run[-1] and edges[i].dst in vertices:
            pieces.append(cur)
            cur = []
    if cur:
        pieces.append(cur)
    return pieces


def interpolate_signed_cycle(ctx: Context, part: Partition, cycle: list[Edge],
                             cut: int, scale: int, integer: bool,
                             split_at=None) -> Formula:
    sides = [_edge_side(part, e, cut) for e in cycle]
    if all(s == "A" for s in sides):
        return FALSE
    if all(s == "B" for s in sides):
        return TRUE
    n = len(cycle)
    start = next(i for i in range(n) if sides[i] == "B")
    order = [(start + k) % n for k in range(1, n + 1)]
    rot_edges = [cycle[i] for i in order]
    rot_sides = [sides[i] for i in order]
    runs = _runs_linear(rot_edges, rot_sides, "A")
    return _conjoin_runs(ctx, rot_edges, runs, scale, integer, split_at)


def interpolate_q(ctx: Context, part: Partition, cycle: list[Edge], cut: int,
                  scale: int = 1) -> Formula:
    return interpolate_signed_cycle(ctx, part, cycle, cut, scale, integer=False)


def classify_case(ctx: Context, part: Partition, w: ZWitness, cut: int) -> int:
    x_in_a = part.var_in_a(w.var, cut)
    x_in_b = part.var_in_b(w.var, cut)
    if not x_in_a:
        return 1
    p1_a = all(_edge_side(part, e, cut) == "A" for e in w.path_np)
    p2_a = all(_edge_side(part, e, cut) == "A" for e in w.path_pn)
    if p1_a or p2_a:
        return 3
    return 2 if x_in_b else 4


def interpolate_z(ctx: Context, part: Partition, w: ZWitness, cut: int) -> Formula:
    """UTVPI(Z) interpolant from an odd-path witness, by case analysis."""
    case = classify_case(ctx, part, w, cut)
    cycle = w.cycle()
    sides = [_edge_side(part, e, cut) for e in cycle]
    if all(s == "A" for s in sides):
        return FALSE
    if all(s == "B" for s in sides):
        return TRUE
    if case == 1:
        return interpolate_signed_cycle(ctx, part, cycle, cut, 1, True)
    if case == 2:
        split = {(w.var, 1), (w.var, -1)}
        return interpolate_signed_cycle(ctx, part, cycle, cut, 1, True,
                                        split_at=split)
    p1_a = all(_edge_side(part, e, cut) == "A" for e in w.path_np)
    if case == 3:
        path, other = (w.path_np, w.path_pn) if p1_a else (w.path_pn, w.path_np)
        wgt = sum(int(e.weight.q) for e in path)
        tight = Edge(path[0].src, path[-1].dst, dq(wgt - 1), 0, side="A")
        return interpolate_signed_cycle(ctx, part, [tight] + other, cut, 1, True)
    # case 4: conditional tightening on the x- ~> x+ path
    path, other = w.path_np, w.path_pn
    psides = [_edge_side(part, e, cut) for e in path]
    b_runs = _runs_linear(path, psides, "B")
    premise = _conjoin_runs(ctx, path, b_runs, 1, True)
    wgt = sum(int(e.weight.q) for e in path)
    tight = Edge(path[0].src, path[-1].dst, dq(wgt - 1), 0, side="A")
    body = interpolate_signed_cycle(ctx, part, [tight] + other, cut, 1, True)
    return fimp(premise, body)
