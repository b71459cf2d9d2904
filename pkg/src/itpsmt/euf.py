"""Congruence closure for ground equality logic, with explanations.

The solver keeps a union-find over the term universe and a proof forest
whose edges are labeled by the asserting literal or by a congruence step
(per-argument pairs).  Explanations replay a forest path; congruence labels
recurse into argument paths, which always consist of strictly older edges.

Lemma interpolation decomposes the explanation path between the two ends of
the violated disequality into maximal same-side colored segments.  Segment
boundaries are shared terms; congruence edges whose two parent terms live on
opposite sides are split at a shared midpoint term, and edges derivable on
one side only from facts of the other side turn those facts into premises
of an implication.  Structures too entangled for one premise level are
handled by case-splitting on a shared equality, which always terminates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .partition import Partition
from .proofs import side_for_cut
from .terms import (App, Context, EqAtom, FLit, Formula, LaAtom, EQ, NE,
                    FALSE, TRUE, fand, fimp, fnot, for_)


class EufError(Exception):
    pass


Reason = tuple  # ("lit", lit) | ("cong", fname, ((a1, b1), ...))


@dataclass
class EufConflict:
    lits: list[int]
    lhs: int
    rhs: int
    diseq_lit: int


class EufSolver:
    """Proof-producing congruence closure over interned terms."""

    def __init__(self, ctx: Context) -> None:
        self.ctx = ctx
        self.terms: list[int] = []
        self._known: set[int] = set()
        self.repr_: dict[int, int] = {}
        self.size: dict[int, int] = {}
        self.forest: dict[int, tuple[int, Reason]] = {}
        self.diseqs: list[tuple[int, int, int]] = []
        self.asserted: list[int] = []
        self._marks: list[int] = []

    # -- universe -----------------------------------------------------------

    def add_term(self, tid: int) -> None:
        if tid in self._known:
            return
        node = self.ctx.term(tid)
        if isinstance(node, App):
            for a in node.args:
                self.add_term(a)
        self._known.add(tid)
        self.terms.append(tid)
        self.repr_[tid] = tid
        self.size[tid] = 1

    def find(self, t: int) -> int:
        while self.repr_[t] != t:
            t = self.repr_[t]
        return t

    # -- assertion ------------------------------------------------------------

    def owns_atom(self, aid: int) -> bool:
        return self.ctx.euf_view(aid) is not None

    def assert_lit(self, lit: int) -> EufConflict | None:
        self.asserted.append(lit)
        return self._apply(lit)

    def _apply(self, lit: int) -> EufConflict | None:
        pair = self.ctx.euf_view(abs(lit))
        if pair is None:
            return None
        t1, t2 = pair
        self.add_term(t1)
        self.add_term(t2)
        a = self.ctx.atom(abs(lit))
        op = EQ if isinstance(a, EqAtom) else a.op
        positive_eq = (op == EQ) == (lit > 0)
        if positive_eq:
            self._merge(t1, t2, ("lit", lit))
        else:
            self.diseqs.append((t1, t2, lit))
        self._close()          # new subterms may complete a congruence
        return self.check(final=False)

    def _reroot(self, t: int) -> None:
        """Reverse the forest path above t, making t its tree's root."""
        chain = []
        cur = t
        while cur in self.forest:
            parent, reason = self.forest[cur]
            chain.append((cur, parent, reason))
            cur = parent
        for cur, parent, reason in reversed(chain):
            del self.forest[cur]
            self.forest[parent] = (cur, reason)

    def _merge(self, t1: int, t2: int, reason: Reason) -> None:
        r1, r2 = self.find(t1), self.find(t2)
        if r1 == r2:
            return
        self._reroot(t1)
        self.forest[t1] = (t2, reason)
        if self.size[r1] < self.size[r2]:
            self.repr_[r1] = r2
            self.size[r2] += self.size[r1]
        else:
            self.repr_[r2] = r1
            self.size[r1] += self.size[r2]

    def _close(self) -> None:
        """Congruence fixpoint by signature table rebuild."""
        while True:
            table: dict[tuple, int] = {}
            pending: tuple[int, int, Reason] | None = None
            for t in self.terms:
                node = self.ctx.term(t)
                if not isinstance(node, App):
                    continue
                key = (node.fname, tuple(self.find(a) for a in node.args))
                other = table.get(key)
                if other is None:
                    table[key] = t
                elif self.find(other) != self.find(t):
                    onode = self.ctx.term(other)
                    pairs = tuple((x, y) for x, y in zip(onode.args, node.args)
                                  if self.find(x) == self.find(y) and x != y)
                    pending = (other, t, ("cong", node.fname, pairs))
                    break
            if pending is None:
                return
            self._merge(pending[0], pending[1], pending[2])

    # -- queries --------------------------------------------------------------

    def entailed(self, t1: int, t2: int) -> bool:
        if t1 not in self._known or t2 not in self._known:
            return t1 == t2
        return self.find(t1) == self.find(t2)

    def check(self, final: bool = True) -> EufConflict | None:
        for t1, t2, lit in self.diseqs:
            if t1 == t2 or (t1 in self._known and self.find(t1) == self.find(t2)):
                lits = [lit]
                for l in self.explain_lits(t1, t2):
                    if l not in lits:
                        lits.append(l)
                return EufConflict(lits, t1, t2, lit)
        return None

    def explain_path(self, t1: int, t2: int) -> list[tuple[int, int, Reason]]:
        """Forest path t1 ~> t2 as ordered (from, to, reason) steps."""
        if t1 == t2:
            return []
        up1: list[tuple[int, int, Reason]] = []
        anc1 = {t1: 0}
        cur = t1
        while cur in self.forest:
            parent, reason = self.forest[cur]
            up1.append((cur, parent, reason))
            cur = parent
            anc1[cur] = len(up1)
        up2: list[tuple[int, int, Reason]] = []
        cur = t2
        while cur not in anc1:
            if cur not in self.forest:
                raise EufError(f"terms {t1},{t2} are not connected")
            parent, reason = self.forest[cur]
            up2.append((cur, parent, reason))
            cur = parent
        lca = cur
        path = up1[:anc1[lca]]
        for frm, to, reason in reversed(up2):
            path.append((to, frm, reason))
        return path

    def explain_lits(self, t1: int, t2: int) -> list[int]:
        out: list[int] = []

        def walk(a: int, b: int) -> None:
            for _u, _v, reason in self.explain_path(a, b):
                if reason[0] == "lit":
                    if reason[1] not in out:
                        out.append(reason[1])
                else:
                    for x, y in reason[2]:
                        walk(x, y)

        walk(t1, t2)
        return out

    def deduce_equalities(self, tids: list[int]) -> list[tuple[int, int, list[int]]]:
        """Entailed equalities among the given terms, with explanations."""
        out = []
        known = [t for t in tids if t in self._known]
        for i, t1 in enumerate(known):
            for t2 in known[i + 1:]:
                if self.find(t1) == self.find(t2):
                    out.append((t1, t2, self.explain_lits(t1, t2)))
        return out

    # -- checkpoints -----------------------------------------------------------

    def push(self) -> None:
        self._marks.append(len(self.asserted))

    def pop(self) -> None:
        mark = self._marks.pop()
        lits = self.asserted[:mark]
        self.terms.clear()
        self._known.clear()
        self.repr_.clear()
        self.size.clear()
        self.forest.clear()
        self.diseqs.clear()
        self.asserted = []
        for lit in lits:
            self.asserted.append(lit)
            self._apply(lit)


def verify_lemma(ctx: Context, clause) -> bool:
    solver = EufSolver(ctx)
    for l in clause:
        solver.assert_lit(-l)
    return solver.check(final=True) is not None


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

@dataclass
class _Link:
    side: str
    u: int
    v: int
    premises: list[tuple[str, int, int]] = field(default_factory=list)


class _NeedSplit(Exception):
    def __init__(self, u: int, v: int) -> None:
        super().__init__(f"case split on {u} = {v}")
        self.pair = (u, v)


class _EufItp:
    def __init__(self, ctx: Context, part: Partition, cut: int) -> None:
        self.ctx = ctx
        self.part = part
        self.cut = cut

    def term_common(self, t: int) -> bool:
        return (self.part.term_preceq_a(t, self.cut)
                and self.part.term_preceq_b(t, self.cut))

    def run(self, lits: list[int], depth: int = 0) -> Formula:
        if depth > 8:
            raise EufError("interpolation split recursion exceeded its bound")
        solver = EufSolver(self.ctx)
        conflict = None
        for lit in lits:
            conflict = solver.assert_lit(lit) or conflict
        conflict = solver.check() or conflict
        if conflict is None:
            raise EufError("literal set is not EUF-inconsistent")
        try:
            return self.build(solver, conflict)
        except _NeedSplit as split:
            u, v = split.pair
            p = self.ctx.mk_equality(u, v)
            return fand(
                fimp(FLit(p), self.run(lits + [p], depth + 1)),
                fimp(fnot(FLit(p)), self.run(lits + [-p], depth + 1)))

    def build(self, solver: EufSolver, conflict: EufConflict) -> Formula:
        d_side = side_for_cut(self.part, abs(conflict.diseq_lit), self.cut)
        links = self.decompose(solver, solver.explain_path(conflict.lhs, conflict.rhs))
        segs = _merge_links(links)
        s_a = [(l.u, l.v) for l in segs if l.side == "A" and l.u != l.v]
        s_b = [(l.u, l.v) for l in segs if l.side == "B" and l.u != l.v]
        prem_p = []      # B-facts assumed by A-side derivations
        prem_q = []      # A-facts assumed by B-side derivations
        for l in segs:
            for (ps, pu, pv) in l.premises:
                (prem_p if ps == "B" else prem_q).append((pu, pv))
        if d_side == "B":
            body = fand(*[self.eq(u, v) for u, v in s_a])
            itp = fand(*[self.eq(u, v) for u, v in prem_q],
                       fimp(fand(*[self.eq(u, v) for u, v in prem_p]), body))
        else:
            blocked = [self.eq(u, v) for u, v in prem_p + s_b]
            itp = fand(*[self.eq(u, v) for u, v in prem_q],
                       fnot(fand(*blocked)))
        self._check_symbols(itp)
        return itp

    def eq(self, u: int, v: int) -> Formula:
        if u == v:
            return TRUE
        return FLit(self.ctx.mk_equality(u, v))

    def _check_symbols(self, f: Formula) -> None:
        for aid in self.ctx.formula_atoms(f):
            ok = (self.part.atom_preceq_a(aid, self.cut)
                  and self.part.atom_preceq_b(aid, self.cut))
            if not ok:
                raise EufError("interpolant atom uses non-shared symbols")

    # -- path decomposition ---------------------------------------------------

    def decompose(self, solver: EufSolver,
                  path: list[tuple[int, int, Reason]]) -> list[_Link]:
        links: list[_Link] = []
        for u, v, reason in path:
            links.extend(self.edge_links(solver, u, v, reason))
        return links

    def edge_links(self, solver: EufSolver, u: int, v: int,
                   reason: Reason) -> list[_Link]:
        if reason[0] == "lit":
            side = side_for_cut(self.part, abs(reason[1]), self.cut)
            return [_Link(side, u, v)]
        fname = reason[1]
        unode, vnode = self.ctx.term(u), self.ctx.term(v)
        # argument decompositions, oriented along the traversal u -> v
        arg_segs: dict[tuple[int, int], list[_Link]] = {}
        for x, y in zip(unode.args, vnode.args):
            if x != y:
                arg_segs[(x, y)] = _merge_links(self.decompose(
                    solver, solver.explain_path(x, y)))
        u_a, u_b = self.part.term_preceq_a(u, self.cut), self.part.term_preceq_b(u, self.cut)
        v_a, v_b = self.part.term_preceq_a(v, self.cut), self.part.term_preceq_b(v, self.cut)
        arg_sides = {seg.side for segs in arg_segs.values() for seg in segs}
        for s in _color_prefs(arg_sides, u_a and v_a, u_b and v_b):
            prem = self.collect_premises(arg_segs, s)
            if prem is not None:
                return [_Link(s, u, v, prem)]
        if (u_a and v_b) or (u_b and v_a):
            return self.split_edge(solver, u, v, fname, arg_segs,
                                   "A" if u_a else "B")
        raise EufError(f"cannot color congruence edge {u} = {v}")

    def collect_premises(self, arg_segs, side: str):
        """Cross-side premises for coloring an edge `side`, or None."""
        prem: list[tuple[str, int, int]] = []
        for segs in arg_segs.values():
            for seg in segs:
                if seg.side == side:
                    for p in seg.premises:
                        if p[1] != p[2]:
                            prem.append(p)
                    continue
                if not self.term_common(seg.u) or not self.term_common(seg.v):
                    return None
                if seg.premises:
                    # premise under premise: too nested for one implication
                    raise _NeedSplit(seg.u, seg.v)
                if seg.u != seg.v:
                    prem.append((seg.side, seg.u, seg.v))
        return prem

    def split_edge(self, solver: EufSolver, u: int, v: int, fname: str,
                   arg_segs, u_side: str) -> list[_Link]:
        """Split f(u..) = f(v..) at a shared midpoint f(m..)."""
        unode = self.ctx.term(u)
        vnode = self.ctx.term(v)
        mids = []
        cuts = {}
        for x, y in zip(unode.args, vnode.args):
            if x == y:
                if not self.term_common(x):
                    raise _NeedSplit(u, v)
                mids.append(x)
                continue
            segs = arg_segs[(x, y)]
            m, k = self._cut_point(segs, x, y)
            mids.append(m)
            cuts[(x, y)] = k
        mid = self.ctx.mk_app(fname, tuple(mids))
        if not self.term_common(mid):
            raise EufError("congruence midpoint is not shared")
        prem_u: list[tuple[str, int, int]] = []
        prem_v: list[tuple[str, int, int]] = []
        v_side = "B" if u_side == "A" else "A"
        for key, segs in arg_segs.items():
            k = cuts[key]
            for i, seg in enumerate(segs):
                bucket, want = (prem_u, u_side) if i < k else (prem_v, v_side)
                if seg.side == want:
                    bucket.extend(p for p in seg.premises if p[1] != p[2])
                else:
                    if seg.premises:
                        raise _NeedSplit(seg.u, seg.v)
                    if not self.term_common(seg.u) or not self.term_common(seg.v):
                        raise _NeedSplit(seg.u, seg.v)
                    if seg.u != seg.v:
                        bucket.append((seg.side, seg.u, seg.v))
        return [_Link(u_side, u, mid, prem_u), _Link(v_side, mid, v, prem_v)]

    def _cut_point(self, segs: list[_Link], x: int, y: int) -> tuple[int, int]:
        """Shared term m on the path and the number of segments before it."""
        if self.term_common(y):
            return y, len(segs)
        if self.term_common(x):
            return x, 0
        for i in range(len(segs) - 1):
            b = segs[i].v
            if self.term_common(b):
                return b, i + 1
        raise _NeedSplit(x, y)


def _color_prefs(arg_sides: set[str], a_ok: bool, b_ok: bool) -> list[str]:
    prefs = []
    if arg_sides == {"A"} and a_ok:
        prefs.append("A")
    if arg_sides == {"B"} and b_ok:
        prefs.append("B")
    if a_ok and "A" not in prefs:
        prefs.append("A")
    if b_ok and "B" not in prefs:
        prefs.append("B")
    return prefs


def _merge_links(links: list[_Link]) -> list[_Link]:
    out: list[_Link] = []
    for l in links:
        if out and out[-1].side == l.side:
            prev = out[-1]
            out[-1] = _Link(l.side, prev.u, l.v, prev.premises + l.premises)
        else:
            out.append(_Link(l.side, l.u, l.v, list(l.premises)))
    return out


def lemma_interpolant(ctx: Context, part: Partition, clause, cut: int) -> Formula:
    return _EufItp(ctx, part, cut).run([-l for l in clause])


def conflict_interpolant(ctx: Context, part: Partition, cut: int,
                         lits: list[int]) -> Formula:
    return _EufItp(ctx, part, cut).run(list(lits))


# ---------------------------------------------------------------------------
# equality-interpolating terms
# ---------------------------------------------------------------------------

def equality_interpolating_term(ctx: Context, part: Partition, cut: int,
                                mu_lits: list[int], a_tid: int, b_tid: int) -> int | None:
    """Shared term t with mu entailing a=t and t=b, cut from the explanation."""
    solver = EufSolver(ctx)
    for lit in mu_lits:
        solver.assert_lit(lit)
    solver.add_term(a_tid)
    solver.add_term(b_tid)
    if solver.find(a_tid) != solver.find(b_tid):
        return None

    def common(t: int) -> bool:
        return part.term_preceq_a(t, cut) and part.term_preceq_b(t, cut)

    def find_common(x: int, y: int, depth: int) -> int | None:
        if depth > 16:
            return None
        path = solver.explain_path(x, y)
        nodes = [x] + [v for (_u, v, _r) in path]
        for n in nodes:
            if common(n):
                return n
        for u, v, reason in path:
            if reason[0] != "cong":
                continue
            fname, pairs = reason[1], reason[2]
            unode = ctx.term(u)
            vnode = ctx.term(v)
            mids = []
            ok = True
            for ax, ay in zip(unode.args, vnode.args):
                if ax == ay:
                    if common(ax):
                        mids.append(ax)
                    else:
                        ok = False
                        break
                    continue
                m = find_common(ax, ay, depth + 1)
                if m is None:
                    ok = False
                    break
                mids.append(m)
            if ok:
                cand = ctx.mk_app(fname, tuple(mids))
                if common(cand):
                    return cand
        return None

    return find_common(a_tid, b_tid, 0)
