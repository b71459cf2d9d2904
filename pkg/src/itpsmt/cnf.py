"""CNF conversion (plain Tseitin) and Boolean abstraction."""

from __future__ import annotations

from .partition import Clause, Partition, mk_clause
from .terms import (FAnd, FFalse, FIff, FImp, FLit, FNot, FOr, FTrue, Formula,
                    fand, fiff, fnot, for_, Context)


def nnf(f: Formula, positive: bool = True) -> Formula:
    """Push negations down to literals; Iff nodes are kept for labeling."""
    if isinstance(f, FTrue):
        return f if positive else FFalse()
    if isinstance(f, FFalse):
        return f if positive else FTrue()
    if isinstance(f, FLit):
        return f if positive else FLit(f.atom, not f.pos)
    if isinstance(f, FNot):
        return nnf(f.arg, not positive)
    if isinstance(f, FAnd):
        args = tuple(nnf(a, positive) for a in f.args)
        return fand(*args) if positive else for_(*args)
    if isinstance(f, FOr):
        args = tuple(nnf(a, positive) for a in f.args)
        return for_(*args) if positive else fand(*args)
    if isinstance(f, FImp):
        if positive:
            return for_(nnf(f.lhs, False), nnf(f.rhs, True))
        return fand(nnf(f.lhs, True), nnf(f.rhs, False))
    if isinstance(f, FIff):
        return fiff(nnf(f.lhs, True), nnf(f.rhs, positive))
    raise TypeError(f)


def cnf_convert(ctx: Context, part: Partition, f: Formula, group: int) -> list[Clause]:
    """Equisatisfiable clause set; aux atoms are fresh and recorded in `group`.

    Top-level conjunctions are split and clause-shaped disjunctions are
    emitted directly, so formulas already in CNF gain no aux atoms.
    """
    clauses: list[Clause] = []

    def lab(g: Formula) -> int:
        """Literal equivalent to g, introducing one label per compound node."""
        if isinstance(g, FLit):
            return g.atom if g.pos else -g.atom
        if isinstance(g, FTrue) or isinstance(g, FFalse):
            t = ctx.fresh_bool_atom()
            part.add_atom(t, group)
            clauses.append((t,) if isinstance(g, FTrue) else (-t,))
            return t
        t = ctx.fresh_bool_atom()
        part.add_atom(t, group)
        if isinstance(g, FAnd):
            lits = [lab(a) for a in g.args]
            for l in lits:
                clauses.append(mk_clause([-t, l]))
            clauses.append(mk_clause([t] + [-l for l in lits]))
        elif isinstance(g, FOr):
            lits = [lab(a) for a in g.args]
            for l in lits:
                clauses.append(mk_clause([-l, t]))
            clauses.append(mk_clause([-t] + lits))
        elif isinstance(g, FIff):
            x, y = lab(g.lhs), lab(g.rhs)
            clauses.append(mk_clause([-t, -x, y]))
            clauses.append(mk_clause([-t, x, -y]))
            clauses.append(mk_clause([t, x, y]))
            clauses.append(mk_clause([t, -x, -y]))
        else:
            raise TypeError(g)
        return t

    def top(g: Formula) -> None:
        if isinstance(g, FTrue):
            return
        if isinstance(g, FFalse):
            clauses.append(())
            return
        if isinstance(g, FAnd):
            for a in g.args:
                top(a)
            return
        if isinstance(g, FLit):
            clauses.append((g.atom,) if g.pos else (-g.atom,))
            return
        if isinstance(g, FOr) and all(isinstance(a, FLit) for a in g.args):
            clauses.append(mk_clause(a.atom if a.pos else -a.atom for a in g.args))
            return
        clauses.append((lab(g),))

    top(nnf(f))
    return clauses


class Abstraction:
    """Bijection between interned atoms and dense propositional indices."""

    def __init__(self) -> None:
        self._t2p: dict[int, int] = {}
        self._p2t: list[int] = [0]

    def t2p(self, aid: int) -> int:
        p = self._t2p.get(aid)
        if p is None:
            p = len(self._p2t)
            self._p2t.append(aid)
            self._t2p[aid] = p
        return p

    def p2t(self, p: int) -> int:
        return self._p2t[p]

    def n_props(self) -> int:
        return len(self._p2t) - 1

    def abstract_clause(self, clause: Clause) -> Clause:
        return tuple((1 if l > 0 else -1) * self.t2p(abs(l)) for l in clause)

    def refine_clause(self, clause: Clause) -> Clause:
        return tuple((1 if l > 0 else -1) * self.p2t(abs(l)) for l in clause)

    def abstract(self, f: Formula) -> Formula:
        if isinstance(f, FLit):
            return FLit(self.t2p(f.atom), f.pos)
        if isinstance(f, FAnd):
            return FAnd(tuple(self.abstract(a) for a in f.args))
        if isinstance(f, FOr):
            return FOr(tuple(self.abstract(a) for a in f.args))
        if isinstance(f, FNot):
            return FNot(self.abstract(f.arg))
        if isinstance(f, FImp):
            return FImp(self.abstract(f.lhs), self.abstract(f.rhs))
        if isinstance(f, FIff):
            return FIff(self.abstract(f.lhs), self.abstract(f.rhs))
        return f

    def refine_model(self, model: dict[int, bool]) -> dict[int, bool]:
        return {self.p2t(p): v for p, v in model.items()}
