"""Adapters wiring the theory solvers into the CDCL engine."""

from __future__ import annotations

from .difflogic import DlSolver
from .euf import EufSolver
from .linarith import LraSolver
from .sat import TheoryHook
from .terms import Context, EqAtom, LaAtom
from .utvpi import UtvpiSolver


class LraHook(TheoryHook):
    name = "lra"

    def __init__(self, ctx: Context, owns=None, ie_pairs=None) -> None:
        self.ctx = ctx
        self.solver = LraSolver(ctx)
        self._owns = owns
        self.ie_pairs = ie_pairs or []      # [(atom id, t1, t2)]

    def owns(self, aid: int) -> bool:
        if self._owns is not None:
            return self._owns(aid)
        return isinstance(self.ctx.atom(aid), (LaAtom, EqAtom))

    def assert_lit(self, lit: int):
        conflict = self.solver.assert_lit(lit)
        return conflict.lits if conflict else None

    def check(self, final: bool):
        conflict = self.solver.check(final=final)
        return conflict.lits if conflict else None

    def propagations(self):
        out = []
        for aid, t1, t2 in self.ie_pairs:
            mu = self.solver.entailed_equality(t1, t2)
            if mu:
                out.append((aid, mu))
        return out

    def push(self) -> None:
        self.solver.push()

    def pop(self) -> None:
        self.solver.pop()


class EufHook(TheoryHook):
    name = "euf"

    def __init__(self, ctx: Context, owns=None, ie_pairs=None) -> None:
        self.ctx = ctx
        self.solver = EufSolver(ctx)
        self._owns = owns
        self.ie_pairs = ie_pairs or []

    def owns(self, aid: int) -> bool:
        if self._owns is not None:
            return self._owns(aid)
        return self.solver.owns_atom(aid)

    def assert_lit(self, lit: int):
        conflict = self.solver.assert_lit(lit)
        return conflict.lits if conflict else None

    def check(self, final: bool):
        conflict = self.solver.check(final=final)
        return conflict.lits if conflict else None

    def propagations(self):
        out = []
        for aid, t1, t2 in self.ie_pairs:
            if self.solver.entailed(t1, t2) and t1 != t2:
                mu = self.solver.explain_lits(t1, t2)
                if mu:
                    out.append((aid, mu))
        return out

    def push(self) -> None:
        self.solver.push()

    def pop(self) -> None:
        self.solver.pop()


class DlHook(TheoryHook):
    def __init__(self, ctx: Context, integer: bool, scale: int, name: str) -> None:
        self.ctx = ctx
        self.solver = DlSolver(ctx, integer=integer, scale=scale)
        self.name = name

    def owns(self, aid: int) -> bool:
        return isinstance(self.ctx.atom(aid), LaAtom)

    def assert_lit(self, lit: int):
        self.solver.assert_lit(lit)
        return None

    def check(self, final: bool):
        return self.solver.check(final=final)

    def push(self) -> None:
        self.solver.push()

    def pop(self) -> None:
        self.solver.pop()


class UtvpiHook(TheoryHook):
    def __init__(self, ctx: Context, integer: bool, scale: int, name: str) -> None:
        self.ctx = ctx
        self.solver = UtvpiSolver(ctx, integer=integer, scale=scale)
        self.name = name

    def owns(self, aid: int) -> bool:
        return isinstance(self.ctx.atom(aid), LaAtom)

    def assert_lit(self, lit: int):
        self.solver.assert_lit(lit)
        return None

    def check(self, final: bool):
        return self.solver.check(final=final)

    def push(self) -> None:
        self.solver.push()

    def pop(self) -> None:
        self.solver.pop()
