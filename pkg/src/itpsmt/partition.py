"""Partition bookkeeping for interpolation problems.

Assertions are labeled with a group index 1..n (the pair case is n = 2 with
A = group 1 and B = group 2).  For a cut i the A side is groups <= i and the
B side is groups > i.  Two occurrence relations are tracked: syntactic atom
occurrence (drives clause projection and pivot classification) and
uninterpreted-symbol occurrence (drives the shared-symbol condition and the
AB-mixed test).
"""

from __future__ import annotations

from .terms import Context, Formula

Clause = tuple[int, ...]

A_GROUP = 1
B_GROUP = 2


def mk_clause(lits) -> Clause:
    out = sorted(set(lits), key=lambda l: (abs(l), l < 0))
    return tuple(out)


def clause_is_tautology(clause: Clause) -> bool:
    seen = set(clause)
    return any(-l in seen for l in clause)


class Partition:
    def __init__(self, ctx: Context, n_groups: int = 2) -> None:
        self.ctx = ctx
        self.n = n_groups
        self.atom_groups: dict[int, set[int]] = {}
        self.sym_groups: dict[object, set[int]] = {}

    # -- registration -------------------------------------------------------

    def add_atom(self, aid: int, group: int) -> None:
        if not 1 <= group <= self.n:
            raise ValueError(f"group {group} out of range")
        self.atom_groups.setdefault(aid, set()).add(group)
        for sym in sorted(self.ctx.atom_symbols(aid)):
            self.sym_groups.setdefault(sym, set()).add(group)

    def add_formula(self, f: Formula, group: int) -> None:
        for aid in self.ctx.formula_atoms(f):
            self.add_atom(aid, group)

    def assign_side(self, aid: int, group: int) -> None:
        """Adopt an atom occurring in no assertion into one side.

        Sound for atoms whose symbols all occur in that side (the atom could
        have been conjoined as a tautology there); rejected otherwise.
        """
        if aid in self.atom_groups:
            raise ValueError(f"atom {aid} already occurs in {self.atom_groups[aid]}")
        syms = self.ctx.atom_symbols(aid)
        if not all(group in self.sym_groups.get(s, set()) for s in syms):
            raise ValueError(f"atom {aid} has symbols outside group {group}")
        self.atom_groups.setdefault(aid, set()).add(group)

    # -- occurrence queries ---------------------------------------------------

    def atom_in_a(self, aid: int, cut: int = 1) -> bool:
        return any(g <= cut for g in self.atom_groups.get(aid, ()))

    def atom_in_b(self, aid: int, cut: int = 1) -> bool:
        return any(g > cut for g in self.atom_groups.get(aid, ()))

    def sym_in_a(self, sym, cut: int = 1) -> bool:
        return any(g <= cut for g in self.sym_groups.get(sym, ()))

    def sym_in_b(self, sym, cut: int = 1) -> bool:
        return any(g > cut for g in self.sym_groups.get(sym, ()))

    def var_in_a(self, tid: int, cut: int = 1) -> bool:
        return self.sym_in_a(("v", tid), cut)

    def var_in_b(self, tid: int, cut: int = 1) -> bool:
        return self.sym_in_b(("v", tid), cut)

    def term_preceq_a(self, tid: int, cut: int = 1) -> bool:
        return all(self.sym_in_a(s, cut) for s in self.ctx.term_symbols(tid))

    def term_preceq_b(self, tid: int, cut: int = 1) -> bool:
        return all(self.sym_in_b(s, cut) for s in self.ctx.term_symbols(tid))

    def atom_preceq_a(self, aid: int, cut: int = 1) -> bool:
        return all(self.sym_in_a(s, cut) for s in self.ctx.atom_symbols(aid))

    def atom_preceq_b(self, aid: int, cut: int = 1) -> bool:
        return all(self.sym_in_b(s, cut) for s in self.ctx.atom_symbols(aid))

    def common_symbols(self, cut: int = 1) -> set:
        return {s for s, gs in self.sym_groups.items()
                if any(g <= cut for g in gs) and any(g > cut for g in gs)}

    def a_local_vars(self, cut: int = 1) -> set[int]:
        out = set()
        for sym, gs in self.sym_groups.items():
            if sym[0] == "v" and all(g <= cut for g in gs):
                out.add(sym[1])
        return out

    def is_ab_mixed_eq(self, aid: int, cut: int = 1) -> bool:
        """An equality (a=b) with a not <= B and b not <= A (or vice versa)."""
        pair = self.ctx.euf_view(aid)
        if pair is None:
            return False
        t1, t2 = pair
        fwd = not self.term_preceq_b(t1, cut) and not self.term_preceq_a(t2, cut)
        bwd = not self.term_preceq_a(t1, cut) and not self.term_preceq_b(t2, cut)
        return fwd or bwd

    # -- projection -------------------------------------------------------

    def project_down_b(self, clause: Clause, cut: int = 1) -> Clause:
        return tuple(l for l in clause if self.atom_in_b(abs(l), cut))

    def project_minus_b(self, clause: Clause, cut: int = 1) -> Clause:
        return tuple(l for l in clause if not self.atom_in_b(abs(l), cut))
