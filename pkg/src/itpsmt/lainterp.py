"""Interpolants for inconsistent conjunctions of linear-arithmetic literals."""

from __future__ import annotations

from fractions import Fraction

from .delta import Delta
from .linarith import Hyp, LAProof, LaConflict, LaError, LraSolver, Poly
from .partition import Partition
from .proofs import side_for_cut
from .terms import (EQ, LE, LT, NE, Context, FLit, Formula, Linear, FALSE,
                    TRUE, fand, for_)


def zero_b_sides(proof: LAProof, is_b) -> LAProof:
    """Copy of the refutation with every B-side leaf replaced by 0 <= 0."""
    if proof.kind == "hyp":
        if is_b(proof.hyp):
            z = Hyp(proof.hyp.atom, proof.hyp.negated, proof.hyp.eq_dir,
                    Poly((), Delta(Fraction(0))), probe=proof.hyp.probe)
            return LAProof.of_hyp(z)
        return proof
    return LAProof.comb(zero_b_sides(proof.left, is_b),
                        zero_b_sides(proof.right, is_b), proof.c1, proof.c2)


def poly_formula(ctx: Context, poly: Poly) -> Formula:
    """Formula for ``0 <= poly``, resolving the infinitesimal."""
    eps = poly.const.eps
    if eps > 0:
        raise LaError("interpolant carries a positive infinitesimal")
    if poly.is_const():
        if poly.const.is_negative():
            return FALSE
        return TRUE
    lin = Linear(poly.coeffs, poly.const.q)
    op = LT if eps < 0 else LE
    return FLit(ctx.mk_la_atom(op, lin))


def _eliminable(ctx: Context, part: Partition, cut: int, base: int) -> bool:
    syms = ctx.term_symbols(base)
    return not all(part.sym_in_b(s, cut) for s in syms)


def strengthen_pairs(ctx: Context, part: Partition, cut: int,
                     proof: LAProof) -> list[Poly]:
    """Coefficient/inequality pair list of the root, merging only as needed.

    Summations are performed only to cancel bases that are not B-common;
    everything else stays a separate conjunct, which entails (and usually
    strictly strengthens) the single root inequality.
    """

    def is_local(base: int) -> bool:
        return _eliminable(ctx, part, cut, base)

    def pairs_of(p: LAProof) -> list[tuple[Fraction, Poly]]:
        if p.kind == "hyp":
            return [(Fraction(1), p.poly)]
        lst = [(c * p.c1, q) for c, q in pairs_of(p.left)]
        lst += [(c * p.c2, q) for c, q in pairs_of(p.right)]
        while True:
            counts: dict[int, int] = {}
            for _, q in lst:
                for b, _c in q.coeffs:
                    if is_local(b):
                        counts[b] = counts.get(b, 0) + 1
            target = min((b for b, n in counts.items() if n > 1), default=None)
            if target is None:
                return lst
            hit = [(c, q) for c, q in lst if any(b == target for b, _ in q.coeffs)]
            rest = [(c, q) for c, q in lst if not any(b == target for b, _ in q.coeffs)]
            merged = Poly((), Delta(Fraction(0)))
            for c, q in hit:
                merged = merged.combine(q, Fraction(1), c)
            rest.append((Fraction(1), merged))
            lst = rest

    return [q for _c, q in pairs_of(proof)]


def proof_interpolant(ctx: Context, part: Partition, cut: int, proof: LAProof,
                      stronger: bool = False) -> Formula:
    """Interpolant of a refutation: zero the B leaves and read off the root."""

    def is_b(h: Hyp) -> bool:
        return side_for_cut(part, h.atom, cut) == "B"

    zeroed = zero_b_sides(proof, is_b)
    if not stronger:
        return poly_formula(ctx, zeroed.poly)
    polys = strengthen_pairs(ctx, part, cut, zeroed)
    conjuncts = []
    for q in polys:
        for b, _ in q.coeffs:
            if _eliminable(ctx, part, cut, b):
                raise LaError("stronger-interpolant list kept a non-common base")
        if q.is_const() and not q.const.is_negative():
            continue
        conjuncts.append(poly_formula(ctx, q))
    return fand(*conjuncts)


def conflict_interpolant(ctx: Context, part: Partition, cut: int,
                         lits: list[int], stronger: bool = False) -> Formula:
    """Interpolant for an inconsistent set of LA literals (with /=)."""
    solver = LraSolver(ctx)
    plain: list[int] = []
    diseqs: list[tuple[int, Linear]] = []
    for lit in lits:
        op, lin = ctx.lit_lin(lit)
        if op == NE:
            diseqs.append((lit, lin))
        else:
            plain.append(lit)
    for lit in plain:
        conflict = solver.assert_lit(lit)
        if conflict is not None:
            return proof_interpolant(ctx, part, cut, conflict.proof, stronger)
    conflict = solver.check(final=False)
    if conflict is not None:
        return proof_interpolant(ctx, part, cut, conflict.proof, stronger)
    for lit, lin in diseqs:
        pos, neg = solver.split_branches(lit, lin)
        if pos is None or neg is None:
            continue
        ipos = proof_interpolant(ctx, part, cut, pos.proof, stronger)
        ineg = proof_interpolant(ctx, part, cut, neg.proof, stronger)
        if side_for_cut(part, abs(lit), cut) == "A":
            return for_(ipos, ineg)
        return fand(ipos, ineg)
    raise LaError("literal set is not LA-inconsistent")


def lemma_interpolant(ctx: Context, part: Partition, clause, cut: int,
                      stronger: bool = False) -> Formula:
    return conflict_interpolant(ctx, part, cut, [-l for l in clause], stronger)


def verify_lemma(ctx: Context, clause) -> bool:
    """True iff the negated clause is LA-inconsistent."""
    solver = LraSolver(ctx)
    for l in clause:
        if solver.assert_lit(-l) is not None:
            return True
    return solver.check(final=True) is not None


# ---------------------------------------------------------------------------
# equality-interpolating terms
# ---------------------------------------------------------------------------

def equality_interpolating_term(ctx: Context, part: Partition, cut: int,
                                mu_lits: list[int], a_tid: int, b_tid: int) -> int | None:
    """AB-pure term t with mu entailing a=t and t=b, from the equation chain.

    Works by Gaussian elimination over the one-sided equality atoms of the
    explanation: non-common bases other than the endpoint are eliminated and
    the endpoint is solved for.  Matching opposite inequalities are folded
    into equations first.
    """
    eqs_a, eqs_b, ineqs = [], [], []
    for lit in mu_lits:
        op, lin = ctx.lit_lin(lit)
        side = side_for_cut(part, abs(lit), cut)
        if op == EQ:
            (eqs_a if side == "A" else eqs_b).append(lin)
        elif op == LE:
            ineqs.append((side, lin))
    for i, (s1, l1) in enumerate(ineqs):
        for s2, l2 in ineqs[i + 1:]:
            if s1 == s2 and (l1 + l2).is_const() and (l1 + l2).const == 0:
                (eqs_a if s1 == "A" else eqs_b).append(l1)

    def common(base: int) -> bool:
        syms = ctx.term_symbols(base)
        return (all(part.sym_in_a(s, cut) for s in syms)
                and all(part.sym_in_b(s, cut) for s in syms))

    def solve(eqs: list[Linear], target: int) -> Linear | None:
        eqs = list(eqs)
        unknowns = sorted({b for lin in eqs for b in lin.bases()
                           if not common(b) and b != target})
        for u in unknowns:
            pivot = None
            for i, lin in enumerate(eqs):
                c = dict(lin.coeffs).get(u)
                if c:
                    pivot = (i, lin, c)
                    break
            if pivot is None:
                continue
            i, plin, c = pivot
            eqs.pop(i)
            out = []
            for lin in eqs:
                cu = dict(lin.coeffs).get(u)
                if cu:
                    lin = lin + plin.scale(-cu / c)
                out.append(lin)
            eqs = out
        for lin in eqs:
            ct = dict(lin.coeffs).get(target)
            if not ct:
                continue
            rest = lin + Linear(((target, ct),), Fraction(0)).scale(Fraction(-1))
            t_lin = rest.scale(Fraction(-1) / ct)
            if all(common(b) for b in t_lin.bases()):
                return t_lin
        return None

    t_lin = solve(eqs_a, a_tid)
    if t_lin is None:
        t_lin = solve(eqs_b, b_tid)
    if t_lin is None:
        return None
    return ctx.mk_lin_term(t_lin)
