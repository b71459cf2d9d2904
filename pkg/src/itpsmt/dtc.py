"""Delayed theory combination for EUF plus linear rational arithmetic.

The SAT engine mediates between the two theory solvers by branching on
interface equalities (equalities between variables shared across theory
slices after purification).  The search strategy keeps all interface
reasoning in linear subproofs over theory-lemma leaves; those subproofs are
rewritten to eliminate AB-mixed interface equalities, splitting each
positive occurrence ``a=b`` into ``a=t`` and ``t=b`` through a shared term
``t`` supplied by the owning theory.  After the rewriting, the plain
Boolean-level interpolation runs unchanged on the combined proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import euf as euf_mod
from . import lainterp
from .cnf import cnf_convert
from .hooks import EufHook, LraHook
from .partition import Clause, Partition, mk_clause
from .proofs import INPUT, Proof, ProofError, RES, TLEMMA
from .sat import CdclSolver, SolveResult, SolverConfig
from .terms import (App, Context, EqAtom, FAnd, FIff, FImp, FLit, FNot, FOr,
                    Formula, LaAtom, LinNode, EQ, NE, fand, lin_make, lin_var)


class DtcError(Exception):
    pass


# ---------------------------------------------------------------------------
# purification
# ---------------------------------------------------------------------------

def purify(ctx: Context, part: Partition,
           assertions: list[tuple[Formula, int]]) -> list[tuple[Formula, int]]:
    """Split mixed atoms into theory-pure ones with fresh definition atoms.

    Alien subterms are recursively labeled by fresh variables carrying the
    partition group of the assertion they came from; the definitions are
    conjoined to the purified assertion.
    """
    out: list[tuple[Formula, int]] = []
    cache: dict[int, int] = {}

    def label(tid: int, group: int, defs: list[Formula]) -> int:
        v = cache.get(tid)
        if v is not None:
            return v
        v = ctx.fresh_var("v", ctx.term_sort(tid))
        cache[tid] = v
        eq = ctx.mk_equality(v, tid)
        defs.append(FLit(eq))
        part.add_atom(eq, group)
        return v

    def pure_app(tid: int, group: int, defs: list[Formula]) -> int:
        node = ctx.term(tid)
        args = []
        for a in node.args:
            anode = ctx.term(a)
            if isinstance(anode, App):
                args.append(label(pure_app(a, group, defs), group, defs))
            elif isinstance(anode, LinNode):
                args.append(label(a, group, defs))
            else:
                args.append(a)
        return ctx.mk_app(node.fname, tuple(args))

    def pure_side(tid: int, group: int, defs: list[Formula]) -> int:
        if isinstance(ctx.term(tid), App):
            return pure_app(tid, group, defs)
        return tid

    def pure_atom(aid: int, group: int, defs: list[Formula]) -> int:
        atom = ctx.atom(aid)
        if isinstance(atom, EqAtom):
            return ctx.mk_equality(pure_side(atom.lhs, group, defs),
                                   pure_side(atom.rhs, group, defs))
        if not isinstance(atom, LaAtom):
            return aid
        if not any(isinstance(ctx.term(t), App) for t, _ in atom.lin.coeffs):
            return aid
        if _is_euf_shape(atom):
            (t1, c1), (t2, c2) = atom.lin.coeffs
            lhs = pure_side(t1 if c1 == 1 else t2, group, defs)
            rhs = pure_side(t2 if c1 == 1 else t1, group, defs)
            if atom.op == EQ:
                return ctx.mk_equality(lhs, rhs)
            return ctx.mk_la_atom(NE, lin_var(lhs) - lin_var(rhs))
        acc: dict[int, Fraction] = {}
        for t, c in atom.lin.coeffs:
            if isinstance(ctx.term(t), App):
                t = label(pure_app(t, group, defs), group, defs)
            acc[t] = acc.get(t, Fraction(0)) + c
        return ctx.mk_la_atom(atom.op, lin_make(acc, atom.lin.const))

    def walk(f: Formula, group: int, defs: list[Formula]) -> Formula:
        if isinstance(f, FLit):
            aid = pure_atom(f.atom, group, defs)
            if aid != f.atom:
                part.add_atom(aid, group)
            return FLit(aid, f.pos)
        if isinstance(f, FAnd):
            return FAnd(tuple(walk(a, group, defs) for a in f.args))
        if isinstance(f, FOr):
            return FOr(tuple(walk(a, group, defs) for a in f.args))
        if isinstance(f, FNot):
            return FNot(walk(f.arg, group, defs))
        if isinstance(f, FImp):
            return FImp(walk(f.lhs, group, defs), walk(f.rhs, group, defs))
        if isinstance(f, FIff):
            return FIff(walk(f.lhs, group, defs), walk(f.rhs, group, defs))
        return f

    for formula, group in assertions:
        defs: list[Formula] = []
        pure = walk(formula, group, defs)
        out.append((fand(pure, *defs), group))
    return out


def _is_euf_shape(atom: LaAtom) -> bool:
    if atom.op not in (EQ, NE) or atom.lin.const != 0:
        return False
    if len(atom.lin.coeffs) != 2:
        return False
    return {c for _t, c in atom.lin.coeffs} == {Fraction(1), Fraction(-1)}


# ---------------------------------------------------------------------------
# interface catalog
# ---------------------------------------------------------------------------

@dataclass
class InterfaceCatalog:
    variables: list[int] = field(default_factory=list)
    eq_atoms: list[tuple[int, int, int]] = field(default_factory=list)

    def atom_ids(self) -> frozenset:
        return frozenset(a for a, _1, _2 in self.eq_atoms)


def atom_theory(ctx: Context, aid: int) -> str:
    """Owning theory of a pure atom: "euf", "lra" or "bool"."""
    atom = ctx.atom(aid)
    if isinstance(atom, EqAtom):
        return "euf"
    if isinstance(atom, LaAtom):
        if any(isinstance(ctx.term(t), App) for t, _ in atom.lin.coeffs):
            return "euf"
        return "lra"
    return "bool"


def build_catalog(ctx: Context, part: Partition,
                  clauses: list[Clause]) -> InterfaceCatalog:
    """Interface variables and equality atoms for the given clause set."""
    per_theory: dict[str, set[int]] = {"euf": set(), "lra": set()}
    atoms = sorted({abs(l) for cl in clauses for l in cl})
    for aid in atoms:
        th = atom_theory(ctx, aid)
        if th == "bool":
            continue
        for sym in sorted(ctx.atom_symbols(aid)):
            if sym[0] == "v":
                per_theory[th].add(sym[1])
    shared = sorted(per_theory["euf"] & per_theory["lra"])
    cat = InterfaceCatalog(variables=shared)
    for i, t1 in enumerate(shared):
        for t2 in shared[i + 1:]:
            aid = ctx.mk_eq_atom(t1, t2)
            cat.eq_atoms.append((aid, t1, t2))
    return cat


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

def run_dtc(ctx: Context, part: Partition,
            assertions: list[tuple[Formula, int]],
            config: SolverConfig | None = None,
            proof: Proof | None = None):
    """Solve a purified EUF+LRA problem with the combination strategy.

    Returns (result, catalog, solver); on unsat the result's proof has the
    interface reasoning confined to linear theory-lemma subproofs.
    """
    clauses: list[tuple[Clause, int]] = []
    for formula, group in assertions:
        for cl in cnf_convert(ctx, part, formula, group):
            clauses.append((cl, group))
    cat = build_catalog(ctx, part, [cl for cl, _g in clauses])
    lra_hook = LraHook(ctx, owns=lambda aid: atom_theory(ctx, aid) != "bool",
                       ie_pairs=cat.eq_atoms)
    euf_hook = EufHook(ctx, ie_pairs=cat.eq_atoms)
    base = config or SolverConfig()
    cfg = SolverConfig(dtc=True, ie_atoms=cat.atom_ids(),
                       early_pruning=base.early_pruning,
                       restart_interval=base.restart_interval,
                       budget=base.budget)
    solver = CdclSolver(ctx, clauses, [lra_hook, euf_hook], proof or Proof(), cfg)
    result = solver.solve()
    return result, cat, solver


# ---------------------------------------------------------------------------
# ie subproofs: discovery, audit, linearization
# ---------------------------------------------------------------------------

def _clause_has_ie(clause: Clause, ie_atoms) -> bool:
    return any(abs(l) in ie_atoms for l in clause)


def find_ie_chains(proof: Proof, ie_atoms) -> list[list[int]]:
    """Maximal negative-premise chains of interface-equality resolutions.

    Each chain is returned deepest-first (the root of the subproof last).
    """
    reach = proof.reachable()
    ie_res = {nid for nid in reach
              if proof.nodes[nid].kind == RES and proof.nodes[nid].pivot in ie_atoms}
    below = {proof.nodes[nid].neg for nid in ie_res}
    chains = []
    for top in sorted(ie_res):
        if top in below:
            continue
        chain = []
        cur = top
        while cur in ie_res:
            chain.append(cur)
            cur = proof.nodes[cur].neg
        chain.reverse()
        chains.append(chain)
    return chains


def audit_ie_local(proof: Proof, ie_atoms) -> list[str]:
    """Check interface locality; return violation messages (empty = pass)."""
    issues: list[str] = []
    chains = find_ie_chains(proof, ie_atoms)
    in_chain: set[int] = set()
    leaves: set[int] = set()
    for chain in chains:
        in_chain |= set(chain)
        root = proof.nodes[chain[-1]]
        if _clause_has_ie(root.clause, ie_atoms):
            issues.append(f"node {chain[-1]}: subproof root keeps an interface equality")
        base = proof.nodes[chain[0]].neg
        leaves.add(base)
        bnode = proof.nodes[base]
        if bnode.kind != TLEMMA:
            issues.append(f"node {base}: leftmost subproof leaf is not a theory lemma")
        elif any(l > 0 and l in ie_atoms for l in bnode.clause):
            issues.append(f"node {base}: leftmost leaf has a positive equality")
        for nid in chain:
            pos = proof.nodes[nid].pos
            leaves.add(pos)
            pnode = proof.nodes[pos]
            if pnode.kind != TLEMMA:
                issues.append(f"node {pos}: right premise is not a leaf theory lemma")
                continue
            npos = sum(1 for l in pnode.clause if l > 0 and l in ie_atoms)
            if npos != 1:
                issues.append(f"node {pos}: right premise has {npos} positive equalities")
    for nid in proof.reachable():
        if nid in in_chain or nid in leaves:
            continue
        n = proof.nodes[nid]
        if _clause_has_ie(n.clause, ie_atoms):
            issues.append(f"node {nid}: interface equality outside a subproof")
        if n.kind == RES and n.pivot in ie_atoms:
            issues.append(f"node {nid}: interface pivot outside a subproof")
    return issues


def linearize_ie_subproofs(proof: Proof, ie_atoms) -> Proof:
    """Rebuild the proof so interface reasoning forms conforming subproofs.

    Chains that already conform copy through unchanged (node-for-node);
    interleaved chains are re-linearized by moving the non-equality
    resolution steps below the equality ones.
    """
    out = Proof()
    memo: dict[int, int] = {}

    def conforming(nid: int) -> bool:
        steps = []
        cur = nid
        while proof.nodes[cur].kind == RES:
            n = proof.nodes[cur]
            steps.append((n.pivot, n.pos))
            cur = n.neg
        steps.reverse()
        has_ie = any(p in ie_atoms for p, _r in steps)
        if not has_ie:
            return True
        seen_other = False
        for pivot, pos in steps:
            if pivot in ie_atoms:
                if seen_other or proof.nodes[pos].kind != TLEMMA:
                    return False
            else:
                seen_other = True
        return proof.nodes[cur].kind == TLEMMA

    def chain_parts(nid: int):
        steps = []
        cur = nid
        while proof.nodes[cur].kind == RES:
            n = proof.nodes[cur]
            steps.append((n.pivot, n.pos))
            cur = n.neg
        steps.reverse()
        return cur, steps

    def copy(nid: int) -> int:
        if nid in memo:
            return memo[nid]
        n = proof.nodes[nid]
        if n.kind == INPUT:
            new = out.add_input(n.clause, n.group)
        elif n.kind == TLEMMA:
            new = out.add_tlemma(n.clause, n.theory)
        elif conforming(nid):
            new = out.add_res(n.pivot, copy(n.pos), copy(n.neg))
        else:
            base, steps = chain_parts(nid)
            new = _relinearize(out, proof, base, steps, ie_atoms, copy, n.clause)
        memo[nid] = new
        return new

    out.set_root(copy(proof.root))
    return out


def _relinearize(out: Proof, proof: Proof, base: int,
                 steps: list[tuple[int, int]], ie_atoms, copy,
                 want: Clause) -> int:
    """Reassemble one chain with the equality resolutions done first."""
    candidates = [base] + [r for _p, r in steps]
    start = None
    for c in candidates:
        cl = proof.nodes[c].clause
        if (proof.nodes[c].kind == TLEMMA
                and _clause_has_ie(cl, ie_atoms)
                and not any(l > 0 and l in ie_atoms for l in cl)):
            start = c
            break
    if start is None:
        raise ProofError("no equality-free starting lemma for an ie chain")
    unused = [c for c in candidates if c != start]
    node = copy(start)
    acc = set(out.clause(node))
    while unused:
        step = None
        neg_ies = [l for l in sorted(acc) if l < 0 and -l in ie_atoms]
        for l in neg_ies:
            cand = next((c for c in unused if -l in proof.nodes[c].clause), None)
            if cand is not None:
                step = (-l, cand, "pos")
                break
        if step is None:
            for c in unused:
                lit = next((l for l in proof.nodes[c].clause if -l in acc), None)
                if lit is not None:
                    step = (abs(lit), c, "pos" if lit > 0 else "neg")
                    break
        if step is None:
            break        # remaining reasons were absorbed by earlier steps
        pivot, cand, role = step
        cnode = copy(cand)
        if role == "pos":
            node = out.add_res(pivot, pos=cnode, neg=node)
        else:
            node = out.add_res(pivot, pos=node, neg=cnode)
        acc = set(out.clause(node))
        unused.remove(cand)
    if set(out.clause(node)) != set(want):
        raise ProofError("relinearized chain does not reproduce its root")
    return node


# ---------------------------------------------------------------------------
# eliminating AB-mixed equalities from ie subproofs
# ---------------------------------------------------------------------------

@dataclass
class SplitMap:
    """Substitution of split equalities: atom(a=b) -> (t, atom(a=t), atom(t=b))."""

    entries: dict[int, tuple[int, int, int]] = field(default_factory=dict)


def term_provider(ctx: Context, part: Partition, cut: int):
    """Equality-interpolating term extraction, dispatched per lemma theory."""

    def provide(theory: str, mu_lits: list[int], a: int, b: int) -> int:
        if theory.startswith("euf"):
            t = euf_mod.equality_interpolating_term(ctx, part, cut, mu_lits, a, b)
            if t is None:
                t = lainterp.equality_interpolating_term(ctx, part, cut, mu_lits, a, b)
        else:
            t = lainterp.equality_interpolating_term(ctx, part, cut, mu_lits, a, b)
            if t is None:
                t = euf_mod.equality_interpolating_term(ctx, part, cut, mu_lits, a, b)
        if t is None:
            raise DtcError("no shared term splits the mixed equality")
        return t

    return provide


def _oriented_pair(ctx: Context, part: Partition, cut: int, aid: int) -> tuple[int, int]:
    """Equality endpoints ordered as (A-local, B-local)."""
    t1, t2 = ctx.euf_view(aid)
    if not part.term_preceq_b(t1, cut) and not part.term_preceq_a(t2, cut):
        return t1, t2
    return t2, t1


def split_ab_mixed(ctx: Context, part: Partition, proof: Proof, cut: int,
                   ie_atoms, provide=None) -> tuple[Proof, SplitMap]:
    """Rewrite every ie subproof so no AB-mixed equality remains.

    Each subproof is processed from the root's right premise downwards;
    every AB-mixed positive equality is split through a shared term into two
    lemmas and its resolution step becomes two steps.  Negative occurrences
    follow the accumulated substitution.  Roots are unchanged and the proof
    grows by exactly two nodes per split.
    """
    chains = [c for c in find_ie_chains(proof, ie_atoms)
              if any(part.is_ab_mixed_eq(proof.nodes[n].pivot, cut) for n in c)]
    sigma = SplitMap()
    if not chains:
        return proof, sigma
    provide = provide or term_provider(ctx, part, cut)
    out = Proof()
    rebuilt: dict[int, int] = {}
    memo: dict[int, int] = {}

    def subst_clause(clause: Clause) -> Clause:
        lits: list[int] = []
        for l in clause:
            if l < 0 and -l in sigma.entries:
                _t, a_at, t_b = sigma.entries[-l]
                lits.extend([-a_at, -t_b])
            else:
                lits.append(l)
        return mk_clause(lits)

    for chain in chains:
        base_id = proof.nodes[chain[0]].neg
        if proof.nodes[base_id].kind != TLEMMA:
            raise DtcError("ie subproof leaf is not a theory lemma; linearize first")
        items = [(proof.nodes[nid].pivot, proof.nodes[nid].pos) for nid in chain]
        new_steps: list[tuple[int, int]] = []
        for pivot, pos in reversed(items):      # from the root downwards
            lemma = proof.nodes[pos]
            cl = subst_clause(lemma.clause)
            if part.is_ab_mixed_eq(pivot, cut):
                a, b = _oriented_pair(ctx, part, cut, pivot)
                mu = [-l for l in cl if l != pivot]
                t = provide(lemma.theory, mu, a, b)
                at_a = ctx.mk_equality(a, t)
                at_b = ctx.mk_equality(t, b)
                ca = mk_clause([at_a] + [l for l in cl if l != pivot])
                cb = mk_clause([at_b] + [l for l in cl if l != pivot])
                sigma.entries[pivot] = (t, at_a, at_b)
                new_steps = [(at_a, out.add_tlemma(ca, lemma.theory)),
                             (at_b, out.add_tlemma(cb, lemma.theory))] + new_steps
            else:
                new_steps = [(pivot, out.add_tlemma(cl, lemma.theory))] + new_steps
        bnode = proof.nodes[base_id]
        node = out.add_tlemma(subst_clause(bnode.clause), bnode.theory)
        for pivot, lemma_node in new_steps:
            node = out.add_res(pivot, pos=lemma_node, neg=node)
        if out.clause(node) != proof.nodes[chain[-1]].clause:
            raise DtcError("splitting changed an ie subproof root")
        rebuilt[chain[-1]] = node

    def copy(nid: int) -> int:
        if nid in memo:
            return memo[nid]
        if nid in rebuilt:
            memo[nid] = rebuilt[nid]
            return rebuilt[nid]
        n = proof.nodes[nid]
        if n.kind == INPUT:
            new = out.add_input(n.clause, n.group)
        elif n.kind == TLEMMA:
            new = out.add_tlemma(n.clause, n.theory)
        else:
            new = out.add_res(n.pivot, copy(n.pos), copy(n.neg))
        memo[nid] = new
        return new

    out.set_root(copy(proof.root))
    return out, sigma


# ---------------------------------------------------------------------------
# combined interpolation
# ---------------------------------------------------------------------------

def combined_lemma_itp(ctx: Context, part: Partition, stronger: bool = False):
    def itp(clause: Clause, theory: str, cut: int):
        if theory.startswith("euf"):
            return euf_mod.lemma_interpolant(ctx, part, clause, cut)
        return lainterp.lemma_interpolant(ctx, part, clause, cut,
                                          stronger=stronger)
    return itp


def interpolate_combined(ctx: Context, part: Partition, proof: Proof,
                         ie_atoms, stronger: bool = False) -> list[Formula]:
    """One interpolant per cut from one base proof, splitting per cut."""
    from .proofs import Interpolator
    out = []
    lemma_itp = combined_lemma_itp(ctx, part, stronger)
    for cut in range(1, part.n):
        per_cut, _sigma = split_ab_mixed(ctx, part, proof, cut, ie_atoms)
        out.append(Interpolator(per_cut, part, lemma_itp).run(cut))
    return out
