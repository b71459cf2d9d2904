"""Resolution proofs: construction, checking, and interpolation.

A proof is an append-only arena of nodes: input-clause leaves labeled with
their partition group, theory-lemma leaves labeled with the owning theory,
and binary resolution nodes.  Premise ids always precede the node id, so the
DAG is acyclic by construction and a single forward pass visits nodes in
topological order.

Interpolation walks a checked refutation once per cut, combining leaf
interpolants with "or" when the pivot does not occur on the B side and "and"
otherwise; theory-lemma leaves delegate to a pluggable per-theory
interpolator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import sexpr
from .partition import Clause, Partition, mk_clause
from .terms import FLit, Formula, TRUE, fand, for_

INPUT = "input"
TLEMMA = "tlemma"
RES = "res"


class ProofError(Exception):
    def __init__(self, msg: str, node: int = -1) -> None:
        super().__init__(msg if node < 0 else f"node {node}: {msg}")
        self.node = node


@dataclass
class Node:
    kind: str
    clause: Clause
    group: int = 0
    theory: str = ""
    pivot: int = 0
    pos: int = -1
    neg: int = -1


class Proof:
    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self.root: int | None = None
        self._leaf_ids: dict[tuple, int] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def clause(self, nid: int) -> Clause:
        return self.nodes[nid].clause

    def add_input(self, clause: Clause, group: int) -> int:
        key = (INPUT, tuple(clause), group)
        nid = self._leaf_ids.get(key)
        if nid is None:
            nid = len(self.nodes)
            self.nodes.append(Node(INPUT, mk_clause(clause), group=group))
            self._leaf_ids[key] = nid
        return nid

    def add_tlemma(self, clause: Clause, theory: str) -> int:
        key = (TLEMMA, tuple(clause), theory)
        nid = self._leaf_ids.get(key)
        if nid is None:
            nid = len(self.nodes)
            self.nodes.append(Node(TLEMMA, mk_clause(clause), theory=theory))
            self._leaf_ids[key] = nid
        return nid

    def add_res(self, pivot: int, pos: int, neg: int) -> int:
        cp, cn = self.nodes[pos].clause, self.nodes[neg].clause
        if pivot not in cp:
            raise ProofError(f"pivot {pivot} missing from positive premise", pos)
        if -pivot not in cn:
            raise ProofError(f"pivot -{pivot} missing from negative premise", neg)
        resolvent = mk_clause([l for l in cp if l != pivot]
                              + [l for l in cn if l != -pivot])
        nid = len(self.nodes)
        self.nodes.append(Node(RES, resolvent, pivot=pivot, pos=pos, neg=neg))
        return nid

    def set_root(self, nid: int) -> None:
        self.root = nid

    def reachable(self, nid: int | None = None) -> list[int]:
        """Node ids reachable from the root (ascending order)."""
        if nid is None:
            nid = self.root
        if nid is None:
            raise ProofError("proof has no root")
        seen = {nid}
        stack = [nid]
        while stack:
            n = self.nodes[stack.pop()]
            if n.kind == RES:
                for p in (n.pos, n.neg):
                    if p not in seen:
                        seen.add(p)
                        stack.append(p)
        return sorted(seen)


def check_proof(proof: Proof, *, refutation: bool = True,
                tlemma_verifier=None) -> None:
    """Verify structural invariants; raise ProofError at the first violation.

    With `tlemma_verifier`, each theory-lemma leaf is re-verified by the
    owning solver (the verifier gets (clause, theory) and must return True
    when the negated clause is theory-inconsistent).
    """
    for nid, n in enumerate(proof.nodes):
        if n.kind == RES:
            if not (0 <= n.pos < nid and 0 <= n.neg < nid):
                raise ProofError("premise does not precede node", nid)
            cp, cn = proof.nodes[n.pos].clause, proof.nodes[n.neg].clause
            if n.pivot not in cp:
                raise ProofError(f"pivot {n.pivot} not in positive premise", nid)
            if -n.pivot not in cn:
                raise ProofError(f"pivot {-n.pivot} not in negative premise", nid)
            want = mk_clause([l for l in cp if l != n.pivot]
                             + [l for l in cn if l != -n.pivot])
            if n.clause != want:
                raise ProofError("resolvent clause mismatch", nid)
        elif n.kind == TLEMMA:
            if tlemma_verifier is not None and not tlemma_verifier(n.clause, n.theory):
                raise ProofError(f"{n.theory}-lemma failed re-verification", nid)
        elif n.kind != INPUT:
            raise ProofError(f"unknown node kind {n.kind}", nid)
    if refutation:
        if proof.root is None:
            raise ProofError("refutation has no root")
        if proof.nodes[proof.root].clause != ():
            raise ProofError("root is not the empty clause", proof.root)


def side_for_cut(part: Partition, aid: int, cut: int) -> str:
    """Side of an atom for one cut: occurrence first, then adoption.

    Atoms occurring in no assertion are adopted into the side all their
    symbols belong to, preferring B; explicit `assign_side` records win
    because they add an occurrence.
    """
    if part.atom_in_b(aid, cut):
        return "B"
    if part.atom_in_a(aid, cut):
        return "A"
    if part.atom_preceq_b(aid, cut):
        return "B"
    if part.atom_preceq_a(aid, cut):
        return "A"
    raise ProofError(f"atom {aid} is AB-mixed at cut {cut}; split it first")


class Interpolator:
    """Runs the proof-based interpolation; memoizes per (node, cut)."""

    def __init__(self, proof: Proof, part: Partition, lemma_itp) -> None:
        self.proof = proof
        self.part = part
        self.lemma_itp = lemma_itp
        self.memo: dict[tuple[int, int], Formula] = {}

    def leaf_input(self, n: Node, cut: int) -> Formula:
        if n.group > cut:
            return TRUE
        lits = [FLit(abs(l), l > 0) for l in n.clause
                if side_for_cut(self.part, abs(l), cut) == "B"]
        return for_(*lits)

    def run(self, cut: int) -> Formula:
        proof, part = self.proof, self.part
        for nid in proof.reachable():
            if (nid, cut) in self.memo:
                continue
            n = proof.nodes[nid]
            if n.kind == INPUT:
                itp = self.leaf_input(n, cut)
            elif n.kind == TLEMMA:
                itp = self.lemma_itp(n.clause, n.theory, cut)
            else:
                ip = self.memo[(n.pos, cut)]
                iq = self.memo[(n.neg, cut)]
                if side_for_cut(part, n.pivot, cut) == "B":
                    itp = fand(ip, iq)
                else:
                    itp = for_(ip, iq)
            self.memo[(nid, cut)] = itp
        return self.memo[(proof.root, cut)]


def interpolate(proof: Proof, part: Partition, lemma_itp, cut: int = 1) -> Formula:
    return Interpolator(proof, part, lemma_itp).run(cut)


def sequence_interpolants(proof: Proof, part: Partition, lemma_itp) -> list[Formula]:
    """One interpolant per cut 1..n-1, all from the same proof."""
    itp = Interpolator(proof, part, lemma_itp)
    return [itp.run(cut) for cut in range(1, part.n)]


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def dump(proof: Proof, ctx, part: Partition | None = None) -> str:
    """S-expression dump; the atom table header makes the file standalone."""
    atoms = sorted({abs(l) for n in proof.nodes for l in n.clause}
                   | {n.pivot for n in proof.nodes if n.kind == RES})
    lines = ["(atoms"]
    for aid in atoms:
        lines.append(f"  ({aid} {ctx.atom_str(aid)})")
    lines.append(")")
    for n in proof.nodes:
        cl = " ".join(str(l) for l in n.clause)
        if n.kind == INPUT:
            side = {1: "A", 2: "B"}.get(n.group, str(n.group)) if (part is None or part.n == 2) \
                else str(n.group)
            lines.append(f"(input {side} ({cl}))")
        elif n.kind == TLEMMA:
            lines.append(f"(tlemma {n.theory} ({cl}))")
        else:
            lines.append(f"(res {n.pivot} {n.neg} {n.pos})")
    if proof.root is not None:
        lines.append(f"(root {proof.root})")
    return "\n".join(lines) + "\n"


def load(text: str, atom_parser) -> Proof:
    """Rebuild a proof from `dump` output.

    `atom_parser(sexpr_node) -> atom id` interns the atoms of the table
    header; clause literals are signed references into that table.
    """
    forms = sexpr.parse_all(text)
    amap: dict[int, int] = {}
    proof = Proof()
    for form in forms:
        if not isinstance(form, list) or not form:
            raise sexpr.SexprError(f"bad proof form: {form}")
        head = form[0]
        if head == "atoms":
            for entry in form[1:]:
                amap[int(entry[0])] = atom_parser(entry[1])
        elif head == "input":
            side = {"A": 1, "B": 2}.get(form[1])
            group = side if side is not None else int(form[1])
            clause = _map_clause(form[2], amap)
            proof.add_input(clause, group)
        elif head == "tlemma":
            proof.add_tlemma(_map_clause(form[2], amap), form[1])
        elif head == "res":
            pivot = amap[int(form[1])]
            nid = proof.add_res(pivot, pos=int(form[3]), neg=int(form[2]))
            proof.set_root(nid)
        elif head == "root":
            proof.set_root(int(form[1]))
        else:
            raise sexpr.SexprError(f"unknown proof form {head}")
    return proof


def _map_clause(lits, amap: dict[int, int]) -> Clause:
    out = []
    for tok in lits:
        v = int(tok)
        out.append((1 if v > 0 else -1) * amap[abs(v)])
    return mk_clause(out)
