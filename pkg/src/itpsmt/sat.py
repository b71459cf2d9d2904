"""CDCL engine with theory hooks and resolution-proof logging.

The engine works directly on interned atom ids (the Boolean abstraction is
the identity on ids).  Every conflict analysis records its resolution chain,
so an unsatisfiable run replays into a checkable refutation.

Theory cooperation follows the lazy online loop: literals are pushed to the
owning hooks as they are assigned, intermediate assignments are pruned by
cheap theory checks, full checks run when the assignment is total, and
theory conflicts are learned as theory-lemma clauses.

The two-theory combination strategy never decides an interface equality
while any other atom is unassigned, tries false first, delays
interface-equality propagation until all original atoms have values, and
suspends learned clauses mentioning interface equalities whenever the
search leaves that phase.  All interface-equality resolution steps then sit
in linear subproofs over theory-lemma leaves; `materialize` additionally
inlines learned-clause reasons at interface-equality pivots so the shape
survives in the emitted proof object.
"""

from __future__ import annotations

from dataclasses import dataclass

from .partition import Clause, clause_is_tautology, mk_clause
from .proofs import Proof
from .terms import Context


class BudgetExceeded(Exception):
    pass


class TheoryHook:
    """Interface the engine expects from a theory solver adapter."""

    name = "theory"

    def owns(self, aid: int) -> bool:
        raise NotImplementedError

    def assert_lit(self, lit: int):
        """Return a conflict literal list or None."""
        raise NotImplementedError

    def check(self, final: bool):
        return None

    def propagations(self):
        """Deduced (literal, explanation) pairs; used for interface equalities."""
        return []

    def push(self) -> None:
        raise NotImplementedError

    def pop(self) -> None:
        raise NotImplementedError


@dataclass
class SolverConfig:
    dtc: bool = False
    ie_atoms: frozenset = frozenset()
    early_pruning: bool = True
    restart_interval: int | None = None
    budget: int | None = None


@dataclass
class SolveResult:
    status: str                      # "sat" | "unsat" | "budget"
    model: dict[int, bool] | None = None
    proof: Proof | None = None


@dataclass
class _ClauseInfo:
    lits: Clause
    node: int | None = None          # leaf proof node (input/tlemma)
    base: int | None = None          # learned: index of the conflicting clause
    steps: list | None = None        # learned: [(pivot atom, reason index)]
    theory: str = ""
    learned: bool = False
    active: bool = True

    def has_atom_in(self, atoms) -> bool:
        return any(abs(l) in atoms for l in self.lits)


class CdclSolver:
    def __init__(self, ctx: Context, clauses: list[tuple[Clause, int]],
                 hooks: list, proof: Proof,
                 config: SolverConfig | None = None) -> None:
        self.ctx = ctx
        self.hooks = hooks
        self.proof = proof
        self.config = config or SolverConfig()
        self.clauses: list[_ClauseInfo] = []
        self.watches: dict[int, list[int]] = {}
        self.assign: dict[int, bool] = {}
        self.level: dict[int, int] = {}
        self.reason: dict[int, int | None] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.theory_head = 0
        self.theory_pushes = 0
        self.vars: list[int] = []
        self._var_set: set[int] = set()
        self.ie_atoms = set(self.config.ie_atoms)
        self.ie_phase_level: int | None = None
        self.steps = 0
        self.conflicts_since_restart = 0
        self._tlemma_clause: dict[tuple, int] = {}
        self.trail_log: list[list[tuple[int, int, str]]] = []
        self._empty_input: int | None = None
        for cl, group in clauses:
            self._add_var_atoms(cl)
            if clause_is_tautology(cl):
                continue
            node = proof.add_input(cl, group)
            idx = self._install(_ClauseInfo(mk_clause(cl), node=node))
            if self.clauses[idx].lits == ():
                self._empty_input = idx
        for aid in sorted(self.ie_atoms):
            self._add_var(aid)

    # -- variables ----------------------------------------------------------

    def _add_var_atoms(self, cl: Clause) -> None:
        for l in cl:
            self._add_var(abs(l))

    def _add_var(self, aid: int) -> None:
        if aid not in self._var_set:
            self._var_set.add(aid)
            self.vars.append(aid)

    def _decision_order(self) -> list[int]:
        ordinary = [a for a in self.vars if a not in self.ie_atoms]
        return ordinary + sorted(a for a in self.vars if a in self.ie_atoms)

    # -- clause db ------------------------------------------------------------

    def _install(self, info: _ClauseInfo) -> int:
        idx = len(self.clauses)
        self.clauses.append(info)
        cl = info.lits
        if len(cl) >= 2:
            for l in cl[:2]:
                self.watches.setdefault(l, []).append(idx)
        return idx

    def _tlemma(self, eta: list[int], theory: str) -> int:
        """Learn the lemma clause of an inconsistent literal set eta."""
        cl = mk_clause([-l for l in eta])
        key = (cl, theory)
        idx = self._tlemma_clause.get(key)
        if idx is not None:
            return idx
        node = self.proof.add_tlemma(cl, theory)
        if self.config.dtc:
            pos_ie = [l for l in cl if l > 0 and l in self.ie_atoms]
            if len(pos_ie) > 1:
                raise ValueError(
                    "theory lemma with several positive interface equalities")
        ordered = self._order_for_watches(cl)
        idx = self._install(_ClauseInfo(ordered, node=node, theory=theory))
        self._tlemma_clause[key] = idx
        return idx

    def _order_for_watches(self, cl: Clause) -> Clause:
        """Unassigned/recent literals first so the watch invariant holds."""
        def key(l: int):
            v = self.value(l)
            if v is None:
                return (0, 0)
            return (1 if v is False else 2, -self.level[abs(l)])
        return tuple(sorted(cl, key=key))

    # -- assignment -------------------------------------------------------------

    def value(self, lit: int):
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def _enqueue(self, lit: int, reason: int | None) -> bool:
        aid = abs(lit)
        if aid in self.assign:
            return self.value(lit) is True
        self.assign[aid] = lit > 0
        self.level[aid] = len(self.trail_lim)
        self.reason[aid] = reason
        self.trail.append(lit)
        return True

    def _decision_level(self) -> int:
        return len(self.trail_lim)

    def _backjump(self, level: int) -> None:
        if level >= self._decision_level():
            return
        limit = self.trail_lim[level]
        for lit in reversed(self.trail[limit:]):
            aid = abs(lit)
            del self.assign[aid]
            del self.level[aid]
            del self.reason[aid]
        del self.trail[limit:]
        del self.trail_lim[level:]
        while self.theory_pushes > level:
            for hook in self.hooks:
                hook.pop()
            self.theory_pushes -= 1
        self.qhead = min(self.qhead, len(self.trail))
        self.theory_head = min(self.theory_head, len(self.trail))
        if self.ie_phase_level is not None and level < self.ie_phase_level:
            self.ie_phase_level = None
            self._suspend_ie_lemmas()

    def _suspend_ie_lemmas(self) -> None:
        if not self.config.dtc:
            return
        for info in self.clauses:
            if (info.learned or info.theory) and info.has_atom_in(self.ie_atoms):
                info.active = False

    def _resume_ie_lemmas(self) -> None:
        for info in self.clauses:
            info.active = True

    # -- propagation -------------------------------------------------------------

    def _propagate(self):
        """Unit propagation plus theory assertion, to fixpoint.

        Returns None or a conflict ("clause", idx) / ("theory", eta, name).
        """
        while True:
            while self.qhead < len(self.trail):
                lit = self.trail[self.qhead]
                self.qhead += 1
                self.steps += 1
                if self.config.budget and self.steps > self.config.budget:
                    raise BudgetExceeded
                confl = self._propagate_watches(-lit)
                if confl is not None:
                    return ("clause", confl, "")
            conflict = self._theory_assert()
            if conflict is not None:
                return conflict
            if self.qhead < len(self.trail):
                continue
            conflict = self._theory_propagate()
            if conflict is not None:
                return conflict
            if self.qhead == len(self.trail) and self.theory_head == len(self.trail):
                return None

    def _propagate_watches(self, false_lit: int) -> int | None:
        watchers = self.watches.get(false_lit, [])
        i = 0
        while i < len(watchers):
            idx = watchers[i]
            info = self.clauses[idx]
            if not info.active:
                i += 1
                continue
            cl = info.lits
            if cl[0] == false_lit:
                other = cl[1]
            elif cl[1] == false_lit:
                other = cl[0]
            else:                      # stale watch entry after reordering
                watchers[i] = watchers[-1]
                watchers.pop()
                continue
            if self.value(other) is True:
                i += 1
                continue
            replaced = False
            for k in range(2, len(cl)):
                l = cl[k]
                if self.value(l) is not False:
                    lits = list(cl)
                    pos = lits.index(false_lit)
                    lits[pos], lits[k] = lits[k], lits[pos]
                    info.lits = tuple(lits)
                    self.watches.setdefault(l, []).append(idx)
                    watchers[i] = watchers[-1]
                    watchers.pop()
                    replaced = True
                    break
            if replaced:
                continue
            if self.value(other) is False:
                return idx
            self._enqueue(other, idx)
            i += 1
        return None

    def _theory_assert(self):
        while self.theory_head < len(self.trail):
            lit = self.trail[self.theory_head]
            self.theory_head += 1
            for hook in self.hooks:
                if hook.owns(abs(lit)):
                    eta = hook.assert_lit(lit)
                    if eta is not None:
                        return ("theory", eta, hook.name)
        if self.config.early_pruning:
            for hook in self.hooks:
                eta = hook.check(final=False)
                if eta is not None:
                    return ("theory", eta, hook.name)
        return None

    def _theory_propagate(self):
        if self.config.dtc and not self._originals_assigned():
            return None
        for hook in self.hooks:
            for lit, mu in hook.propagations():
                if self.value(lit) is True:
                    continue
                idx = self._tlemma(list(mu) + [-lit], hook.name)
                if self.value(lit) is False:
                    return ("clause", idx, "")
                self._enqueue(lit, idx)
                return None
        return None

    def _originals_assigned(self) -> bool:
        return all(a in self.assign for a in self.vars if a not in self.ie_atoms)

    # -- conflict analysis ----------------------------------------------------

    def _conflict_clause_index(self, conflict) -> int:
        kind, payload, theory = conflict
        if kind == "clause":
            return payload
        return self._tlemma(payload, theory)

    def _analyze(self, confl_idx: int) -> tuple[Clause, int, int]:
        """First-UIP analysis; returns (learned clause, backjump level, index).

        At decision level 0 the analysis continues past the UIP and derives
        the empty clause.
        """
        cur_level = self._decision_level()
        steps: list[tuple[int, int]] = []
        seen: set[int] = set()
        learned: list[int] = []
        counter = 0
        for l in self.clauses[confl_idx].lits:
            aid = abs(l)
            if aid in seen:
                continue
            seen.add(aid)
            if cur_level > 0 and self.level[aid] == cur_level:
                counter += 1
            else:
                learned.append(l)
        pos = len(self.trail)
        while counter > 0:
            pos -= 1
            lit = self.trail[pos]
            aid = abs(lit)
            if aid not in seen:
                continue
            seen.discard(aid)
            counter -= 1
            if counter == 0:
                learned.append(-lit)
                break
            ridx = self.reason[aid]
            if ridx is None:
                raise RuntimeError("reached a decision during conflict analysis")
            steps.append((aid, ridx))
            for l in self.clauses[ridx].lits:
                a2 = abs(l)
                if a2 == aid or a2 in seen:
                    continue
                seen.add(a2)
                if self.level[a2] == cur_level:
                    counter += 1
                else:
                    learned.append(l)
        clause = mk_clause(learned)
        if cur_level == 0 and clause:
            remaining = set(clause)
            pos = len(self.trail)
            while remaining:
                pos -= 1
                lit = self.trail[pos]
                if -lit not in remaining:
                    continue
                ridx = self.reason[abs(lit)]
                if ridx is None:
                    raise RuntimeError("unexplained literal at level 0")
                steps.append((abs(lit), ridx))
                remaining.discard(-lit)
                for l in self.clauses[ridx].lits:
                    if l != lit:
                        remaining.add(l)
            clause = ()
        levels = sorted({self.level[abs(l)] for l in clause}, reverse=True)
        bj = levels[1] if len(levels) > 1 else 0
        info = _ClauseInfo(clause, base=confl_idx, steps=steps, learned=True)
        idx = self._install_learned(info)
        return clause, bj, idx

    def _install_learned(self, info: _ClauseInfo) -> int:
        info.lits = self._order_for_watches(info.lits)
        return self._install(info)

    # -- proof materialization ---------------------------------------------------

    def materialize(self, idx: int) -> int:
        """Proof node of a clause; interface-equality reasons are inlined."""
        info = self.clauses[idx]
        if info.node is not None:
            return info.node
        base, steps = self._flatten(idx)
        node = self.materialize(base)
        clause = set(self.proof.clause(node))
        for pivot, ridx in steps:
            if pivot not in clause and -pivot not in clause:
                continue
            rnode = self.materialize(ridx)
            rcl = self.proof.clause(rnode)
            if pivot in rcl and -pivot in clause:
                node = self.proof.add_res(pivot, pos=rnode, neg=node)
            elif -pivot in rcl and pivot in clause:
                node = self.proof.add_res(pivot, pos=node, neg=rnode)
            else:
                continue
            clause = set(self.proof.clause(node))
        info.node = node
        return node

    def _flatten(self, idx: int) -> tuple[int, list[tuple[int, int]]]:
        """Expand interface-equality chain reasons into one linear chain."""
        info = self.clauses[idx]
        out: list[tuple[int, int]] = []
        base = info.base
        binfo = self.clauses[base]
        if binfo.node is None and binfo.has_atom_in(self.ie_atoms):
            base, prefix = self._flatten(base)
            out.extend(prefix)
        for pivot, ridx in info.steps:
            rinfo = self.clauses[ridx]
            if (pivot in self.ie_atoms and rinfo.node is None
                    and rinfo.has_atom_in(self.ie_atoms)):
                rbase, rsteps = self._flatten(ridx)
                out.append((pivot, rbase))
                out.extend(rsteps)
            else:
                out.append((pivot, ridx))
        return base, out

    # -- main loop -----------------------------------------------------------------

    def solve(self) -> SolveResult:
        if self._empty_input is not None:
            self.proof.set_root(self.clauses[self._empty_input].node)
            return SolveResult("unsat", proof=self.proof)
        for idx, info in enumerate(list(self.clauses)):
            if len(info.lits) == 1:
                lit = info.lits[0]
                if self.value(lit) is False:
                    return self._refute(idx)
                self._enqueue(lit, idx)
        try:
            return self._search()
        except BudgetExceeded:
            return SolveResult("budget")

    def _refute(self, confl_idx: int) -> SolveResult:
        _clause, _bj, lidx = self._analyze(confl_idx)
        self.proof.set_root(self.materialize(lidx))
        return SolveResult("unsat", proof=self.proof)

    def _search(self) -> SolveResult:
        while True:
            conflict = self._propagate()
            if conflict is None and len(self.assign) == len(self._var_set):
                conflict = self._final_check()
                if conflict is None:
                    self._assert_model()
                    self._log_trail()
                    return SolveResult("sat", model=dict(self.assign))
            if conflict is not None:
                confl_idx = self._conflict_clause_index(conflict)
                if self._decision_level() == 0:
                    return self._refute(confl_idx)
                clause, bj, lidx = self._analyze(confl_idx)
                self.conflicts_since_restart += 1
                self._backjump(bj)
                if clause == ():
                    self.proof.set_root(self.materialize(lidx))
                    return SolveResult("unsat", proof=self.proof)
                unassigned = [l for l in clause if self.value(l) is None]
                if len(unassigned) == 1:
                    self._enqueue(unassigned[0], lidx)
                self._maybe_restart()
                continue
            self._decide()

    def _final_check(self):
        for hook in self.hooks:
            eta = hook.check(final=True)
            if eta is not None:
                return ("theory", eta, hook.name)
        return None

    def _assert_model(self) -> None:
        for info in self.clauses:
            if info.active and info.lits and not any(self.value(l) is True
                                                     for l in info.lits):
                raise RuntimeError("model leaves an active clause unsatisfied")

    def _decide(self) -> None:
        for aid in self._decision_order():
            if aid not in self.assign:
                if aid in self.ie_atoms and self.ie_phase_level is None:
                    self.ie_phase_level = self._decision_level() + 1
                    self._resume_ie_lemmas()
                self.trail_lim.append(len(self.trail))
                for hook in self.hooks:
                    hook.push()
                self.theory_pushes += 1
                self._enqueue(-aid, None)     # false first
                self.steps += 1
                return
        raise RuntimeError("decide called with a full assignment")

    def _maybe_restart(self) -> None:
        interval = self.config.restart_interval
        if interval is None or self.conflicts_since_restart < interval:
            return
        if self.ie_phase_level is not None:
            return                            # keep the equality phase intact
        self.conflicts_since_restart = 0
        self._backjump(0)

    def _log_trail(self) -> None:
        entry = []
        for lit in self.trail:
            aid = abs(lit)
            kind = "decision" if self.reason[aid] is None and self.level[aid] > 0 \
                else "implied"
            entry.append((lit, self.level[aid], kind))
        self.trail_log.append(entry)
