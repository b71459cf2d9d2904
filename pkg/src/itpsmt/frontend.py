"""Input parsing, solver orchestration by logic, and interpolant validation.

File grammar (s-expressions, rationals written ``p/q``)::

    (set-logic LRA|RDL|IDL|UTVPI-Q|UTVPI-Z|EUF|EUF+LRA)
    (declare-var <name> Real|Int|Bool)
    (declare-fun <name> (<sorts>) <sort>)
    (assert-A <formula>)  (assert-B <formula>)  (assert-part <k> <formula>)

Output on unsat: ``unsat`` then one ``(interpolant <k> <formula>)`` line per
cut; on sat: ``sat`` and a model line.  Exit codes: 0 sat, 10 unsat,
20 error, 30 budget exceeded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import dtc as dtc_mod
from . import euf as euf_mod
from . import lainterp
from . import proofs as proofs_mod
from . import sexpr
from .cnf import cnf_convert
from .difflogic import DlSolver, dl_view_lin, interpolate_cycle, problem_scale
from .hooks import DlHook, EufHook, LraHook, UtvpiHook
from .linarith import LraSolver
from .partition import Clause, Partition
from .proofs import Proof, check_proof
from .sat import CdclSolver, SolverConfig
from .terms import (App, BOOL, BoolAtom, Context, EqAtom, FLit, Formula, INT,
                    LaAtom, Linear, REAL, TRUE, FALSE, fand, fiff, fimp, fnot,
                    for_, lin_const, lin_make, lin_var, EQ, LE, LT, NE)
from .utvpi import UtvpiSolver, interpolate_q, interpolate_z, utvpi_view_lin

LOGICS = ("LRA", "RDL", "IDL", "UTVPI-Q", "UTVPI-Z", "EUF", "EUF+LRA")


class InputError(Exception):
    pass


@dataclass
class Problem:
    ctx: Context
    part: Partition
    assertions: list[tuple[Formula, int]]
    logic: str | None = None
    n_groups: int = 2


@dataclass
class Options:
    theory: str = "auto"
    stronger: bool = False
    validate: bool = False
    dump_proof: str | None = None
    budget: int | None = None
    seed: int = 0
    check_proofs: bool = True
    restart_interval: int | None = None


@dataclass
class Verdict:
    status: str                        # sat | unsat | budget
    logic: str = ""
    model: dict[str, Fraction] | None = None
    bool_model: dict[str, bool] | None = None
    interpolants: list[Formula] = field(default_factory=list)
    validation: list[dict] = field(default_factory=list)
    proof: Proof | None = None
    proof_text: str | None = None


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _parse_rat(tok: str) -> Fraction | None:
    try:
        if "/" in tok:
            num, den = tok.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(int(tok))
    except ValueError:
        return None


class _Parser:
    def __init__(self, ctx: Context) -> None:
        self.ctx = ctx
        self.bools: dict[str, int] = {}
        self.funs: dict[str, tuple[tuple[str, ...], str]] = {}
        self.vars: dict[str, int] = {}

    def declare_var(self, name: str, sort: str) -> None:
        if sort == BOOL:
            self.bools[name] = self.ctx.mk_bool_atom(name)
        else:
            self.vars[name] = self.ctx.mk_var(name, sort)

    def declare_fun(self, name: str, arg_sorts, ret) -> None:
        self.funs[name] = (tuple(arg_sorts), ret)
        self.ctx.declare_fun(name, tuple(arg_sorts), ret)

    def term(self, node) -> Linear:
        ctx = self.ctx
        if isinstance(node, str):
            q = _parse_rat(node)
            if q is not None:
                return lin_const(q)
            if node in self.vars:
                return lin_var(self.vars[node])
            raise InputError(f"unknown term symbol '{node}'")
        if not node:
            raise InputError("empty term")
        head = node[0]
        args = node[1:]
        if head == "+":
            acc = lin_const(0)
            for a in args:
                acc = acc + self.term(a)
            return acc
        if head == "-":
            if len(args) == 1:
                return self.term(args[0]).scale(Fraction(-1))
            acc = self.term(args[0])
            for a in args[1:]:
                acc = acc - self.term(a)
            return acc
        if head == "*":
            if len(args) != 2:
                raise InputError("'*' takes two arguments")
            l1, l2 = self.term(args[0]), self.term(args[1])
            if l1.is_const():
                return l2.scale(l1.const)
            if l2.is_const():
                return l1.scale(l2.const)
            raise InputError("nonlinear product")
        if head in self.funs:
            tids = tuple(ctx.mk_lin_term(self.term(a)) for a in args)
            want = len(self.funs[head][0])
            if len(tids) != want:
                raise InputError(f"'{head}' expects {want} arguments")
            return lin_var(ctx.mk_app(head, tids))
        raise InputError(f"unknown function '{head}'")

    def formula(self, node) -> Formula:
        ctx = self.ctx
        if isinstance(node, str):
            if node == "true":
                return TRUE
            if node == "false":
                return FALSE
            if node in self.bools:
                return FLit(self.bools[node])
            raise InputError(f"unknown proposition '{node}'")
        if not node:
            raise InputError("empty formula")
        head = node[0]
        args = node[1:]
        if head == "and":
            return fand(*[self.formula(a) for a in args])
        if head == "or":
            return for_(*[self.formula(a) for a in args])
        if head == "not":
            return fnot(self.formula(args[0]))
        if head in ("=>", "implies"):
            return fimp(self.formula(args[0]), self.formula(args[1]))
        if head in ("iff", "<=>"):
            return fiff(self.formula(args[0]), self.formula(args[1]))
        if head in ("<=", "<", ">=", ">"):
            l1, l2 = self.term(args[0]), self.term(args[1])
            if head == "<=":
                return FLit(ctx.mk_la_atom(LE, l2 - l1))
            if head == "<":
                return FLit(ctx.mk_la_atom(LT, l2 - l1))
            if head == ">=":
                return FLit(ctx.mk_la_atom(LE, l1 - l2))
            return FLit(ctx.mk_la_atom(LT, l1 - l2))
        if head == "=":
            t1 = ctx.mk_lin_term(self.term(args[0]))
            t2 = ctx.mk_lin_term(self.term(args[1]))
            return FLit(ctx.mk_equality(t1, t2))
        if head in ("distinct", "/="):
            t1 = ctx.mk_lin_term(self.term(args[0]))
            t2 = ctx.mk_lin_term(self.term(args[1]))
            eq = ctx.mk_equality(t1, t2)
            atom = ctx.atom(eq)
            if isinstance(atom, LaAtom):
                return FLit(ctx.mk_la_atom(NE, atom.lin))
            return fnot(FLit(eq))
        raise InputError(f"unknown connective '{head}'")


def parse(text: str, ctx: Context | None = None) -> Problem:
    ctx = ctx or Context()
    parser = _Parser(ctx)
    raw: list[tuple[Formula, int]] = []
    logic = None
    max_group = 0
    for form in sexpr.parse_all(text):
        if not isinstance(form, list) or not form:
            raise InputError(f"stray token {form!r}")
        head = form[0]
        if head == "set-logic":
            logic = form[1]
            if logic not in LOGICS:
                raise InputError(f"unsupported logic {logic}")
        elif head == "declare-var":
            if form[2] not in (REAL, INT, BOOL):
                raise InputError(f"unknown sort {form[2]}")
            parser.declare_var(form[1], form[2])
        elif head == "declare-fun":
            parser.declare_fun(form[1], list(form[2]), form[3])
        elif head == "assert-A":
            raw.append((parser.formula(form[1]), 1))
            max_group = max(max_group, 1)
        elif head == "assert-B":
            raw.append((parser.formula(form[1]), 2))
            max_group = max(max_group, 2)
        elif head == "assert-part":
            k = int(form[1])
            if k < 1:
                raise InputError("partition indices start at 1")
            raw.append((parser.formula(form[2]), k))
            max_group = max(max_group, k)
        else:
            raise InputError(f"unknown command {head}")
    if not raw:
        raise InputError("no assertions")
    n = max(2, max_group)
    part = Partition(ctx, n)
    for f, g in raw:
        part.add_formula(f, g)
    groups = {g for _f, g in raw}
    if len(groups) < 2:
        raise InputError("interpolation needs assertions on at least two sides")
    return Problem(ctx, part, raw, logic=logic, n_groups=n)


def parse_atom_sexpr(ctx: Context, parser_vars: dict, node) -> int:
    """Atom parser for proof files; shares the formula grammar."""
    p = _Parser(ctx)
    p.vars = dict(parser_vars.get("vars", {}))
    p.bools = dict(parser_vars.get("bools", {}))
    p.funs = dict(parser_vars.get("funs", {}))
    f = p.formula(node)
    if not isinstance(f, FLit) or not f.pos:
        raise InputError(f"not an atom: {node}")
    return f.atom


# ---------------------------------------------------------------------------
# logic detection and routing
# ---------------------------------------------------------------------------

def theory_atoms(ctx: Context, problem: Problem) -> list[int]:
    atoms = []
    for f, _g in problem.assertions:
        for aid in ctx.formula_atoms(f):
            if not isinstance(ctx.atom(aid), BoolAtom) and aid not in atoms:
                atoms.append(aid)
    return atoms


def detect_logic(problem: Problem) -> str:
    """Smallest fragment containing all atoms (DL < UTVPI < LRA)."""
    ctx = problem.ctx
    atoms = theory_atoms(ctx, problem)
    if not atoms:
        return "LRA"
    sorts = set()
    for aid in atoms:
        for sym in sorted(ctx.atom_symbols(aid)):
            if sym[0] == "v":
                sorts.add(ctx.term(sym[1]).sort)
    integer = sorts == {INT}
    kinds = {dtc_mod.atom_theory(ctx, aid) for aid in atoms}
    if kinds == {"euf"}:
        return "EUF"
    if "euf" in kinds:
        return "EUF+LRA"
    if all(_dl_atom(ctx, aid) for aid in atoms):
        return "IDL" if integer else "RDL"
    if all(_utvpi_atom(ctx, aid) for aid in atoms):
        return "UTVPI-Z" if integer else "UTVPI-Q"
    if integer:
        raise InputError("integer linear arithmetic beyond UTVPI is unsupported")
    return "LRA"


def _dl_atom(ctx: Context, aid: int) -> bool:
    atom = ctx.atom(aid)
    return (isinstance(atom, LaAtom) and atom.op in (LE, LT)
            and dl_view_lin(atom.lin) is not None)


def _utvpi_atom(ctx: Context, aid: int) -> bool:
    atom = ctx.atom(aid)
    return (isinstance(atom, LaAtom) and atom.op in (LE, LT)
            and utvpi_view_lin(atom.lin) is not None)


def _hooks_for(ctx: Context, logic: str, scale: int):
    if logic == "LRA":
        return [LraHook(ctx)]
    if logic == "RDL":
        return [DlHook(ctx, integer=False, scale=scale, name="rdl")]
    if logic == "IDL":
        return [DlHook(ctx, integer=True, scale=1, name="idl")]
    if logic == "UTVPI-Q":
        return [UtvpiHook(ctx, integer=False, scale=scale, name="utvpi-q")]
    if logic == "UTVPI-Z":
        return [UtvpiHook(ctx, integer=True, scale=1, name="utvpi-z")]
    if logic == "EUF":
        return [EufHook(ctx)]
    raise InputError(f"no hook set for {logic}")


# ---------------------------------------------------------------------------
# lemma interpolation and re-verification by theory tag
# ---------------------------------------------------------------------------

def _dl_lemma_itp(ctx, part, clause, cut, integer, scale, stronger):
    solver = DlSolver(ctx, integer=integer, scale=scale)
    for l in clause:
        solver.assert_lit(-l)
    lits = solver.check()
    if lits is None:
        raise lainterp.LaError("difference lemma is not inconsistent")
    cycle = solver.last_cycle
    if any(e.weight.eps != 0 for e in cycle):
        return lainterp.lemma_interpolant(ctx, part, clause, cut, stronger)
    return interpolate_cycle(ctx, part, cycle, cut, scale)


def _utvpi_lemma_itp(ctx, part, clause, cut, integer, scale, stronger):
    solver = UtvpiSolver(ctx, integer=integer, scale=scale)
    for l in clause:
        solver.assert_lit(-l)
    lits = solver.check_q()
    if lits is not None:
        cycle = solver.last_cycle
        if any(e.weight.eps != 0 for e in cycle):
            return lainterp.lemma_interpolant(ctx, part, clause, cut, stronger)
        return interpolate_q(ctx, part, cycle, cut, solver.scale)
    if integer and solver.check_z() is not None:
        return interpolate_z(ctx, part, solver.last_witness, cut)
    raise lainterp.LaError("unit-two-variable lemma is not inconsistent")


def make_lemma_itp(ctx: Context, part: Partition, scale: int, stronger: bool):
    def itp(clause: Clause, theory: str, cut: int) -> Formula:
        if theory == "rdl":
            return _dl_lemma_itp(ctx, part, clause, cut, False, scale, stronger)
        if theory == "idl":
            return _dl_lemma_itp(ctx, part, clause, cut, True, 1, stronger)
        if theory == "utvpi-q":
            return _utvpi_lemma_itp(ctx, part, clause, cut, False, scale, stronger)
        if theory == "utvpi-z":
            return _utvpi_lemma_itp(ctx, part, clause, cut, True, 1, stronger)
        if theory == "euf":
            return euf_mod.lemma_interpolant(ctx, part, clause, cut)
        return lainterp.lemma_interpolant(ctx, part, clause, cut, stronger)
    return itp


def make_lemma_verifier(ctx: Context, scale: int):
    """Re-verification callback for check_proof: negated lemma is unsat."""

    def verify(clause: Clause, theory: str) -> bool:
        if theory in ("rdl", "utvpi-q"):
            solver = (DlSolver(ctx, False, scale) if theory == "rdl"
                      else UtvpiSolver(ctx, False, scale))
            for l in clause:
                solver.assert_lit(-l)
            return solver.check() is not None
        if theory in ("idl", "utvpi-z"):
            solver = (DlSolver(ctx, True, 1) if theory == "idl"
                      else UtvpiSolver(ctx, True, 1))
            for l in clause:
                solver.assert_lit(-l)
            return solver.check() is not None
        if theory == "euf":
            if euf_mod.verify_lemma(ctx, clause):
                return True
            return _verify_combined(ctx, clause)
        if lainterp.verify_lemma(ctx, clause):
            return True
        return _verify_combined(ctx, clause)

    return verify


def _verify_combined(ctx: Context, clause: Clause) -> bool:
    part = Partition(ctx, 2)
    assertions = []
    for l in clause:
        part.add_atom(abs(l), 1)
        assertions.append((FLit(abs(l), l < 0), 1))
    result, _cat, _solver = dtc_mod.run_dtc(ctx, part, assertions)
    return result.status == "unsat"


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def run(problem: Problem, options: Options | None = None) -> Verdict:
    options = options or Options()
    ctx, part = problem.ctx, problem.part
    logic = options.theory.upper() if options.theory != "auto" else \
        (problem.logic or detect_logic(problem))
    if logic not in LOGICS:
        raise InputError(f"unsupported logic {logic}")
    _check_logic_fit(problem, logic)
    scale = problem_scale(ctx, theory_atoms(ctx, problem)) \
        if logic in ("RDL", "UTVPI-Q") else 1

    if logic == "EUF+LRA":
        assertions = dtc_mod.purify(ctx, part, problem.assertions)
        cfg = SolverConfig(budget=options.budget,
                           restart_interval=options.restart_interval)
        result, cat, _solver = dtc_mod.run_dtc(ctx, part, assertions, cfg)
        if result.status != "unsat":
            return _sat_verdict(result, logic, ctx, problem)
        proof = result.proof
        if options.check_proofs:
            check_proof(proof, tlemma_verifier=make_lemma_verifier(ctx, scale))
            issues = dtc_mod.audit_ie_local(proof, cat.atom_ids())
            if issues:
                raise proofs_mod.ProofError("; ".join(issues))
        itps = dtc_mod.interpolate_combined(ctx, part, proof, cat.atom_ids(),
                                            stronger=options.stronger)
        return _unsat_verdict(ctx, problem, logic, proof, itps, options)

    clauses: list[tuple[Clause, int]] = []
    for f, g in problem.assertions:
        for cl in cnf_convert(ctx, part, f, g):
            clauses.append((cl, g))
    hooks = _hooks_for(ctx, logic, scale)
    cfg = SolverConfig(budget=options.budget,
                       restart_interval=options.restart_interval)
    proof = Proof()
    solver = CdclSolver(ctx, clauses, hooks, proof, cfg)
    result = solver.solve()
    if result.status != "unsat":
        return _sat_verdict(result, logic, ctx, problem, hooks)
    if options.check_proofs:
        check_proof(proof, tlemma_verifier=make_lemma_verifier(ctx, scale))
    lemma_itp = make_lemma_itp(ctx, part, scale, options.stronger)
    itps = proofs_mod.sequence_interpolants(proof, part, lemma_itp)
    return _unsat_verdict(ctx, problem, logic, proof, itps, options)


def _check_logic_fit(problem: Problem, logic: str) -> None:
    ctx = problem.ctx
    atoms = theory_atoms(ctx, problem)
    if logic in ("RDL", "IDL"):
        bad = [a for a in atoms if not _dl_atom(ctx, a)]
        if bad:
            raise InputError("assertions outside difference logic")
    if logic in ("UTVPI-Q", "UTVPI-Z"):
        bad = [a for a in atoms if not _utvpi_atom(ctx, a)]
        if bad:
            raise InputError("assertions outside the unit-two-variable fragment")
    if logic == "EUF":
        bad = [a for a in atoms if dtc_mod.atom_theory(ctx, a) != "euf"]
        if bad:
            raise InputError("arithmetic assertions in an EUF problem")


def _sat_verdict(result, logic, ctx, problem, hooks=None) -> Verdict:
    if result.status == "budget":
        return Verdict("budget", logic=logic)
    model: dict[str, Fraction] = {}
    bool_model: dict[str, bool] = {}
    if result.model:
        for aid, val in sorted(result.model.items()):
            atom = ctx.atom(aid)
            if isinstance(atom, BoolAtom) and not atom.name.startswith("_t!"):
                bool_model[atom.name] = val
    for hook in hooks or []:
        solver = getattr(hook, "solver", None)
        values = None
        if isinstance(solver, LraSolver):
            values = {t: d.q + d.eps * Fraction(1, 1 << 20)
                      for t, d in solver.model_delta().items()}
        elif isinstance(solver, (DlSolver, UtvpiSolver)):
            values = solver.model()
        if values:
            for tid, q in sorted(values.items()):
                node = ctx.term(tid)
                if hasattr(node, "name"):
                    model[node.name] = q
    return Verdict("sat", logic=logic, model=model or None,
                   bool_model=bool_model or None)


def _unsat_verdict(ctx, problem, logic, proof, itps, options) -> Verdict:
    verdict = Verdict("unsat", logic=logic, interpolants=itps, proof=proof)
    if options.dump_proof is not None:
        verdict.proof_text = proofs_mod.dump(proof, ctx, problem.part)
    if options.validate:
        for i, itp in enumerate(itps, start=1):
            a = fand(*[f for f, g in problem.assertions if g <= i])
            b = fand(*[f for f, g in problem.assertions if g > i])
            verdict.validation.append(
                validate(ctx, a, b, itp, logic, budget=options.budget))
    return verdict


# ---------------------------------------------------------------------------
# the validator
# ---------------------------------------------------------------------------

def solve_formulas(ctx: Context, labeled: list[tuple[Formula, int]],
                   logic: str, budget: int | None = None) -> str:
    """Fresh-context satisfiability check used by the validator."""
    part = Partition(ctx, 2)
    for f, g in labeled:
        part.add_formula(f, g)
    if logic == "EUF+LRA":
        assertions = dtc_mod.purify(ctx, part, labeled)
        result, _cat, _s = dtc_mod.run_dtc(ctx, part, assertions,
                                           SolverConfig(budget=budget))
        return result.status
    clauses: list[tuple[Clause, int]] = []
    for f, g in labeled:
        for cl in cnf_convert(ctx, part, f, g):
            clauses.append((cl, g))
    atoms = sorted({abs(l) for cl, _g in clauses for l in cl})
    scale = problem_scale(ctx, [a for a in atoms
                                if isinstance(ctx.atom(a), LaAtom)]) \
        if logic in ("RDL", "UTVPI-Q") else 1
    hooks = _hooks_for(ctx, logic, scale)
    solver = CdclSolver(ctx, clauses, hooks, Proof(),
                        SolverConfig(budget=budget))
    return solver.solve().status


VALIDATION_BACKEND = {
    "LRA": "LRA",
    "RDL": "LRA",          # independent route: the simplex covers DL(Q)
    "IDL": "IDL",
    "UTVPI-Q": "LRA",
    "UTVPI-Z": "UTVPI-Z",
    "EUF": "EUF",
    "EUF+LRA": "EUF+LRA",
}


def validate(ctx: Context, a: Formula, b: Formula, itp: Formula,
             logic: str, backend: str | None = None,
             budget: int | None = None) -> dict:
    """Check the three interpolant conditions in fresh solver contexts."""
    backend = backend or VALIDATION_BACKEND[logic.upper()]
    syms_a = ctx.formula_symbols(a)
    syms_b = ctx.formula_symbols(b)
    syms_i = ctx.formula_symbols(itp)
    cond3 = syms_i <= (syms_a & syms_b)
    cond1 = solve_formulas(ctx, [(a, 1), (fnot(itp), 2)], backend,
                           budget) == "unsat"
    cond2 = solve_formulas(ctx, [(itp, 1), (b, 2)], backend, budget) == "unsat"
    ok = cond1 and cond2 and cond3
    reason = "" if ok else \
        "; ".join(n for n, c in (("condition i", cond1), ("condition ii", cond2),
                                 ("condition iii", cond3)) if not c)
    return {"ok": ok, "i": cond1, "ii": cond2, "iii": cond3, "reason": reason}


def equivalent(ctx: Context, f: Formula, g: Formula, logic: str = "LRA") -> bool:
    """Logic-level equivalence via two unsat checks."""
    one = solve_formulas(ctx, [(f, 1), (fnot(g), 2)], logic) == "unsat"
    two = solve_formulas(ctx, [(g, 1), (fnot(f), 2)], logic) == "unsat"
    return one and two


def entails(ctx: Context, f: Formula, g: Formula, logic: str = "LRA") -> bool:
    return solve_formulas(ctx, [(f, 1), (fnot(g), 2)], logic) == "unsat"


# ---------------------------------------------------------------------------
# report formatting
# ---------------------------------------------------------------------------

def render(verdict: Verdict, ctx: Context) -> str:
    lines = [verdict.status if verdict.status != "budget" else "unknown (budget)"]
    if verdict.status == "sat":
        parts = []
        for name, q in (verdict.model or {}).items():
            parts.append(f"({name} {q})")
        for name, v in (verdict.bool_model or {}).items():
            parts.append(f"({name} {'true' if v else 'false'})")
        if parts:
            lines.append(f"(model {' '.join(parts)})")
    if verdict.status == "unsat":
        for i, itp in enumerate(verdict.interpolants, start=1):
            lines.append(f"(interpolant {i} {ctx.formula_str(itp)})")
        for i, report in enumerate(verdict.validation, start=1):
            status = "pass" if report["ok"] else f"fail({report['reason']})"
            lines.append(f"(validation {i} {status})")
    return "\n".join(lines) + "\n"


EXIT_CODES = {"sat": 0, "unsat": 10, "budget": 30}
