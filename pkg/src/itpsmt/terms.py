"""Terms, atoms and formulas, interned per solver context.

Terms are variables, uninterpreted function applications, or linear
combinations.  A linear combination is kept in a canonical flattened form
(sorted coefficient vector over variable/application bases plus a rational
constant), so syntactic identity of terms is plain equality of the interned
representation.  Atoms are Boolean propositions, arithmetic relations
``0 op t``, or term equalities; syntactically identical atoms always share
one id.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

REAL = "Real"
INT = "Int"
BOOL = "Bool"

LE = "<="
LT = "<"
EQ = "="
NE = "/="

_NEG_OP = {LE: LT, LT: LE, EQ: NE, NE: EQ}


# ---------------------------------------------------------------------------
# linear combinations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Linear:
    """0-ary view of ``sum(c_i * base_i) + const`` with bases sorted by id."""

    coeffs: tuple[tuple[int, Fraction], ...]
    const: Fraction

    def __add__(self, other: "Linear") -> "Linear":
        acc = dict(self.coeffs)
        for t, c in other.coeffs:
            acc[t] = acc.get(t, Fraction(0)) + c
        return lin_make(acc, self.const + other.const)

    def __sub__(self, other: "Linear") -> "Linear":
        return self + other.scale(Fraction(-1))

    def scale(self, c: Fraction) -> "Linear":
        if c == 0:
            return lin_make({}, Fraction(0))
        return Linear(tuple((t, k * c) for t, k in self.coeffs), self.const * c)

    def is_const(self) -> bool:
        return not self.coeffs

    def bases(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.coeffs)

    def leading_coeff(self) -> Fraction:
        return self.coeffs[0][1] if self.coeffs else self.const


def lin_make(acc: dict[int, Fraction], const) -> Linear:
    items = tuple(sorted((t, c) for t, c in acc.items() if c != 0))
    return Linear(items, Fraction(const))


def lin_const(c) -> Linear:
    return Linear((), Fraction(c))


def lin_var(tid: int, coeff=1) -> Linear:
    c = Fraction(coeff)
    if c == 0:
        return lin_const(0)
    return Linear(((tid, c),), Fraction(0))


# ---------------------------------------------------------------------------
# term and atom payloads
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    sort: str


@dataclass(frozen=True)
class App:
    fname: str
    args: tuple[int, ...]


@dataclass(frozen=True)
class LinNode:
    lin: Linear


@dataclass(frozen=True)
class BoolAtom:
    name: str


@dataclass(frozen=True)
class LaAtom:
    """Relation ``0 op lin``; equalities/disequalities are sign-normalized."""

    op: str
    lin: Linear


@dataclass(frozen=True)
class EqAtom:
    """Equality between two interned terms, kept unflattened for EUF."""

    lhs: int
    rhs: int


Atom = BoolAtom | LaAtom | EqAtom


# ---------------------------------------------------------------------------
# formulas
# ---------------------------------------------------------------------------

class Formula:
    pass


@dataclass(frozen=True)
class FTrue(Formula):
    pass


@dataclass(frozen=True)
class FFalse(Formula):
    pass


@dataclass(frozen=True)
class FLit(Formula):
    atom: int
    pos: bool = True


@dataclass(frozen=True)
class FAnd(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class FOr(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class FNot(Formula):
    arg: Formula


@dataclass(frozen=True)
class FImp(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class FIff(Formula):
    lhs: Formula
    rhs: Formula


TRUE = FTrue()
FALSE = FFalse()


def fand(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, FFalse):
            return FALSE
        if isinstance(a, FTrue):
            continue
        flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return FAnd(tuple(flat))


def for_(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, FTrue):
            return TRUE
        if isinstance(a, FFalse):
            continue
        flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return FOr(tuple(flat))


def fnot(a: Formula) -> Formula:
    if isinstance(a, FTrue):
        return FALSE
    if isinstance(a, FFalse):
        return TRUE
    if isinstance(a, FLit):
        return FLit(a.atom, not a.pos)
    if isinstance(a, FNot):
        return a.arg
    return FNot(a)


def fimp(a: Formula, b: Formula) -> Formula:
    if isinstance(a, FTrue):
        return b
    if isinstance(a, FFalse) or isinstance(b, FTrue):
        return TRUE
    if isinstance(b, FFalse):
        return fnot(a)
    return FImp(a, b)


def fiff(a: Formula, b: Formula) -> Formula:
    if isinstance(a, FTrue):
        return b
    if isinstance(b, FTrue):
        return a
    if isinstance(a, FFalse):
        return fnot(b)
    if isinstance(b, FFalse):
        return fnot(a)
    return FIff(a, b)


# ---------------------------------------------------------------------------
# context
# ---------------------------------------------------------------------------

class Context:
    """Interning tables for one solver context (single-threaded)."""

    def __init__(self) -> None:
        self._terms: list[Var | App | LinNode] = []
        self._term_ids: dict[object, int] = {}
        self._vars_by_name: dict[str, int] = {}
        self._atoms: list[Atom] = []
        self._atom_ids: dict[Atom, int] = {}
        self._fun_sorts: dict[str, tuple[tuple[str, ...], str]] = {}
        self._fresh = 0

    # -- terms ------------------------------------------------------------

    def term(self, tid: int) -> Var | App | LinNode:
        return self._terms[tid]

    def _intern_term(self, node: Var | App | LinNode) -> int:
        tid = self._term_ids.get(node)
        if tid is None:
            tid = len(self._terms)
            self._terms.append(node)
            self._term_ids[node] = tid
        return tid

    def mk_var(self, name: str, sort: str = REAL) -> int:
        tid = self._vars_by_name.get(name)
        if tid is not None:
            if self.term(tid).sort != sort:
                raise ValueError(f"variable {name} redeclared with sort {sort}")
            return tid
        tid = self._intern_term(Var(name, sort))
        self._vars_by_name[name] = tid
        return tid

    def fresh_var(self, prefix: str, sort: str = REAL) -> int:
        while True:
            self._fresh += 1
            name = f"{prefix}!{self._fresh}"
            if name not in self._vars_by_name:
                return self.mk_var(name, sort)

    def declare_fun(self, fname: str, arg_sorts: tuple[str, ...], ret: str) -> None:
        old = self._fun_sorts.get(fname)
        if old is not None and old != (arg_sorts, ret):
            raise ValueError(f"function {fname} redeclared")
        self._fun_sorts[fname] = (arg_sorts, ret)

    def mk_app(self, fname: str, args: tuple[int, ...]) -> int:
        return self._intern_term(App(fname, tuple(args)))

    def mk_lin_term(self, lin: Linear) -> int:
        """Intern a linear combination, collapsing the trivial cases."""
        if len(lin.coeffs) == 1 and lin.const == 0 and lin.coeffs[0][1] == 1:
            return lin.coeffs[0][0]
        return self._intern_term(LinNode(lin))

    def term_lin(self, tid: int) -> Linear:
        """Flattened linear view of a term; vars and apps are opaque bases."""
        node = self.term(tid)
        if isinstance(node, LinNode):
            return node.lin
        return lin_var(tid)

    def term_sort(self, tid: int) -> str:
        node = self.term(tid)
        if isinstance(node, Var):
            return node.sort
        if isinstance(node, App):
            return self._fun_sorts.get(node.fname, ((), REAL))[1]
        sorts = {self.term_sort(t) for t, _ in node.lin.coeffs}
        if sorts <= {INT} and node.lin.const.denominator == 1:
            return INT
        return REAL

    # -- atoms ------------------------------------------------------------

    def atom(self, aid: int) -> Atom:
        return self._atoms[aid - 1]

    def n_atoms(self) -> int:
        return len(self._atoms)

    def _intern_atom(self, a: Atom) -> int:
        aid = self._atom_ids.get(a)
        if aid is None:
            aid = len(self._atoms) + 1
            self._atoms.append(a)
            self._atom_ids[a] = aid
        return aid

    def mk_bool_atom(self, name: str) -> int:
        return self._intern_atom(BoolAtom(name))

    def fresh_bool_atom(self, prefix: str = "_t") -> int:
        self._fresh += 1
        return self.mk_bool_atom(f"{prefix}!{self._fresh}")

    def mk_la_atom(self, op: str, lin: Linear) -> int:
        if op in (EQ, NE) and lin.leading_coeff() < 0:
            lin = lin.scale(Fraction(-1))
        return self._intern_atom(LaAtom(op, lin))

    def mk_eq_atom(self, t1: int, t2: int) -> int:
        if t1 > t2:
            t1, t2 = t2, t1
        return self._intern_atom(EqAtom(t1, t2))

    # -- views ------------------------------------------------------------

    def atom_lin(self, aid: int) -> tuple[str, Linear]:
        """Arithmetic reading ``0 op lin`` of a theory atom (flattened)."""
        a = self.atom(aid)
        if isinstance(a, LaAtom):
            return a.op, a.lin
        if isinstance(a, EqAtom):
            return EQ, self.term_lin(a.lhs) - self.term_lin(a.rhs)
        raise ValueError(f"atom {aid} is propositional")

    def lit_lin(self, lit: int) -> tuple[str, Linear]:
        """Arithmetic reading of a signed literal over a theory atom."""
        op, lin = self.atom_lin(abs(lit))
        if lit > 0:
            return op, lin
        return _NEG_OP[op], lin if op in (EQ, NE) else lin.scale(Fraction(-1))

    def euf_view(self, aid: int) -> tuple[int, int] | None:
        """Read an atom as a term equality, if it has that shape."""
        a = self.atom(aid)
        if isinstance(a, EqAtom):
            return (a.lhs, a.rhs)
        if isinstance(a, LaAtom) and a.op in (EQ, NE) and _unit_pair(a.lin):
            (t1, c1), (t2, c2) = a.lin.coeffs
            return (t1, t2)
        return None

    # -- symbols ----------------------------------------------------------

    def term_symbols(self, tid: int) -> frozenset:
        node = self.term(tid)
        if isinstance(node, Var):
            return frozenset([("v", tid)])
        if isinstance(node, App):
            syms = {("f", node.fname)}
            for a in node.args:
                syms |= self.term_symbols(a)
            return frozenset(syms)
        syms = set()
        for t, _ in node.lin.coeffs:
            syms |= self.term_symbols(t)
        return frozenset(syms)

    def atom_symbols(self, aid: int) -> frozenset:
        a = self.atom(aid)
        if isinstance(a, BoolAtom):
            return frozenset([("b", a.name)])
        if isinstance(a, EqAtom):
            return self.term_symbols(a.lhs) | self.term_symbols(a.rhs)
        syms = set()
        for t, _ in a.lin.coeffs:
            syms |= self.term_symbols(t)
        return frozenset(syms)

    def formula_atoms(self, f: Formula) -> list[int]:
        seen: list[int] = []

        def walk(g: Formula) -> None:
            if isinstance(g, FLit):
                if g.atom not in seen:
                    seen.append(g.atom)
            elif isinstance(g, (FAnd, FOr)):
                for a in g.args:
                    walk(a)
            elif isinstance(g, FNot):
                walk(g.arg)
            elif isinstance(g, (FImp, FIff)):
                walk(g.lhs)
                walk(g.rhs)

        walk(f)
        return seen

    def formula_symbols(self, f: Formula) -> frozenset:
        syms = frozenset()
        for aid in self.formula_atoms(f):
            syms |= self.atom_symbols(aid)
        return syms

    # -- equalities -------------------------------------------------------

    def mk_equality(self, t1: int, t2: int) -> int:
        """Equality atom between two terms, arithmetic form when possible.

        Pure-arithmetic equalities flatten to a canonical ``0 = lin`` atom;
        equalities whose flattened form would lose a term boundary that EUF
        needs (a linear-node operand) stay as term-pair atoms.
        """
        l1, l2 = self.term_lin(t1), self.term_lin(t2)
        diff = l1 - l2
        apps = [t for t, _ in diff.coeffs if isinstance(self.term(t), App)]
        if not apps:
            if isinstance(self.term(t1), LinNode) or isinstance(self.term(t2), LinNode):
                if not _unit_pair(diff):
                    return self.mk_eq_atom(t1, t2)
            return self.mk_la_atom(EQ, diff)
        if _unit_pair(diff):
            return self.mk_la_atom(EQ, diff)
        return self.mk_eq_atom(t1, t2)

    # -- printing ---------------------------------------------------------

    def term_str(self, tid: int) -> str:
        node = self.term(tid)
        if isinstance(node, Var):
            return node.name
        if isinstance(node, App):
            return f"({node.fname} {' '.join(self.term_str(a) for a in node.args)})"
        return self.lin_str(node.lin)

    def lin_str(self, lin: Linear) -> str:
        parts = []
        for t, c in lin.coeffs:
            if c == 1:
                parts.append(self.term_str(t))
            else:
                parts.append(f"(* {_rat_str(c)} {self.term_str(t)})")
        if lin.const != 0 or not parts:
            parts.append(_rat_str(lin.const))
        if len(parts) == 1:
            return parts[0]
        return f"(+ {' '.join(parts)})"

    def atom_str(self, aid: int) -> str:
        a = self.atom(aid)
        if isinstance(a, BoolAtom):
            return a.name
        if isinstance(a, EqAtom):
            return f"(= {self.term_str(a.lhs)} {self.term_str(a.rhs)})"
        op = "distinct" if a.op == NE else a.op
        return f"({op} 0 {self.lin_str(a.lin)})"

    def formula_str(self, f: Formula) -> str:
        if isinstance(f, FTrue):
            return "true"
        if isinstance(f, FFalse):
            return "false"
        if isinstance(f, FLit):
            s = self.atom_str(f.atom)
            return s if f.pos else f"(not {s})"
        if isinstance(f, FAnd):
            return f"(and {' '.join(self.formula_str(a) for a in f.args)})"
        if isinstance(f, FOr):
            return f"(or {' '.join(self.formula_str(a) for a in f.args)})"
        if isinstance(f, FNot):
            return f"(not {self.formula_str(f.arg)})"
        if isinstance(f, FImp):
            return f"(=> {self.formula_str(f.lhs)} {self.formula_str(f.rhs)})"
        if isinstance(f, FIff):
            return f"(iff {self.formula_str(f.lhs)} {self.formula_str(f.rhs)})"
        raise TypeError(f)


def _unit_pair(lin: Linear) -> bool:
    if len(lin.coeffs) != 2 or lin.const != 0:
        return False
    (_, c1), (_, c2) = lin.coeffs
    return {c1, c2} == {Fraction(1), Fraction(-1)}


def _rat_str(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"
