"""Linear rational arithmetic: solving and conjunction interpolation.

The solver is a bounds-and-tableau simplex working on exact rationals
extended with a symbolic infinitesimal for strict bounds.  Every input
inequality gets a slack variable for its (sign-normalized) linear part, even
single-variable ones, so a detected conflict can always be read back as a
positive linear combination of original atoms: the combination telescopes to
``0 <= c`` with ``c`` strictly negative, which is the refutation object the
interpolation routines consume.

Interpolation of an inconsistent conjunction replaces every inequality from
the B side by ``0 <= 0`` inside the refutation and re-propagates the sums;
the root inequality is the interpolant.  Optionally the sums are limited to
those needed to cancel A-local bases, yielding a stronger conjunction.
Strict inequalities ride on the infinitesimal and are rewritten back at the
end; disequalities are split into two strict branches.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .delta import DZERO, Delta
from .partition import Partition
from .terms import (EQ, LE, LT, NE, Context, FFalse, FLit, Formula, Linear,
                    TRUE, FALSE, fand, for_, lin_make)


class LaError(Exception):
    pass


# ---------------------------------------------------------------------------
# polynomials over term bases (the proof-side representation)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Poly:
    """``sum(coeff * base)`` + Delta constant; bases are interned term ids."""

    coeffs: tuple[tuple[int, Fraction], ...]
    const: Delta

    @staticmethod
    def make(acc: dict[int, Fraction], const: Delta) -> "Poly":
        return Poly(tuple(sorted((t, c) for t, c in acc.items() if c != 0)), const)

    @staticmethod
    def of_linear(lin: Linear, eps: Fraction = Fraction(0)) -> "Poly":
        return Poly(lin.coeffs, Delta(lin.const, eps))

    def combine(self, other: "Poly", c1: Fraction, c2: Fraction) -> "Poly":
        acc = {t: c * c1 for t, c in self.coeffs}
        for t, c in other.coeffs:
            acc[t] = acc.get(t, Fraction(0)) + c * c2
        return Poly.make(acc, self.const.scale(c1) + other.const.scale(c2))

    def scale(self, c: Fraction) -> "Poly":
        return Poly(tuple((t, k * c) for t, k in self.coeffs), self.const.scale(c))

    def is_const(self) -> bool:
        return not self.coeffs

    def linear_part(self) -> Linear:
        return Linear(self.coeffs, self.const.q)


ZERO_POLY = Poly((), DZERO)


@dataclass(frozen=True)
class Hyp:
    """One usable inequality ``0 <= poly`` obtained from a single literal.

    ``eq_dir`` is 0 when the literal is itself an inequality and +1/-1 for
    the two reading directions of an equality.  Probe hypotheses are the
    strict inequalities injected while splitting a disequality; they borrow
    the disequality's atom for side classification.
    """

    atom: int
    negated: bool
    eq_dir: int
    poly: Poly
    probe: bool = False

    def lit(self) -> int:
        return -self.atom if self.negated else self.atom


@dataclass
class LAProof:
    kind: str                      # "hyp" | "comb"
    poly: Poly
    hyp: Hyp | None = None
    c1: Fraction = Fraction(1)
    c2: Fraction = Fraction(1)
    left: "LAProof | None" = None
    right: "LAProof | None" = None

    @staticmethod
    def of_hyp(h: Hyp) -> "LAProof":
        return LAProof("hyp", h.poly, hyp=h)

    @staticmethod
    def comb(left: "LAProof", right: "LAProof", c1: Fraction, c2: Fraction) -> "LAProof":
        if c1 <= 0 or c2 <= 0:
            raise LaError("combination coefficients must be positive")
        return LAProof("comb", left.poly.combine(right.poly, c1, c2),
                       c1=c1, c2=c2, left=left, right=right)

    def hyps(self) -> list[Hyp]:
        if self.kind == "hyp":
            return [self.hyp]
        return self.left.hyps() + self.right.hyps()


def laproof_str(ctx: Context, proof: LAProof) -> str:
    """S-expression rendering with hyp/leqeq/comb rule names."""
    if proof.kind == "hyp":
        h = proof.hyp
        lit = ctx.atom_str(h.atom) if not h.negated else f"(not {ctx.atom_str(h.atom)})"
        if h.eq_dir:
            return f"(leqeq {'+' if h.eq_dir > 0 else '-'} {lit})"
        return f"(hyp {lit})"
    return (f"(comb {proof.c1} {laproof_str(ctx, proof.left)} "
            f"{proof.c2} {laproof_str(ctx, proof.right)})")


@dataclass
class LaConflict:
    lits: list[int]                       # inconsistent literal set, original atoms
    proof: LAProof                        # refutation: root is 0 <= c, c < 0
    bounds: list[tuple[int, str, Delta]]  # slack-bound form of the conflict


# ---------------------------------------------------------------------------
# the simplex solver
# ---------------------------------------------------------------------------

_UNBOUNDED = None


class LraSolver:
    """Incremental simplex over delta-rationals with push/pop checkpoints."""

    def __init__(self, ctx: Context) -> None:
        self.ctx = ctx
        self.var_of_term: dict[int, int] = {}
        self.term_of_var: dict[int, int] = {}
        self.slack_of: dict[tuple, int] = {}
        self.slack_def: dict[int, dict[int, Fraction]] = {}
        self.nvars = 0
        self.rows: dict[int, dict[int, Fraction]] = {}
        self.lower: dict[int, tuple[Delta, Hyp]] = {}
        self.upper: dict[int, tuple[Delta, Hyp]] = {}
        self.beta: dict[int, Delta] = {}
        self.diseqs: list[tuple[int, Linear]] = []   # (lit, lhs of 0 /= lin)
        self._trail: list[tuple] = []
        self._scopes: list[int] = []

    # -- variables and slacks ----------------------------------------------

    def _var_for_base(self, tid: int) -> int:
        v = self.var_of_term.get(tid)
        if v is None:
            v = self.nvars
            self.nvars += 1
            self.var_of_term[tid] = v
            self.term_of_var[v] = tid
            self.beta[v] = DZERO
        return v

    def _flatten(self, lin: Linear) -> dict[int, Fraction]:
        """Linear part over internal base variables (constant dropped)."""
        out: dict[int, Fraction] = {}
        for tid, c in lin.coeffs:
            out[self._var_for_base(tid)] = out.get(self._var_for_base(tid), Fraction(0)) + c
        return {v: c for v, c in out.items() if c != 0}

    def _slack_for(self, part: dict[int, Fraction]) -> tuple[int, bool]:
        """Slack variable of the sign-normalized linear part."""
        items = tuple(sorted(part.items()))
        flipped = items[0][1] < 0
        if flipped:
            items = tuple((v, -c) for v, c in items)
        s = self.slack_of.get(items)
        if s is None:
            s = self.nvars
            self.nvars += 1
            self.slack_of[items] = s
            self.slack_def[s] = dict(items)
            row: dict[int, Fraction] = {}
            val = DZERO
            for v, c in items:
                if v in self.rows:          # substitute basic bases
                    for w, cw in self.rows[v].items():
                        row[w] = row.get(w, Fraction(0)) + c * cw
                else:
                    row[v] = row.get(v, Fraction(0)) + c
                val = val + self.beta[v].scale(c)
            self.rows[s] = {v: c for v, c in row.items() if c != 0}
            self.beta[s] = val
        return s, flipped

    def is_slack(self, v: int) -> bool:
        return v in self.slack_def

    # -- checkpoints ---------------------------------------------------------

    def push(self) -> None:
        self._scopes.append(len(self._trail))

    def pop(self) -> None:
        mark = self._scopes.pop()
        while len(self._trail) > mark:
            entry = self._trail.pop()
            kind, var, old = entry
            table = self.lower if kind == "lb" else self.upper if kind == "ub" else None
            if table is not None:
                if old is None:
                    table.pop(var, None)
                else:
                    table[var] = old
            else:                               # "diseq"
                self.diseqs.pop()

    # -- assertions ---------------------------------------------------------

    def assert_lit(self, lit: int) -> LaConflict | None:
        """Assert one theory literal (signed atom id)."""
        op, lin = self.ctx.lit_lin(lit)
        negated = lit < 0
        atom = abs(lit)
        if op == NE:
            self._trail.append(("diseq", 0, None))
            self.diseqs.append((lit, lin))
            return None
        if op == EQ:
            for d in (1, -1):
                h = Hyp(atom, negated, d, Poly.of_linear(lin.scale(Fraction(d))))
                conflict = self._assert_hyp(h)
                if conflict is not None:
                    return conflict
            return None
        eps = Fraction(-1) if op == LT else Fraction(0)
        h = Hyp(atom, negated, 0, Poly.of_linear(lin, eps))
        return self._assert_hyp(h)

    def assert_atom(self, aid: int) -> LaConflict | None:
        return self.assert_lit(aid)

    def _assert_hyp(self, h: Hyp) -> LaConflict | None:
        poly = h.poly
        if poly.is_const():
            if poly.const.is_negative():
                return LaConflict([h.lit()], LAProof.of_hyp(h), [])
            return None
        part = self._flatten(poly.linear_part())
        s, flipped = self._slack_for(part)
        # 0 <= T + c with T = +-S: either S >= -c (lower) or S <= c (upper)
        if flipped:
            return self._assert_bound(s, "ub", poly.const, h)
        return self._assert_bound(s, "lb", -poly.const, h)

    def _assert_bound(self, v: int, kind: str, val: Delta, h: Hyp) -> LaConflict | None:
        other = self.upper.get(v) if kind == "lb" else self.lower.get(v)
        if other is not None:
            oval, ohyp = other
            clash = oval < val if kind == "lb" else val < oval
            if clash:
                proof = LAProof.comb(LAProof.of_hyp(h), LAProof.of_hyp(ohyp),
                                     Fraction(1), Fraction(1))
                bounds = [(v, kind, val), (v, "ub" if kind == "lb" else "lb", oval)]
                return self._conflict(proof, bounds)
        table = self.lower if kind == "lb" else self.upper
        cur = table.get(v)
        better = cur is None or (cur[0] < val if kind == "lb" else val < cur[0])
        if not better:
            return None
        self._trail.append((kind, v, cur))
        table[v] = (val, h)
        if v not in self.rows:                     # nonbasic: repair beta now
            b = self.beta[v]
            if (kind == "lb" and b < val) or (kind == "ub" and val < b):
                self._update_nonbasic(v, val)
        return None

    # -- simplex -------------------------------------------------------------

    def _update_nonbasic(self, v: int, val: Delta) -> None:
        delta = val - self.beta[v]
        self.beta[v] = val
        for b, row in self.rows.items():
            c = row.get(v)
            if c:
                self.beta[b] = self.beta[b] + delta.scale(c)

    def _pivot_and_update(self, i: int, j: int, v: Delta) -> None:
        a = self.rows[i][j]
        theta = (v - self.beta[i]).scale(Fraction(1) / a)
        self.beta[i] = v
        self.beta[j] = self.beta[j] + theta
        for b, row in self.rows.items():
            if b != i and row.get(j):
                self.beta[b] = self.beta[b] + theta.scale(row[j])
        # rewrite row i as a definition of j and substitute everywhere
        row = self.rows.pop(i)
        a = row.pop(j)
        newrow = {i: Fraction(1) / a}
        for k, c in row.items():
            newrow[k] = -c / a
        for b, r in list(self.rows.items()):
            c = r.pop(j, None)
            if c:
                for k, ck in newrow.items():
                    nc = r.get(k, Fraction(0)) + c * ck
                    if nc == 0:
                        r.pop(k, None)
                    else:
                        r[k] = nc
        self.rows[j] = newrow

    def check(self, final: bool = True) -> LaConflict | None:
        conflict = self._check_simplex()
        if conflict is not None or not final:
            return conflict
        return self._check_diseqs()

    def _check_simplex(self) -> LaConflict | None:
        while True:
            viol = None
            for i in sorted(self.rows):
                lo, up = self.lower.get(i), self.upper.get(i)
                if lo is not None and self.beta[i] < lo[0]:
                    viol = (i, "lb")
                    break
                if up is not None and up[0] < self.beta[i]:
                    viol = (i, "ub")
                    break
            if viol is None:
                return None
            i, kind = viol
            row = self.rows[i]
            entering = None
            for j in sorted(row):
                a = row[j]
                if kind == "lb":
                    ok = (a > 0 and self._below_upper(j)) or (a < 0 and self._above_lower(j))
                else:
                    ok = (a < 0 and self._below_upper(j)) or (a > 0 and self._above_lower(j))
                if ok:
                    entering = j
                    break
            if entering is None:
                return self._row_conflict(i, kind)
            target = self.lower[i][0] if kind == "lb" else self.upper[i][0]
            self._pivot_and_update(i, entering, target)

    def _below_upper(self, j: int) -> bool:
        up = self.upper.get(j)
        return up is None or self.beta[j] < up[0]

    def _above_lower(self, j: int) -> bool:
        lo = self.lower.get(j)
        return lo is None or lo[0] < self.beta[j]

    def _row_conflict(self, i: int, kind: str) -> LaConflict:
        """Conflict from a stuck row: combine bound atoms per the tableau row."""
        row = self.rows[i]
        flip = Fraction(1) if kind == "lb" else Fraction(-1)
        parts: list[tuple[Hyp, Fraction]] = []
        bounds: list[tuple[int, str, Delta]] = []
        for j in sorted(row):
            a = row[j] * flip
            if a > 0:
                val, h = self.upper[j]
                parts.append((h, a))
                bounds.append((j, "ub", val))
            elif a < 0:
                val, h = self.lower[j]
                parts.append((h, -a))
                bounds.append((j, "lb", val))
        if kind == "lb":
            val, h = self.lower[i]
            bounds.append((i, "lb", val))
        else:
            val, h = self.upper[i]
            bounds.append((i, "ub", val))
        parts.append((h, Fraction(1)))
        acc: tuple[LAProof, Fraction] | None = None
        for h2, c in parts:
            leaf = LAProof.of_hyp(h2)
            if acc is None:
                acc = (leaf, c)
            else:
                prev, cprev = acc
                acc = (LAProof.comb(prev, leaf, cprev, c), Fraction(1))
        proof = acc[0]
        if not proof.poly.is_const() or not proof.poly.const.is_negative():
            raise LaError("conflict combination did not telescope to 0 <= c < 0")
        return self._conflict(proof, bounds)

    def _conflict(self, proof: LAProof, bounds) -> LaConflict:
        lits: list[int] = []
        for h in proof.hyps():
            if h.probe:
                continue
            lit = h.lit()
            if lit not in lits:
                lits.append(lit)
        return LaConflict(lits, proof, bounds)

    # -- disequalities --------------------------------------------------------

    def _probe(self, lin: Linear, probe_atom: int, probe_neg: bool) -> LaConflict | None:
        """Check the current state plus the strict inequality 0 < lin."""
        h = Hyp(probe_atom, probe_neg, 0, Poly.of_linear(lin, Fraction(-1)), probe=True)
        self.push()
        try:
            conflict = self._assert_hyp(h)
            if conflict is None:
                conflict = self._check_simplex()
            return conflict
        finally:
            self.pop()

    def _check_diseqs(self) -> LaConflict | None:
        for lit, lin in self.diseqs:
            atom, neg = abs(lit), lit < 0
            pos = self._probe(lin, atom, neg)
            if pos is None:
                continue
            negc = self._probe(lin.scale(Fraction(-1)), atom, neg)
            if negc is None:
                continue
            # entailed 0 = lin contradicts the disequality
            lits = [lit]
            for c in (pos, negc):
                for l in c.lits:
                    if l not in lits:
                        lits.append(l)
            proof = LAProof.comb(pos.proof, negc.proof, Fraction(1), Fraction(1))
            return LaConflict(lits, proof, pos.bounds + negc.bounds)
        return None

    def split_branches(self, lit: int, lin: Linear) -> tuple[LaConflict | None, LaConflict | None]:
        """Conflicts of the two strict branches of a disequality, if any."""
        atom, neg = abs(lit), lit < 0
        return (self._probe(lin, atom, neg),
                self._probe(lin.scale(Fraction(-1)), atom, neg))

    # -- models ---------------------------------------------------------------

    def model_delta(self) -> dict[int, Delta]:
        out = {}
        for tid, v in self.var_of_term.items():
            out[tid] = self.beta[v]
        return out

    def entailed_equality(self, t1: int, t2: int) -> list[int] | None:
        """Explanation literals if the asserted state entails t1 = t2."""
        lin = self.ctx.term_lin(t1) - self.ctx.term_lin(t2)
        if lin.is_const():
            return [] if lin.const == 0 else None
        probe_atom = 0
        pos = self._probe(lin, probe_atom, False)
        if pos is None:
            return None
        neg = self._probe(lin.scale(Fraction(-1)), probe_atom, False)
        if neg is None:
            return None
        lits: list[int] = []
        for c in (pos, neg):
            for l in c.lits:
                if l != 0 and l not in lits:
                    lits.append(l)
        return lits
