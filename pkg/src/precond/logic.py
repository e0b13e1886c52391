"""Function-free first-order logic: terms, literals, clauses and formulas.

Everything here is immutable.  A term is a variable or a constant (no
function symbols).  Equality atoms are stored over term *tuples*, so that
a tuple disequality like (X,Y) != (a,b) is a single literal and can be
eliminated in one step during resolvent simplification.  Free variables
are implicitly universally quantified everywhere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ArityError


# ---------------------------------------------------------------------------
# terms and atoms


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True, order=True)
class Const:
    name: str

    def __repr__(self):
        return self.name


Term = Var | Const


@dataclass(frozen=True)
class Rel:
    """Relational atom pred(t1, ..., tn)."""

    pred: str
    args: tuple

    def __repr__(self):
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Eq:
    """Tuple equality atom (s1,...,sn) = (t1,...,tn)."""

    left: tuple
    right: tuple

    def __post_init__(self):
        if len(self.left) != len(self.right) or not self.left:
            raise ArityError(f"malformed equality atom {self.left} = {self.right}")

    def pairs(self):
        return tuple(zip(self.left, self.right))

    def __repr__(self):
        def side(ts):
            if len(ts) == 1:
                return repr(ts[0])
            return "(" + ",".join(map(repr, ts)) + ")"

        return f"{side(self.left)} = {side(self.right)}"


Atom = Rel | Eq


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def negated(self):
        return Literal(self.atom, not self.positive)

    def __repr__(self):
        if isinstance(self.atom, Eq) and not self.positive:
            return repr(self.atom).replace(" = ", " != ")
        return repr(self.atom) if self.positive else "!" + repr(self.atom)


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals with set semantics; empty clause is falsity."""

    literals: frozenset

    def __init__(self, literals=()):
        object.__setattr__(self, "literals", frozenset(literals))

    def __iter__(self):
        return iter(self.literals)

    def __len__(self):
        return len(self.literals)

    def __repr__(self):
        if not self.literals:
            return "false"
        return " | ".join(sorted(map(repr, self.literals)))


# ---------------------------------------------------------------------------
# formulas (quantifier-free boolean combinations, implicit universal closure)


@dataclass(frozen=True)
class FAtom:
    atom: Atom


@dataclass(frozen=True)
class FNot:
    sub: "Formula"


@dataclass(frozen=True)
class FAnd:
    parts: tuple


@dataclass(frozen=True)
class FOr:
    parts: tuple


@dataclass(frozen=True)
class FClosed:
    """Universal closure of the subformula as a self-contained sentence.

    Boolean structure *between* sentences (conditional guards and their
    negations) needs this: the implicit outermost closure must not capture a
    guard's variables, and a negated guard is an existential statement.
    """

    sub: "Formula"


Formula = FAtom | FNot | FAnd | FOr | FClosed

TRUE = FAnd(())
FALSE = FOr(())


def f_and(parts):
    parts = tuple(parts)
    flat = []
    for p in parts:
        if isinstance(p, FAnd):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return FAnd(tuple(flat))


def f_or(parts):
    parts = tuple(parts)
    flat = []
    for p in parts:
        if isinstance(p, FOr):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return FOr(tuple(flat))


def f_not(f):
    if isinstance(f, FNot):
        return f.sub
    return FNot(f)


def f_implies(a, b):
    return f_or((f_not(a), b))


def literal_formula(lit):
    return FAtom(lit.atom) if lit.positive else FNot(FAtom(lit.atom))


def clause_formula(c):
    if not c.literals:
        return FALSE
    return f_or(tuple(literal_formula(l) for l in sorted(c.literals, key=repr)))


def clauses_formula(clauses):
    cs = list(clauses)
    if not cs:
        return TRUE
    return f_and(tuple(clause_formula(c) for c in sorted(cs, key=repr)))


# ---------------------------------------------------------------------------
# vocabulary helpers


def atom_terms(atom):
    if isinstance(atom, Rel):
        return atom.args
    return atom.left + atom.right


def clause_vars(c):
    return {t for lit in c for t in atom_terms(lit.atom) if isinstance(t, Var)}


def clause_consts(c):
    return {t for lit in c for t in atom_terms(lit.atom) if isinstance(t, Const)}


def formula_atoms(f):
    if isinstance(f, FAtom):
        yield f.atom
    elif isinstance(f, (FNot, FClosed)):
        yield from formula_atoms(f.sub)
    else:
        for p in f.parts:
            yield from formula_atoms(p)


def formula_vars(f):
    """Free variables; an FClosed subformula contributes none."""
    if isinstance(f, FAtom):
        return {t for t in atom_terms(f.atom) if isinstance(t, Var)}
    if isinstance(f, FNot):
        return formula_vars(f.sub)
    if isinstance(f, FClosed):
        return set()
    out = set()
    for p in f.parts:
        out |= formula_vars(p)
    return out


def close_formula(f):
    """Wrap f as a closed sentence (no-op if it has no free variables)."""
    return FClosed(f) if formula_vars(f) else f


def formula_consts(f):
    return {t for a in formula_atoms(f) for t in atom_terms(a) if isinstance(t, Const)}


def formula_preds(f):
    """Map predicate name -> arity for all relational atoms in f."""
    preds = {}
    for a in formula_atoms(f):
        if isinstance(a, Rel):
            old = preds.setdefault(a.pred, len(a.args))
            if old != len(a.args):
                raise ArityError(f"predicate {a.pred} used with arities {old} and {len(a.args)}")
    return preds


# ---------------------------------------------------------------------------
# substitutions


def subst_term(t, s):
    # substitutions are idempotent; a single lookup is deliberate
    if isinstance(t, Var):
        return s.get(t, t)
    return t


def subst_atom(atom, s):
    if isinstance(atom, Rel):
        return Rel(atom.pred, tuple(subst_term(t, s) for t in atom.args))
    return Eq(tuple(subst_term(t, s) for t in atom.left),
              tuple(subst_term(t, s) for t in atom.right))


def subst_literal(lit, s):
    return Literal(subst_atom(lit.atom, s), lit.positive)


def apply_substitution(c, s):
    """Apply a substitution to a clause; duplicates collapse (set semantics)."""
    return Clause(subst_literal(l, s) for l in c)


def subst_formula(f, s):
    if isinstance(f, FAtom):
        return FAtom(subst_atom(f.atom, s))
    if isinstance(f, FNot):
        return FNot(subst_formula(f.sub, s))
    if isinstance(f, FClosed):
        return FClosed(subst_formula(f.sub, s))
    if isinstance(f, FAnd):
        return FAnd(tuple(subst_formula(p, s) for p in f.parts))
    return FOr(tuple(subst_formula(p, s) for p in f.parts))


def mgu(a1, a2):
    """Most general unifier of two relational atoms, or None.

    The result is idempotent and never maps a variable to itself.  Only
    variable/constant terms exist, so there is no occurs check.
    """
    if not (isinstance(a1, Rel) and isinstance(a2, Rel)):
        return None
    if a1.pred != a2.pred or len(a1.args) != len(a2.args):
        return None
    s = {}

    def find(t):
        while isinstance(t, Var) and t in s:
            t = s[t]
        return t

    for x, y in zip(a1.args, a2.args):
        x, y = find(x), find(y)
        if x == y:
            continue
        if isinstance(x, Var):
            s[x] = y
        elif isinstance(y, Var):
            s[y] = x
        else:
            return None
    return {v: find(t) for v, t in s.items()}


# ---------------------------------------------------------------------------
# renaming and canonical forms


def rename_apart(c, taken):
    """Rename the variables of c away from `taken`, appending prime marks."""
    ren = {}
    names = set(taken)
    for v in sorted(clause_vars(c)):
        if v.name in names:
            new = v.name
            while new in names:
                new += "'"
            ren[v] = Var(new)
            names.add(new)
        else:
            names.add(v.name)
    return apply_substitution(c, ren) if ren else c


def _literal_skeleton(lit):
    def tkey(t):
        return ("c", t.name) if isinstance(t, Const) else ("v",)

    if isinstance(lit.atom, Rel):
        return ("r", lit.atom.pred, lit.positive, tuple(tkey(t) for t in lit.atom.args))
    return ("e", lit.positive,
            tuple(tkey(t) for t in lit.atom.left),
            tuple(tkey(t) for t in lit.atom.right))


def canonical_clause(c):
    """A renaming-invariant key: literals sorted, variables numbered in
    first-occurrence order.  Tied literal groups are resolved by trying
    their permutations and keeping the lexicographically least key."""
    lits = sorted(c.literals, key=_literal_skeleton)
    groups = []
    for _, grp in itertools.groupby(lits, key=_literal_skeleton):
        groups.append(list(grp))

    def key_for(order):
        ren = {}

        def tname(t):
            if isinstance(t, Const):
                return t.name
            if t not in ren:
                ren[t] = f"V{len(ren)}"
            return ren[t]

        out = []
        for lit in order:
            if isinstance(lit.atom, Rel):
                out.append((lit.atom.pred, lit.positive,
                            tuple(tname(t) for t in lit.atom.args)))
            else:
                out.append(("=", lit.positive,
                            tuple(tname(t) for t in lit.atom.left),
                            tuple(tname(t) for t in lit.atom.right)))
        return tuple(out)

    # permute only within tied groups, capped to keep this cheap
    choices = []
    for g in groups:
        if 1 < len(g) <= 5:
            choices.append(list(itertools.permutations(g)))
        else:
            choices.append([tuple(g)])
    best = None
    for combo in itertools.product(*choices):
        order = [lit for grp in combo for lit in grp]
        k = key_for(order)
        if best is None or k < best:
            best = k
    return best


def dedup_clauses(clauses):
    """Remove duplicates modulo variable renaming, preserving order."""
    seen = set()
    out = []
    for c in clauses:
        k = canonical_clause(c)
        if k not in seen:
            seen.add(k)
            out.append(c)
    return out


# ---------------------------------------------------------------------------
# (dis)equality simplification


def _ground_true(lit):
    """True iff the literal is a valid ground (dis)equality disjunct."""
    if not isinstance(lit.atom, Eq):
        return False
    if lit.positive:
        return all(l == r for l, r in lit.atom.pairs())
    return any(isinstance(l, Const) and isinstance(r, Const) and l != r
               for l, r in lit.atom.pairs())


def simplify_disequalities(c):
    """Eliminate (dis)equality literals from a clause, preserving equivalence.

    A disequality component X != a (X a variable, a a constant) is removed by
    substituting a for X throughout the clause; this is the resolvent
    simplification step of the rewriting system.  False ground components
    (a != a, and a = b as a whole) are dropped; true ground components are
    kept so the clause remains recognizable as a tautology.
    """
    lits = set(c.literals)
    while True:
        action = None
        for lit in lits:
            if not isinstance(lit.atom, Eq):
                continue
            pairs = lit.atom.pairs()
            if lit.positive:
                # conjunctive semantics: any false component kills the literal
                if any(isinstance(l, Const) and isinstance(r, Const) and l != r
                       for l, r in pairs):
                    action = ("drop", lit)
                    break
                kept = [(l, r) for l, r in pairs if l != r]
                if len(kept) != len(pairs):
                    if kept:
                        repl = Literal(Eq(tuple(l for l, _ in kept),
                                          tuple(r for _, r in kept)), True)
                    else:
                        t = pairs[0][0]
                        repl = Literal(Eq((t,), (t,)), True)
                    if repl != lit:
                        action = ("replace", lit, repl)
                        break
            else:
                if _ground_true(lit):
                    l, r = next((l, r) for l, r in pairs
                                if isinstance(l, Const) and isinstance(r, Const) and l != r)
                    repl = Literal(Eq((l,), (r,)), False)
                    if repl != lit:
                        action = ("replace", lit, repl)
                        break
                    continue
                kept = [(l, r) for l, r in pairs if l != r]
                if len(kept) != len(pairs):
                    if kept:
                        repl = Literal(Eq(tuple(l for l, _ in kept),
                                          tuple(r for _, r in kept)), False)
                        action = ("replace", lit, repl)
                    else:
                        action = ("drop", lit)
                    break
                binding = None
                for l, r in pairs:
                    if isinstance(l, Var) and isinstance(r, Const):
                        binding = (l, r)
                        break
                    if isinstance(r, Var) and isinstance(l, Const):
                        binding = (r, l)
                        break
                if binding is not None:
                    rest = [(l, r) for l, r in pairs if (l, r) != (binding[0], binding[1])
                            and (l, r) != (binding[1], binding[0])]
                    action = ("bind", lit, binding, rest)
                    break
        if action is None:
            return Clause(lits)
        if action[0] == "drop":
            lits.discard(action[1])
        elif action[0] == "replace":
            lits.discard(action[1])
            lits.add(action[2])
        else:
            _, lit, (v, const), rest = action
            lits.discard(lit)
            if rest:
                lits.add(Literal(Eq(tuple(l for l, _ in rest),
                                    tuple(r for _, r in rest)), False))
            s = {v: const}
            lits = {subst_literal(l, s) for l in lits}


def is_tautology(c):
    """A clause is a tautology if it has a complementary pair on identical
    atoms or a valid ground (dis)equality disjunct like a = a."""
    for lit in c:
        if _ground_true(lit):
            return True
        if lit.negated() in c.literals:
            return True
    return False


# ---------------------------------------------------------------------------
# resolution


def binary_resolvents_on(c1, c2, r):
    """All simplified binary resolvents of c1 and c2 over predicate r.

    c2 is renamed apart internally; both orientations (positive literal in
    either clause) are considered.  Each resolvent goes through
    simplify_disequalities before being returned.
    """
    taken = {v.name for v in clause_vars(c1)}
    c2 = rename_apart(c2, taken)
    out = []
    for l1 in c1:
        if not (isinstance(l1.atom, Rel) and l1.atom.pred == r):
            continue
        for l2 in c2:
            if not (isinstance(l2.atom, Rel) and l2.atom.pred == r):
                continue
            if l1.positive == l2.positive:
                continue
            s = mgu(l1.atom, l2.atom)
            if s is None:
                continue
            rest = (c1.literals - {l1}) | (c2.literals - {l2})
            resolvent = apply_substitution(Clause(rest), s)
            out.append(simplify_disequalities(resolvent))
    return dedup_clauses(out)


def res_r(clauses, r):
    """The set of simplified binary resolvents over r of all pairs from the
    given set, including a clause with a renamed copy of itself."""
    cs = list(clauses)
    out = []
    for i, c1 in enumerate(cs):
        for c2 in cs[i:]:
            out.extend(binary_resolvents_on(c1, c2, r))
    return dedup_clauses(out)


# ---------------------------------------------------------------------------
# theta-subsumption


def theta_subsumes(c1, c2):
    """True iff some substitution maps the literal set of c1 into c2."""
    lits1 = sorted(c1.literals, key=repr)
    lits2 = list(c2.literals)

    def match_terms(s, ts1, ts2):
        s = dict(s)
        for t1, t2 in zip(ts1, ts2):
            t1 = subst_term(t1, s)
            if isinstance(t1, Const):
                if t1 != t2:
                    return None
            elif t1 in s:
                if s[t1] != t2:
                    return None
            else:
                s[t1] = t2
        return s

    def match_lit(s, l1, l2):
        if l1.positive != l2.positive:
            return None
        a1, a2 = l1.atom, l2.atom
        if isinstance(a1, Rel) and isinstance(a2, Rel):
            if a1.pred != a2.pred or len(a1.args) != len(a2.args):
                return None
            return match_terms(s, a1.args, a2.args)
        if isinstance(a1, Eq) and isinstance(a2, Eq):
            if len(a1.left) != len(a2.left):
                return None
            s2 = match_terms(s, a1.left, a2.left)
            if s2 is None:
                return None
            return match_terms(s2, a1.right, a2.right)
        return None

    def solve(i, s):
        if i == len(lits1):
            return True
        for l2 in lits2:
            s2 = match_lit(s, lits1[i], l2)
            if s2 is not None and solve(i + 1, s2):
                return True
        return False

    return solve(0, {})


# ---------------------------------------------------------------------------
# normal forms


def _subsumption_minimize(clauses):
    out = []
    for i, c in enumerate(clauses):
        redundant = False
        for j, d in enumerate(clauses):
            if i == j:
                continue
            if d.literals < c.literals or (d.literals == c.literals and j < i):
                redundant = True
                break
        if not redundant:
            out.append(c)
    return out


def to_clauses(f):
    """CNF clause set equivalent to f (tautologies pruned, duplicates and
    strict superset clauses removed)."""

    def cnf(f, positive):
        if isinstance(f, FAtom):
            return [Clause([Literal(f.atom, positive)])]
        if isinstance(f, FNot):
            return cnf(f.sub, not positive)
        if isinstance(f, FClosed):
            if not positive:
                from .errors import UnsupportedError
                raise UnsupportedError(
                    "negated universal sentence (an existential) cannot be "
                    "put in clausal form")
            return cnf(f.sub, True)
        parts = f.parts
        conj = isinstance(f, FAnd) if positive else isinstance(f, FOr)
        if conj:
            out = []
            for p in parts:
                out.extend(cnf(p, positive))
            return out
        # disjunction of CNFs: distribute
        result = [Clause()]
        for p in parts:
            pcs = cnf(p, positive)
            result = [Clause(a.literals | b.literals) for a in result for b in pcs]
            result = dedup_clauses(c for c in result if not is_tautology(c))
            if not result:
                # the disjunction is already valid
                return []
        return result

    clauses = dedup_clauses(c for c in cnf(f, True) if not is_tautology(c))
    return _subsumption_minimize(clauses)


def to_dnf(f):
    """List of literal conjunctions whose disjunction is equivalent to f."""

    def contradictory(lits):
        s = set(lits)
        return any(l.negated() in s for l in s)

    def dnf(f, positive):
        if isinstance(f, FAtom):
            return [(Literal(f.atom, positive),)]
        if isinstance(f, FNot):
            return dnf(f.sub, not positive)
        if isinstance(f, FClosed):
            from .errors import UnsupportedError
            raise UnsupportedError("quantified subformula has no literal DNF")
        parts = f.parts
        disj = isinstance(f, FOr) if positive else isinstance(f, FAnd)
        if disj:
            out = []
            for p in parts:
                out.extend(dnf(p, positive))
            return out
        result = [()]
        for p in parts:
            pds = dnf(p, positive)
            result = [tuple(dict.fromkeys(a + b)) for a in result for b in pds]
            result = [c for c in result if not contradictory(c)]
            if not result:
                return []
        return result

    conjs = [c for c in dnf(f, True) if not contradictory(c)]
    # dedup and drop conjunctions that strictly extend another one
    seen = set()
    uniq = []
    for c in conjs:
        k = frozenset(c)
        if k not in seen:
            seen.add(k)
            uniq.append(c)
    out = []
    for i, c in enumerate(uniq):
        ci = frozenset(c)
        if not any(frozenset(d) < ci or (frozenset(d) == ci and j < i)
                   for j, d in enumerate(uniq) if j != i):
            out.append(list(c))
    return out
