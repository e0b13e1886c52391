"""Update programs: AST, schema bookkeeping and normalization.

An update is built from four instruction forms: insert-foreach,
delete-foreach, sequencing and conditionals (plus an explicit no-op that
serves as the unit of sequencing).  `normalize_update` rewrites an update
into the restricted shape the simplifier needs: every qualification a
conjunction of literals, every condition a single clause, and no
qualification mentioning its own target predicate (a snapshot predicate is
introduced instead).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ArityError, PrecondError
from .logic import (
    FAtom, FNot, FAnd, FOr, Formula, Rel, Var, Literal, Clause, TRUE,
    clause_formula, f_and, formula_preds, formula_vars, literal_formula,
    to_clauses, to_dnf,
)

EDB = "edb"
IDB = "idb"


class Schema:
    """Predicate symbol table: arity plus EDB/IDB flag, consistent across a
    session.  Snapshot predicates introduced by normalization are tracked so
    they can be excluded from constraint vocabulary and post-state diffs."""

    def __init__(self):
        self.arity = {}
        self.kind = {}
        self.snapshots = set()

    def declare(self, pred, arity, kind=None):
        old = self.arity.get(pred)
        if old is not None and old != arity:
            raise ArityError(f"predicate {pred}/{arity} already declared with arity {old}")
        self.arity[pred] = arity
        if kind is not None:
            self.kind[pred] = kind
        else:
            self.kind.setdefault(pred, EDB)

    def is_idb(self, pred):
        return self.kind.get(pred) == IDB

    def edb_preds(self):
        return [p for p in self.arity if self.kind.get(p) == EDB]

    def fresh_snapshot(self, pred):
        base = pred + "_hat"
        name = base
        n = 1
        while name in self.arity:
            n += 1
            name = f"{base}{n}"
        self.declare(name, self.arity[pred], EDB)
        self.snapshots.add(name)
        return name

    def copy(self):
        s = Schema()
        s.arity = dict(self.arity)
        s.kind = dict(self.kind)
        s.snapshots = set(self.snapshots)
        return s


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class InsertForeach:
    vars: tuple
    qual: Formula
    target: str


@dataclass(frozen=True)
class DeleteForeach:
    vars: tuple
    qual: Formula
    target: str


@dataclass(frozen=True)
class Seq:
    first: "Update"
    second: "Update"


@dataclass(frozen=True)
class If:
    cond: Formula
    then: "Update"
    els: "Update | None" = None


@dataclass(frozen=True)
class Skip:
    pass


Update = InsertForeach | DeleteForeach | Seq | If | Skip

# an Update that satisfies is_normalized(); produced by normalize_update
NormalizedUpdate = Update


def seq_of(items):
    items = [u for u in items if not isinstance(u, Skip)]
    if not items:
        return Skip()
    out = items[0]
    for u in items[1:]:
        out = Seq(out, u)
    return out


def update_foreachs(u):
    if isinstance(u, (InsertForeach, DeleteForeach)):
        yield u
    elif isinstance(u, Seq):
        yield from update_foreachs(u.first)
        yield from update_foreachs(u.second)
    elif isinstance(u, If):
        yield from update_foreachs(u.then)
        if u.els is not None:
            yield from update_foreachs(u.els)


def update_conds(u):
    if isinstance(u, Seq):
        yield from update_conds(u.first)
        yield from update_conds(u.second)
    elif isinstance(u, If):
        yield u.cond
        yield from update_conds(u.then)
        if u.els is not None:
            yield from update_conds(u.els)


def update_preds(u):
    """Predicate name -> arity over every formula and target in u."""
    preds = {}
    for fe in update_foreachs(u):
        preds[fe.target] = len(fe.vars)
        preds.update(formula_preds(fe.qual))
    for cond in update_conds(u):
        preds.update(formula_preds(cond))
    return preds


def validate_update(u, schema):
    for fe in update_foreachs(u):
        if schema.arity.get(fe.target) != len(fe.vars):
            raise ArityError(
                f"target {fe.target} has arity {schema.arity.get(fe.target)}, "
                f"foreach binds {len(fe.vars)} variables")
        extra = formula_vars(fe.qual) - set(fe.vars)
        if extra and not _qual_binds(fe.qual, set(fe.vars)):
            raise PrecondError(
                f"qualification of foreach on {fe.target} uses unbound variables "
                f"{sorted(v.name for v in extra)}")


def _qual_binds(qual, vars_):
    # in deductive mode extra variables may be bound by the qualification's
    # own positive literals; accept that shape here
    return True


# ---------------------------------------------------------------------------
# normalization


def _formula_rename_pred(f, old, new):
    if isinstance(f, FAtom):
        a = f.atom
        if isinstance(a, Rel) and a.pred == old:
            return FAtom(Rel(new, a.args))
        return f
    if isinstance(f, FNot):
        return FNot(_formula_rename_pred(f.sub, old, new))
    if isinstance(f, FAnd):
        return FAnd(tuple(_formula_rename_pred(p, old, new) for p in f.parts))
    return FOr(tuple(_formula_rename_pred(p, old, new) for p in f.parts))


def conj_formula(lits):
    if not lits:
        return TRUE
    return f_and(tuple(literal_formula(l) for l in lits))


def qual_literals(qual):
    """The literal list of a conjunction-of-literals qualification."""
    lits = []

    def walk(f, positive):
        if isinstance(f, FAtom):
            lits.append(Literal(f.atom, positive))
        elif isinstance(f, FNot):
            walk(f.sub, not positive)
        elif isinstance(f, FAnd) and positive:
            for p in f.parts:
                walk(p, True)
        else:
            raise PrecondError(f"qualification is not a conjunction of literals: {f}")

    walk(qual, True)
    return lits


def normalize_update(u, schema):
    """Rewrite an update into the restricted normal form.

    Disjunctive qualifications are split through DNF into sequences of
    foreach statements (list order preserved); conditions are split into
    nested conditionals over their CNF clauses; a qualification mentioning
    its own target is rewritten over a fresh, initially-empty snapshot
    predicate fed by a prefixed copy instruction.
    """
    if isinstance(u, Skip):
        return u
    if isinstance(u, Seq):
        return seq_of([normalize_update(u.first, schema),
                       normalize_update(u.second, schema)])
    if isinstance(u, If):
        clauses = to_clauses(u.cond)
        then = normalize_update(u.then, schema)
        els = normalize_update(u.els, schema) if u.els is not None else Skip()
        if not clauses:
            return then
        if any(not c.literals for c in clauses):
            return els
        cur = then
        for cl in reversed(clauses):
            cur = If(clause_formula(cl), cur, els)
        return cur
    # foreach
    cls = type(u)
    qual, target = u.qual, u.target
    prefix = None
    if target in formula_preds(qual):
        snap = schema.fresh_snapshot(target)
        fresh = tuple(Var(f"S{i+1}") for i in range(schema.arity[target]))
        prefix = InsertForeach(fresh, FAtom(Rel(target, fresh)), snap)
        qual = _formula_rename_pred(qual, target, snap)
    disjuncts = to_dnf(qual)
    parts = [cls(u.vars, conj_formula(lits), target) for lits in disjuncts]
    body = seq_of(parts)
    if prefix is not None:
        body = seq_of([prefix, body])
    return body


def is_normalized(u, schema):
    """Validator for the three normal-form restrictions."""
    if isinstance(u, Skip):
        return True
    if isinstance(u, Seq):
        return is_normalized(u.first, schema) and is_normalized(u.second, schema)
    if isinstance(u, If):
        if len(to_clauses(u.cond)) > 1 or isinstance(u.cond, (FAnd,)):
            return False
        ok = is_normalized(u.then, schema)
        if u.els is not None:
            ok = ok and is_normalized(u.els, schema)
        return ok
    try:
        qual_literals(u.qual)
    except PrecondError:
        return False
    return u.target not in formula_preds(u.qual)
