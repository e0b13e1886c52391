"""Ground truth: concrete update execution, active-domain evaluation,
brute-force equivalence checking and seeded case generation.

The enumeration oracle is bit-parallel: a "truth vector" is a Python int
with one bit per database in the instance space, so a formula is evaluated
on every database of the space at once with bigint boolean operations.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .errors import PrecondError
from .logic import (
    Clause, Const, Eq, FAnd, FAtom, FClosed, FNot, FOr, Formula, Literal,
    Rel, Var, clause_formula, f_and, f_not, f_or, formula_consts,
    formula_preds, formula_vars,
)
from .datalog import Database
from .updates import (
    DeleteForeach, If, InsertForeach, Schema, Seq, Skip, Update,
    update_conds, update_foreachs, update_preds,
)


# ---------------------------------------------------------------------------
# single-database evaluation


def _resolve(term, env):
    if isinstance(term, Const):
        return term.name
    return env[term]


def _eval_qf(f, b, env, domain):
    if isinstance(f, FAtom):
        a = f.atom
        if isinstance(a, Rel):
            return tuple(_resolve(t, env) for t in a.args) in b.get(a.pred)
        return all(_resolve(l, env) == _resolve(r, env) for l, r in a.pairs())
    if isinstance(f, FNot):
        return not _eval_qf(f.sub, b, env, domain)
    if isinstance(f, FClosed):
        # closes *all* free variables of its body, shadowing outer bindings
        free = sorted(formula_vars(f.sub))
        for values in itertools.product(domain, repeat=len(free)):
            e = dict(env)
            e.update(zip(free, values))
            if not _eval_qf(f.sub, b, e, domain):
                return False
        return True
    if isinstance(f, FAnd):
        return all(_eval_qf(p, b, env, domain) for p in f.parts)
    return any(_eval_qf(p, b, env, domain) for p in f.parts)


def sentence_domain(f, b):
    return sorted(b.active_domain() | {c.name for c in formula_consts(f)})


def eval_sentence(f, b, domain=None):
    """Universal closure of f evaluated on b, variables ranging over the
    active domain (constants of b plus constants of f) unless a domain is
    given explicitly."""
    if domain is None:
        domain = sentence_domain(f, b)
    free = sorted(formula_vars(f))
    if not free:
        return _eval_qf(f, b, {}, domain)
    for values in itertools.product(domain, repeat=len(free)):
        if not _eval_qf(f, b, dict(zip(free, values)), domain):
            return False
    return True


def eval_formula(f, b, env, domain):
    """Like eval_sentence but with some variables pre-bound by env."""
    free = sorted(formula_vars(f) - set(env))
    if not free:
        return _eval_qf(f, b, env, domain)
    for values in itertools.product(domain, repeat=len(free)):
        e = dict(env)
        e.update(zip(free, values))
        if not _eval_qf(f, b, e, domain):
            return False
    return True


# ---------------------------------------------------------------------------
# update execution


def update_domain(u, b):
    consts = set()
    for fe in update_foreachs(u):
        consts |= {c.name for c in formula_consts(fe.qual)}
    for cond in update_conds(u):
        consts |= {c.name for c in formula_consts(cond)}
    return sorted(b.active_domain() | consts)


def exec_update(u, b, domain=None):
    """The concrete semantics of an update: qualifications and conditions are
    evaluated wholly on the pre-state of each instruction."""
    if domain is None:
        domain = update_domain(u, b)
    if isinstance(u, Skip):
        return b
    if isinstance(u, Seq):
        return exec_update(u.second, exec_update(u.first, b, domain), domain)
    if isinstance(u, If):
        if eval_sentence(u.cond, b, domain):
            return exec_update(u.then, b, domain)
        if u.els is None:
            return b
        return exec_update(u.els, b, domain)
    selected = {
        tup for tup in itertools.product(domain, repeat=len(u.vars))
        if eval_formula(u.qual, b, dict(zip(u.vars, tup)), domain)
    }
    current = b.get(u.target)
    if isinstance(u, InsertForeach):
        return b.with_relation(u.target, current | selected)
    return b.with_relation(u.target, current - selected)


# ---------------------------------------------------------------------------
# bit-parallel instance space


class InstanceSpace:
    """All databases over the given relations and constants.

    Database number i contains cell number j iff bit j of i is set.  A truth
    vector is an int whose bit i gives a formula's value on database i.
    """

    def __init__(self, rel_arities, constants, max_instances=2 ** 24):
        self.rel_arities = dict(rel_arities)
        self.constants = list(constants)
        self.cells = []
        for pred in sorted(self.rel_arities):
            for tup in itertools.product(self.constants,
                                         repeat=self.rel_arities[pred]):
                self.cells.append((pred, tup))
        n = len(self.cells)
        if (1 << n) > max_instances:
            raise PrecondError(
                f"instance space of 2^{n} databases exceeds the cap of "
                f"{max_instances} instances")
        self.index = {cell: i for i, cell in enumerate(self.cells)}
        self.count = 1 << n
        self.full = (1 << self.count) - 1
        self._cols = {}

    def column(self, pred, tup):
        """Truth vector of 'cell present' across all databases."""
        i = self.index.get((pred, tup))
        if i is None:
            return 0
        col = self._cols.get(i)
        if col is None:
            block = 1 << i
            unit = ((1 << block) - 1) << block
            period = block << 1
            reps = self.count // period
            col = unit * (((1 << (period * reps)) - 1) // ((1 << period) - 1))
            self._cols[i] = col
        return col

    def initial_state(self, extra_preds=()):
        """pred -> tuple -> truth vector for the pre-state of every database.
        extra_preds (name -> arity) get all-empty columns."""
        state = {}
        for pred, arity in self.rel_arities.items():
            state[pred] = {tup: self.column(pred, tup)
                           for tup in itertools.product(self.constants, repeat=arity)}
        for pred, arity in dict(extra_preds).items():
            if pred not in state:
                state[pred] = {tup: 0
                               for tup in itertools.product(self.constants, repeat=arity)}
        return state

    def database(self, i):
        rels = {pred: set() for pred in self.rel_arities}
        for j, (pred, tup) in enumerate(self.cells):
            if (i >> j) & 1:
                rels[pred].add(tup)
        return Database({p: frozenset(ts) for p, ts in rels.items()})


def eval_masked(space, f, state, env=None):
    """Truth vector of the universal closure of f over the whole space."""
    env = env or {}
    free = sorted(formula_vars(f) - set(env))

    def ev(f, e):
        if isinstance(f, FAtom):
            a = f.atom
            if isinstance(a, Rel):
                tup = tuple(_resolve(t, e) for t in a.args)
                cols = state.get(a.pred)
                if cols is None:
                    return 0
                return cols.get(tup, 0)
            ok = all(_resolve(l, e) == _resolve(r, e) for l, r in a.pairs())
            return space.full if ok else 0
        if isinstance(f, FNot):
            return space.full ^ ev(f.sub, e)
        if isinstance(f, FClosed):
            sub_free = sorted(formula_vars(f.sub))  # shadows outer bindings
            acc = space.full
            for values in itertools.product(space.constants, repeat=len(sub_free)):
                e2 = dict(e)
                e2.update(zip(sub_free, values))
                acc &= ev(f.sub, e2)
                if acc == 0:
                    break
            return acc
        if isinstance(f, FAnd):
            acc = space.full
            for p in f.parts:
                acc &= ev(p, e)
                if acc == 0:
                    break
            return acc
        acc = 0
        for p in f.parts:
            acc |= ev(p, e)
            if acc == space.full:
                break
        return acc

    acc = space.full
    for values in itertools.product(space.constants, repeat=len(free)):
        e = dict(env)
        e.update(zip(free, values))
        acc &= ev(f, e)
        if acc == 0:
            break
    return acc


def exec_masked(space, u, state):
    """Post-state columns after running u on every database of the space."""
    if isinstance(u, Skip):
        return state
    if isinstance(u, Seq):
        return exec_masked(space, u.second, exec_masked(space, u.first, state))
    if isinstance(u, If):
        cvec = eval_masked(space, u.cond, state)
        then_state = exec_masked(space, u.then, state)
        els_state = exec_masked(space, u.els, state) if u.els is not None else state
        merged = {}
        notc = space.full ^ cvec
        for pred in then_state:
            merged[pred] = {
                tup: (cvec & then_state[pred][tup]) | (notc & els_state[pred][tup])
                for tup in then_state[pred]
            }
        return merged
    # foreach: all qualifications evaluate on the pre-state
    qvecs = {
        tup: eval_masked(space, u.qual, state, dict(zip(u.vars, tup)))
        for tup in itertools.product(space.constants, repeat=len(u.vars))
    }
    new_state = {pred: dict(cols) for pred, cols in state.items()}
    target = new_state.setdefault(u.target, {tup: 0 for tup in qvecs})
    for tup, qvec in qvecs.items():
        if isinstance(u, InsertForeach):
            target[tup] = target.get(tup, 0) | qvec
        else:
            target[tup] = target.get(tup, 0) & (space.full ^ qvec)
    return new_state


# ---------------------------------------------------------------------------
# brute-force equivalence


@dataclass(frozen=True)
class Verdict:
    equivalent: bool
    counterexample: Database | None = None

    def __bool__(self):
        return self.equivalent


def _fresh_constants(taken, n):
    out = []
    i = 0
    while len(out) < n:
        i += 1
        name = f"u{i}"
        if name not in taken:
            out.append(name)
    return out


def formula_vocabulary(*formulas):
    rels = {}
    consts = set()
    for f in formulas:
        for pred, arity in formula_preds(f).items():
            old = rels.setdefault(pred, arity)
            if old != arity:
                raise PrecondError(f"predicate {pred} used with arities {old} and {arity}")
        consts |= {c.name for c in formula_consts(f)}
    return rels, consts


def equiv_bruteforce(f, g, extra_constants=1, max_instances=2 ** 24):
    """Enumerate every database over the mentioned constants plus fresh ones,
    asserting that f and g agree; returns the first disagreeing instance
    otherwise."""
    rels, consts = formula_vocabulary(f, g)
    constants = sorted(consts) + _fresh_constants(consts, extra_constants)
    if not constants:
        constants = _fresh_constants(consts, 1)
    space = InstanceSpace(rels, constants, max_instances)
    state = space.initial_state()
    vf = eval_masked(space, f, state)
    vg = eval_masked(space, g, state)
    diff = vf ^ vg
    if diff == 0:
        return Verdict(True)
    return Verdict(False, space.database(_lowest_bit(diff)))


def _lowest_bit(x):
    return (x & -x).bit_length() - 1


def holds_everywhere(space, vec):
    return vec == space.full


# ---------------------------------------------------------------------------
# seeded case generation


@dataclass(frozen=True)
class GenConfig:
    domain_size: int = 3
    relations: tuple = (("p", 1), ("s", 1), ("r", 2))
    max_depth: int = 3
    seed: int = 0


_VARS = [Var(n) for n in ("X", "Y", "Z")]


def _gen_literal(rng, rels, vars_, allow_eq=True, consts=()):
    kind = rng.random()
    if allow_eq and kind < 0.2 and vars_:
        v = rng.choice(vars_)
        c = Const(rng.choice(consts))
        return Literal(Eq((v,), (c,)), rng.random() < 0.5)
    pred, arity = rng.choice(rels)
    args = tuple(
        rng.choice(vars_) if (vars_ and rng.random() < 0.75) else Const(rng.choice(consts))
        for _ in range(arity))
    return Literal(Rel(pred, args), rng.random() < 0.5)


def _gen_clause(rng, rels, consts, max_lits=3):
    from .logic import is_tautology

    while True:
        n = rng.randint(1, max_lits)
        vars_ = _VARS[:rng.randint(1, 3)]
        cl = Clause([_gen_literal(rng, rels, vars_, allow_eq=False, consts=consts)
                     for _ in range(n)])
        if not is_tautology(cl):
            return cl


def _gen_qual(rng, rels, vars_, target, consts):
    # qualifications avoid their own target so the bulk corpus stays in the
    # no-snapshot fragment; the snapshot path has dedicated tests
    usable = [(p, a) for p, a in rels if p != target]
    lits = []
    for _ in range(rng.randint(1, 2)):
        if rng.random() < 0.3 and vars_:
            lits.append(Literal(Eq(tuple(vars_),
                                   tuple(Const(rng.choice(consts)) for _ in vars_)),
                                True))
        else:
            lit = _gen_literal(rng, usable, list(vars_), allow_eq=False, consts=consts)
            if not lit.positive and rng.random() < 0.5:
                lit = Literal(lit.atom, True)
            lits.append(lit)
    return f_and(tuple(FAtom(l.atom) if l.positive else FNot(FAtom(l.atom))
                       for l in lits))


def _gen_update(rng, rels, consts, depth):
    if depth <= 1 or rng.random() < 0.45:
        target, arity = rng.choice(rels)
        vars_ = tuple(Var(f"X{i+1}") for i in range(arity))
        qual = _gen_qual(rng, rels, vars_, target, consts)
        cls = InsertForeach if rng.random() < 0.5 else DeleteForeach
        return cls(vars_, qual, target)
    if rng.random() < 0.5:
        return Seq(_gen_update(rng, rels, consts, depth - 1),
                   _gen_update(rng, rels, consts, depth - 1))
    cond = clause_formula(_gen_clause(rng, rels, consts, max_lits=2))
    els = _gen_update(rng, rels, consts, depth - 1) if rng.random() < 0.5 else None
    return If(cond, _gen_update(rng, rels, consts, depth - 1), els)


def generate_case(cfg):
    """Seed-deterministic (database, update, constraint) triple within the
    normalization restrictions."""
    rng = random.Random(cfg.seed)
    consts = [chr(ord("a") + i) for i in range(cfg.domain_size)]
    rels = list(cfg.relations)
    relations = {}
    for pred, arity in rels:
        tuples = {tup for tup in itertools.product(consts, repeat=arity)
                  if rng.random() < 0.35}
        relations[pred] = frozenset(tuples)
    b = Database(relations)
    u = _gen_update(rng, rels, consts, cfg.max_depth)
    c = clause_formula(_gen_clause(rng, rels, consts))
    return b, u, c


def case_schema(cfg):
    schema = Schema()
    for pred, arity in cfg.relations:
        schema.declare(pred, arity)
    return schema
