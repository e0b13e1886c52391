"""Datalog(not) programs: dependency analysis, stratification and bottom-up
semi-naive evaluation.

Facts are tuples of constant names (plain strings).  Rules are function-free
Horn clauses, optionally with negated body literals (stratified) and scalar
equality literals, which are checked after grounding.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NonStratifiableError, PrecondError
from .logic import Const, Eq, Literal, Rel, Var
from .updates import EDB, IDB, Schema


@dataclass(frozen=True)
class Rule:
    head: Rel
    body: tuple

    def __repr__(self):
        if not self.body:
            return f"{self.head!r}."
        return f"{self.head!r} :- {', '.join(map(repr, self.body))}."


@dataclass(frozen=True)
class Database:
    """Finite named relations of constant tuples; doubles as the fixpoint
    interpretation returned by evaluate."""

    relations: dict

    def get(self, pred):
        return self.relations.get(pred, frozenset())

    def active_domain(self):
        return {c for ts in self.relations.values() for t in ts for c in t}

    def with_relation(self, pred, tuples):
        rels = dict(self.relations)
        rels[pred] = frozenset(tuples)
        return Database(rels)

    def restrict(self, preds):
        return Database({p: ts for p, ts in self.relations.items() if p in preds})

    def __eq__(self, other):
        if not isinstance(other, Database):
            return NotImplemented
        preds = set(self.relations) | set(other.relations)
        return all(self.get(p) == other.get(p) for p in preds)

    def __hash__(self):
        return hash(frozenset((p, ts) for p, ts in self.relations.items() if ts))


Interpretation = Database


class DatalogProgram:
    def __init__(self, rules, schema=None):
        self.rules = list(rules)
        self.schema = schema if schema is not None else Schema()
        for r in self.rules:
            self.schema.declare(r.head.pred, len(r.head.args), IDB)
            for lit in r.body:
                if isinstance(lit.atom, Rel):
                    self.schema.declare(lit.atom.pred, len(lit.atom.args))
        self._check_safety()
        self._strata = None  # filled lazily; rules are immutable after init

    def _check_safety(self):
        for r in self.rules:
            pos = {t for lit in r.body if lit.positive and isinstance(lit.atom, Rel)
                   for t in lit.atom.args if isinstance(t, Var)}
            need = {t for t in r.head.args if isinstance(t, Var)}
            for lit in r.body:
                if isinstance(lit.atom, Eq) or not lit.positive:
                    for t in (lit.atom.args if isinstance(lit.atom, Rel)
                              else lit.atom.left + lit.atom.right):
                        if isinstance(t, Var):
                            need.add(t)
            missing = need - pos
            if missing:
                raise PrecondError(
                    f"unsafe rule {r!r}: variables {sorted(v.name for v in missing)} "
                    "do not occur in a positive relational body literal")

    def idb_preds(self):
        return {r.head.pred for r in self.rules} | {
            p for p, k in self.schema.kind.items() if k == IDB}

    def extended(self, new_rules):
        p = DatalogProgram(self.rules + list(new_rules), self.schema.copy())
        return p

    def direct_deps(self):
        deps = {}
        for r in self.rules:
            s = deps.setdefault(r.head.pred, set())
            for lit in r.body:
                if isinstance(lit.atom, Rel):
                    s.add(lit.atom.pred)
        return deps


def depends(p, q, r):
    """True iff q depends on r in p: q = r, or r occurs in the body of a rule
    defining q, transitively."""
    for sym in (q, r):
        if sym not in p.schema.arity:
            raise PrecondError(f"undeclared predicate {sym}")
    if q == r:
        return True
    deps = p.direct_deps()
    seen = set()
    stack = [q]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        for nxt in deps.get(cur, ()):
            if nxt == r:
                return True
            stack.append(nxt)
    return False


def dependents_of(p, r):
    """All predicates that depend on r (always includes r itself)."""
    return {q for q in p.schema.arity if depends(p, q, r)}


def stratify(p):
    """Assign strata so positive deps stay within a stratum and negative deps
    go strictly below.  Raises NonStratifiableError naming a negative cycle."""
    if p._strata is not None:
        return p._strata
    preds = set(p.schema.arity)
    stratum = {q: 0 for q in preds}
    n = max(1, len(preds))
    for _ in range(n + 1):
        changed = False
        for r in p.rules:
            h = r.head.pred
            for lit in r.body:
                if not isinstance(lit.atom, Rel):
                    continue
                b = lit.atom.pred
                want = stratum[b] + (0 if lit.positive else 1)
                if stratum[h] < want:
                    stratum[h] = want
                    changed = True
        if not changed:
            p._strata = stratum
            return stratum
    # a stratum exceeded the predicate count: hunt down a negative cycle edge
    for r in p.rules:
        for lit in r.body:
            if isinstance(lit.atom, Rel) and not lit.positive:
                if depends(p, lit.atom.pred, r.head.pred):
                    raise NonStratifiableError(
                        f"negative cycle: {r.head.pred} uses !{lit.atom.pred}, "
                        f"which depends on {r.head.pred}")
    raise NonStratifiableError("program is not stratifiable")


def _match(pattern, fact, env):
    for t, v in zip(pattern, fact):
        if isinstance(t, Const):
            if t.name != v:
                return None
        else:
            bound = env.get(t)
            if bound is None:
                env = {**env, t: v}
            elif bound != v:
                return None
    return env


def _resolve(term, env):
    if isinstance(term, Const):
        return term.name
    return env[term]


def _eval_rule(rule, rels, delta_pred=None, delta=None, log=None):
    """Join the rule body left to right, yielding head tuples.

    When delta_pred is given, exactly one occurrence of that predicate is
    read from `delta` instead of the full relation (semi-naive).
    """
    pos = [lit for lit in rule.body if lit.positive and isinstance(lit.atom, Rel)]
    rest = [lit for lit in rule.body if not (lit.positive and isinstance(lit.atom, Rel))]
    out = set()

    delta_slots = [i for i, lit in enumerate(pos) if lit.atom.pred == delta_pred] \
        if delta_pred is not None else [None]
    if delta_pred is not None and not delta_slots:
        return out

    for slot in delta_slots:
        envs = [{}]
        for i, lit in enumerate(pos):
            source = delta if i == slot else rels.get(lit.atom.pred, frozenset())
            new_envs = []
            for env in envs:
                for fact in source:
                    if len(fact) != len(lit.atom.args):
                        continue
                    e2 = _match(lit.atom.args, fact, env)
                    if e2 is not None:
                        new_envs.append(e2)
            envs = new_envs
            if not envs:
                break
        for env in envs:
            ok = True
            for lit in rest:
                if isinstance(lit.atom, Eq):
                    l = _resolve(lit.atom.left[0], env)
                    r = _resolve(lit.atom.right[0], env)
                    if (l == r) != lit.positive:
                        ok = False
                        break
                else:
                    fact = tuple(_resolve(t, env) for t in lit.atom.args)
                    if (fact in rels.get(lit.atom.pred, frozenset())) != lit.positive:
                        ok = False
                        break
            if ok:
                out.add(tuple(_resolve(t, env) for t in rule.head.args))
        if log is not None:
            log.append(rule.head.pred)
    return out


def evaluate(p, b, order_log=None):
    """Perfect model of a stratified program over a database: per-stratum
    semi-naive fixpoint.  The result maps every predicate (EDB included) to
    its extension."""
    strata = stratify(p)
    rels = {pred: set(ts) for pred, ts in b.relations.items()}
    idbs = p.idb_preds()
    for pred in idbs:
        rels.setdefault(pred, set())

    by_stratum = {}
    for r in p.rules:
        by_stratum.setdefault(strata[r.head.pred], []).append(r)

    for level in sorted(by_stratum):
        rules = by_stratum[level]
        level_preds = {r.head.pred for r in rules}
        # initial round: all rules over full relations
        delta = {q: set() for q in level_preds}
        for r in rules:
            new = _eval_rule(r, rels, log=order_log)
            fresh = new - rels[r.head.pred]
            rels[r.head.pred] |= fresh
            delta[r.head.pred] |= fresh
        # semi-naive iteration on the recursive part
        while any(delta.values()):
            prev_delta = delta
            delta = {q: set() for q in level_preds}
            for r in rules:
                body_preds = {lit.atom.pred for lit in r.body
                              if lit.positive and isinstance(lit.atom, Rel)}
                for q in body_preds & level_preds:
                    if not prev_delta[q]:
                        continue
                    new = _eval_rule(r, rels, delta_pred=q, delta=prev_delta[q],
                                     log=order_log)
                    fresh = new - rels[r.head.pred]
                    rels[r.head.pred] |= fresh
                    delta[r.head.pred] |= fresh
    return Database({pred: frozenset(ts) for pred, ts in rels.items()})


def naive_evaluate(p, b):
    """Iterate all rules over full relations to a fixpoint; the reference
    oracle for evaluate."""
    strata = stratify(p)
    rels = {pred: set(ts) for pred, ts in b.relations.items()}
    for pred in p.idb_preds():
        rels.setdefault(pred, set())
    by_stratum = {}
    for r in p.rules:
        by_stratum.setdefault(strata[r.head.pred], []).append(r)
    for level in sorted(by_stratum):
        rules = by_stratum[level]
        changed = True
        while changed:
            changed = False
            for r in rules:
                new = _eval_rule(r, rels)
                if not new <= rels[r.head.pred]:
                    rels[r.head.pred] |= new
                    changed = True
    return Database({pred: frozenset(ts) for pred, ts in rels.items()})
