"""Weakest preconditions over deductive databases.

Inserting into (or deleting from) a predicate of a Datalog program yields a
precondition c[r -> r'] over a primed copy of the program: every predicate
depending on r is duplicated, and the primed target is defined from the old
relation plus (minus) the qualification.  For insertion updates against
constraints of the form "no t-fact exists", a saturation procedure instead
derives delta rules computing just the potentially new facts, which is the
simplified precondition "no delta_t-fact exists".
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .errors import NonStratifiableError, PrecondError, UnsupportedError
from .logic import (
    Clause, Const, Eq, FAtom, FNot, Formula, Literal, Rel, TRUE, Var,
    clause_formula, formula_preds, mgu, subst_literal, subst_term, to_clauses,
)
from .datalog import (
    Database, DatalogProgram, Rule, dependents_of, depends, evaluate, stratify,
)
from .updates import (
    DeleteForeach, EDB, IDB, If, InsertForeach, Seq, Skip, qual_literals,
)


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass(frozen=True)
class HypothesisReport:
    ok: bool
    violations: tuple

    def __bool__(self):
        return self.ok


def check_hypotheses(p, u, c):
    """H1: qualifications are conjunctions of literals and every IDB used in
    the constraint, qualifications and conditions is defined by p.  H2: no
    qualification literal depends on the predicate its foreach updates."""
    from .updates import update_conds, update_foreachs

    violations = []
    idbs = p.idb_preds()

    def check_vocab(f, where):
        for pred in formula_preds(f):
            if pred not in p.schema.arity:
                violations.append(
                    f"H1: predicate {pred} in {where} is not declared in the program")

    check_vocab(c, "the constraint")
    for fe in update_foreachs(u):
        try:
            lits = qual_literals(fe.qual)
        except PrecondError:
            violations.append(
                f"H1: qualification of the update on {fe.target} is not a "
                "conjunction of literals")
            continue
        check_vocab(fe.qual, f"the qualification on {fe.target}")
        for lit in lits:
            if not isinstance(lit.atom, Rel):
                continue
            pred = lit.atom.pred
            if pred in p.schema.arity and fe.target in p.schema.arity \
                    and depends(p, pred, fe.target):
                violations.append(
                    f"H2: qualification literal {pred} depends on the updated "
                    f"predicate {fe.target}")
    for cond in update_conds(u):
        check_vocab(cond, "a condition")
    return HypothesisReport(not violations, tuple(violations))


# ---------------------------------------------------------------------------
# primed programs (post-state copies)


@dataclass(frozen=True)
class PrimedProgram:
    program: DatalogProgram
    primed_of: dict


class _Names:
    """Deterministic fresh-symbol allocation against a schema."""

    def __init__(self, schema):
        self.schema = schema

    def fresh(self, base, arity, kind=IDB):
        name = base
        n = 1
        while name in self.schema.arity:
            n += 1
            name = f"{base}{n}"
        self.schema.declare(name, arity, kind)
        return name

    def primed(self, pred):
        return self.fresh(pred + "_prime", self.schema.arity[pred])

    def delta(self, pred):
        name = "delta_" + pred
        if name in self.schema.arity:
            raise PrecondError(
                f"symbol {name} collides with a declared predicate")
        self.schema.declare(name, self.schema.arity[pred], IDB)
        return name


def _rename_atom(atom, mapping):
    return Rel(mapping.get(atom.pred, atom.pred), atom.args)


def _rename_rule(rule, mapping):
    return Rule(_rename_atom(rule.head, mapping),
                tuple(Literal(_rename_atom(l.atom, mapping), l.positive)
                      if isinstance(l.atom, Rel) else l
                      for l in rule.body))


def prime_program(p, r):
    """Notation-2 construction: a primed twin q' for every predicate q
    depending on r, with primed copies of their defining rules.  If r is an
    EDB its primed symbol is declared IDB and left ruleless; the update
    supplies its definition."""
    if r not in p.schema.arity:
        raise PrecondError(f"undeclared predicate {r}")
    schema = p.schema.copy()
    names = _Names(schema)
    deps = sorted(dependents_of(p, r))
    primed_of = {q: names.primed(q) for q in deps}
    new_rules = []
    for rule in p.rules:
        if rule.head.pred in primed_of:
            new_rules.append(_rename_rule(rule, primed_of))
    prog = DatalogProgram(p.rules + new_rules, schema)
    return PrimedProgram(prog, primed_of)


def subst_constraint_preds(c, mapping):
    """c[r -> r']: replace every predicate in the mapping by its image."""

    def go(f):
        if isinstance(f, FAtom):
            if isinstance(f.atom, Rel) and f.atom.pred in mapping:
                return FAtom(Rel(mapping[f.atom.pred], f.atom.args))
            return f
        if isinstance(f, FNot):
            return FNot(go(f.sub))
        from .logic import FAnd, FClosed, FOr
        if isinstance(f, FClosed):
            return FClosed(go(f.sub))
        if isinstance(f, FAnd):
            return FAnd(tuple(go(p) for p in f.parts))
        return FOr(tuple(go(p) for p in f.parts))

    return go(c)


def _qual_body(vars_, qual):
    """Turn a conjunction-of-literals qualification into a rule body, with
    tuple equalities decomposed into scalar ones."""
    body = []
    for lit in qual_literals(qual):
        if isinstance(lit.atom, Eq):
            for l, r in lit.atom.pairs():
                body.append(Literal(Eq((l,), (r,)), lit.positive))
            if not lit.positive and len(lit.atom.pairs()) > 1:
                raise UnsupportedError(
                    "tuple disequality in a deductive qualification is a "
                    "disjunction; it is not a conjunction of literals")
        else:
            body.append(lit)
    return body


def simplify_rule(rule):
    """Propagate positive equality bindings through a rule; returns None when
    the body is unsatisfiable (distinct ground equality)."""
    body = list(rule.body)
    head = rule.head
    changed = True
    while changed:
        changed = False
        for lit in body:
            if not (isinstance(lit.atom, Eq) and lit.positive):
                continue
            l, r = lit.atom.left[0], lit.atom.right[0]
            if isinstance(l, Const) and isinstance(r, Const):
                if l != r:
                    return None
                body.remove(lit)
            elif isinstance(l, Var) or isinstance(r, Var):
                v, t = (l, r) if isinstance(l, Var) else (r, l)
                if v == t:
                    body.remove(lit)
                else:
                    s = {v: t}
                    body.remove(lit)
                    body = [subst_literal(x, s) for x in body]
                    head = Rel(head.pred, tuple(subst_term(a, s) for a in head.args))
            changed = True
            break
    return Rule(head, tuple(body))


# ---------------------------------------------------------------------------
# Theorem 4: the four wp cases


def wp_deductive(u, c, p):
    """Weakest precondition of a (normalized) update over a Datalog program:
    returns the transformed constraint and the program defining its IDBs."""
    report = check_hypotheses(p, u, c)
    if not report:
        raise UnsupportedError("; ".join(report.violations))
    return _wp_ded(u, c, p)


def _wp_ded(u, c, p):
    if isinstance(u, Skip):
        return c, p
    if isinstance(u, Seq):
        c2, p2 = _wp_ded(u.second, c, p)
        return _wp_ded(u.first, c2, p2)
    if isinstance(u, If):
        from .logic import close_formula, f_and, f_not, f_or

        c1, p1 = _wp_ded(u.then, c, p)
        if u.els is not None:
            c2, p2 = _wp_ded(u.els, c, p1)
        else:
            c2, p2 = c, p1
        guard = close_formula(u.cond)
        return f_or((f_and((guard, c1)), f_and((f_not(guard), c2)))), p2
    # foreach
    r = u.target
    pp = prime_program(p, r)
    schema = pp.program.schema
    names = _Names(schema)
    r_prime = pp.primed_of[r]
    xs = tuple(Var(f"X{i+1}") for i in range(len(u.vars)))
    inst = dict(zip(u.vars, xs))
    qual_body = tuple(subst_literal(l, inst) for l in _qual_body(u.vars, u.qual))
    rules = list(pp.program.rules)
    if isinstance(u, InsertForeach):
        rules.append(Rule(Rel(r_prime, xs), (Literal(Rel(r, xs)),)))
        qrule = simplify_rule(Rule(Rel(r_prime, xs), qual_body))
        if qrule is not None:
            rules.append(qrule)
    else:
        t = names.fresh("t_del", len(u.vars))
        rules.append(Rule(Rel(r_prime, xs),
                          (Literal(Rel(r, xs)), Literal(Rel(t, xs), False))))
        qrule = simplify_rule(Rule(Rel(t, xs), qual_body))
        if qrule is not None:
            rules.append(qrule)
    prog = DatalogProgram(rules, schema)
    try:
        stratify(prog)
    except NonStratifiableError as e:
        raise UnsupportedError(
            f"the delete construction left the Datalog fragment and the "
            f"resulting Datalog-with-negation program is not stratifiable: {e}")
    return subst_constraint_preds(c, pp.primed_of), prog


# ---------------------------------------------------------------------------
# delta programs


@dataclass(frozen=True)
class DeltaResult:
    wp_formula: Formula
    program: DatalogProgram
    provenance: dict
    safe: bool
    pruned: tuple = ()

    def delta_of(self, pred):
        return "delta_" + pred


def _not_exists_shape(c):
    """Match a constraint of shape 'no t-fact': a single clause whose only
    literal is a negative relational atom.  Returns (t, args)."""
    clauses = to_clauses(c)
    if len(clauses) == 1:
        lits = list(clauses[0].literals)
        if len(lits) == 1 and not lits[0].positive and isinstance(lits[0].atom, Rel):
            return lits[0].atom.pred, lits[0].atom.args
    raise UnsupportedError(
        "delta construction needs a constraint of the form "
        "'!exists x: t(x)' (a single negative literal)")


def not_exists_formula(pred, args):
    return clause_formula(Clause([Literal(Rel(pred, args), False)]))


def _rule_is_linear(rule, idbs):
    return sum(1 for l in rule.body
               if l.positive and isinstance(l.atom, Rel) and l.atom.pred in idbs) <= 1


def _resolve_with_fact(rule, fact):
    """Resolvents of a rule against a ground fact: one per unifiable positive
    body atom over the fact's predicate."""
    out = []
    for i, lit in enumerate(rule.body):
        if not (lit.positive and isinstance(lit.atom, Rel)
                and lit.atom.pred == fact.pred):
            continue
        s = mgu(lit.atom, fact)
        if s is None:
            continue
        body = tuple(subst_literal(l, s)
                     for j, l in enumerate(rule.body) if j != i)
        head = Rel(rule.head.pred,
                   tuple(subst_term(a, s) for a in rule.head.args))
        out.append(Rule(head, body))
    return out


def _dedup_rules(rules):
    seen = set()
    out = []
    for r in rules:
        key = repr(r)
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


def delta_saturation(p, inserts, c, prune=True, prune_cap=4096):
    """The ground-insert saturation procedure.

    Inputs: a linear program, ground inserted atoms r(d1..), .., r(dk..) over
    one EDB predicate, and a constraint 'no t-fact exists'.  Seeds delta
    rules for every predicate depending on r, resolves them against the
    inserted atoms to saturation, then re-resolves the recursive seeds with
    delta bodies.  The precondition is 'no delta_t-fact exists' over the
    emitted program.
    """
    t, t_args = _not_exists_shape(c)
    if not inserts:
        raise UnsupportedError("no inserted atoms given")
    r = inserts[0].pred
    if any(a.pred != r for a in inserts):
        raise UnsupportedError("all inserted atoms must target one predicate")
    if p.schema.is_idb(r):
        raise UnsupportedError(f"the updated predicate {r} must be an EDB")
    for atom in inserts:
        if any(not isinstance(x, Const) for x in atom.args):
            raise UnsupportedError(f"inserted atom {atom!r} is not ground")
    idbs = p.idb_preds()
    nonlinear = [rule for rule in p.rules if not _rule_is_linear(rule, idbs)]
    if nonlinear:
        raise UnsupportedError(
            f"non-linear rule {nonlinear[0]!r}: the saturation procedure "
            "supports linear programs only (one IDB atom per body)")

    schema = p.schema.copy()
    names = _Names(schema)
    r_deps = sorted(q for q in idbs if depends(p, q, r))
    delta_of = {q: names.delta(q) for q in r_deps}
    provenance = {}

    # Step 1: seed rules delta_q <- body for every rule whose head depends on r
    pi = []
    for rule in p.rules:
        if rule.head.pred in delta_of:
            seeded = Rule(Rel(delta_of[rule.head.pred], rule.head.args), rule.body)
            pi.append(seeded)
    if not pi:
        return DeltaResult(wp_formula=TRUE, program=p, provenance={},
                           safe=True)

    # Step 2: resolve the seeds against the inserted atoms, to saturation
    def resolve_layer(rules):
        out = []
        for rule in rules:
            for atom in inserts:
                out.extend(_resolve_with_fact(rule, atom))
        return _dedup_rules(out)

    p_layers = [resolve_layer(pi)]
    if not p_layers[0]:
        return DeltaResult(wp_formula=TRUE, program=p, provenance={},
                           safe=True)
    while p_layers[-1]:
        p_layers.append(resolve_layer(p_layers[-1]))
    p_prime = _dedup_rules(r for layer in p_layers for r in layer)
    for i, layer in enumerate(p_layers):
        for rule in layer:
            provenance.setdefault(rule, f"step2 resolvent, iteration {i+1}")

    # Step 3: recursive seeds get their r-dependent IDB atoms replaced by deltas
    sigma1 = [rule for rule in pi
              if any(l.positive and isinstance(l.atom, Rel)
                     and l.atom.pred in r_deps for l in rule.body)]
    pp_rules = []
    if sigma1:
        pp1 = []
        for rule in sigma1:  # head is already a delta symbol
            body = tuple(
                Literal(Rel(delta_of[l.atom.pred], l.atom.args), l.positive)
                if l.positive and isinstance(l.atom, Rel) and l.atom.pred in r_deps
                else l
                for l in rule.body)
            pp1.append(Rule(rule.head, body))
        pp_layers = [_dedup_rules(pp1)]
        for rule in pp_layers[0]:
            provenance.setdefault(rule, "step3 delta substitution")
        while pp_layers[-1]:
            nxt = resolve_layer(pp_layers[-1])
            pp_layers.append(nxt)
            for rule in nxt:
                provenance.setdefault(
                    rule, f"step3 resolvent, iteration {len(pp_layers)-1}")
        pp_rules = _dedup_rules(r for layer in pp_layers for r in layer)

    all_rules = _dedup_rules(p.rules + p_prime + pp_rules)
    program = DatalogProgram(all_rules, schema)
    wp = not_exists_formula(delta_of[t], t_args) if t in delta_of else TRUE
    pruned = ()
    if prune and t in delta_of:
        # saturation by-products: resolvents that re-route propagation through
        # the inserted atoms; removal is applied only when an exhaustive
        # small-instance check certifies the safety verdict is unchanged
        candidates = _dedup_rules(
            rule for rule in all_rules
            if _while_loop_product(provenance.get(rule, "")))
        if candidates:
            kept = [rule for rule in all_rules if rule not in candidates]
            trimmed = DatalogProgram(kept, schema.copy())
            if _prune_equivalent(program, trimmed, delta_of[t], inserts, p,
                                 prune_cap):
                program = trimmed
                pruned = tuple(candidates)
    return DeltaResult(wp_formula=wp, program=program, provenance=provenance,
                       safe=False, pruned=pruned)


def _while_loop_product(tag):
    m = re.search(r"(step\d) resolvent, iteration (\d+)$", tag or "")
    if not m:
        return False
    return int(m.group(2)) >= 2 or m.group(1) == "step3"


def _prune_equivalent(full, trimmed, delta_t, inserts, base, cap):
    """Exhaustive small-instance check that dropping saturation by-products
    does not change the emptiness of delta_t on any database satisfying the
    constraint; keeps everything when the check fails or the space is too
    large."""
    consts = sorted({x.name for atom in inserts for x in atom.args})
    n_extra = max(0, 3 - len(consts))
    for i in range(n_extra):
        name = f"w{i+1}"
        while name in consts:
            name += "x"
        consts.append(name)
    edbs = {pred: base.schema.arity[pred] for pred in base.schema.edb_preds()}
    cells = [(pred, tup) for pred in sorted(edbs)
             for tup in itertools.product(consts, repeat=edbs[pred])]
    if (1 << len(cells)) > cap:
        return False
    for i in range(1 << len(cells)):
        rels = {}
        for j, (pred, tup) in enumerate(cells):
            if (i >> j) & 1:
                rels.setdefault(pred, set()).add(tup)
        b = Database({p_: frozenset(ts) for p_, ts in rels.items()})
        # trimmed is a subset of full, so a nonempty trimmed verdict settles it
        if evaluate(trimmed, b).get(delta_t):
            continue
        if evaluate(full, b).get(delta_t):
            return False
    return True


def delta_qualified_insert(p, r, phi, c, phi_vars=None):
    """Delta rules for 'foreach x: phi(x) do insert r(x)' with a possibly
    recursive qualification.

    Seeding: a single positive IDB atom matching the insert tuple is unfolded
    one level through its defining rules, with each recursive occurrence
    replaced by both the old target relation and its delta (the tuples being
    inserted are covered by r's old extension plus the new facts).
    Propagation: every rule of an r-dependent predicate with an r-dependent
    body atom gets a variant with that occurrence replaced by its delta.
    """
    if r not in p.schema.arity:
        raise PrecondError(f"undeclared predicate {r}")
    t, t_args = _not_exists_shape(c)
    lits = qual_literals(phi)
    idbs = p.idb_preds()
    for lit in lits:
        if not lit.positive and isinstance(lit.atom, Rel) and lit.atom.pred in idbs:
            raise UnsupportedError(
                f"negated IDB atom {lit.atom.pred} in the qualification is "
                "not supported by the delta construction")
    schema = p.schema.copy()
    names = _Names(schema)
    r_deps = sorted(q for q in idbs | {r} if depends(p, q, r))
    delta_of = {q: names.delta(q) for q in r_deps}
    provenance = {}
    rules = []

    idb_atoms = [l for l in lits if l.positive and isinstance(l.atom, Rel)
                 and l.atom.pred in idbs]
    rest = [l for l in lits if l not in idb_atoms]
    if phi_vars is None:
        phi_vars = _default_phi_vars(lits, p, r)

    direct_seed = True
    if len(idb_atoms) == 1 and not rest and idb_atoms[0].atom.args == tuple(phi_vars):
        g = idb_atoms[0].atom.pred
        scc = {q for q in idbs if depends(p, q, g) and depends(p, g, q)}
        for rule in p.rules:
            if rule.head.pred != g:
                continue
            occ = [i for i, l in enumerate(rule.body)
                   if l.positive and isinstance(l.atom, Rel) and l.atom.pred in scc]
            variants = [[]]
            for i in occ:
                variants = [v + [(i, repl)] for v in variants
                            for repl in (r, delta_of[r])]
            for variant in variants:
                body = list(rule.body)
                for i, repl in variant:
                    body[i] = Literal(Rel(repl, body[i].atom.args), True)
                seeded = Rule(Rel(delta_of[r], rule.head.args), tuple(body))
                rules.append(seeded)
                tag = "seed: one-level unfolding of " + g
                if variant:
                    tag += " (" + ", ".join(
                        "old target" if repl == r else "delta"
                        for _, repl in variant) + " variant)"
                provenance[seeded] = tag
        direct_seed = False
    if direct_seed:
        xs = tuple(phi_vars)
        body = tuple(_qual_body(xs, phi))
        seeded = simplify_rule(Rule(Rel(delta_of[r], xs), body))
        if seeded is not None:
            rules.append(seeded)
            provenance[seeded] = "seed: qualification body"

    for rule in p.rules:
        if rule.head.pred not in delta_of:
            continue
        for i, lit in enumerate(rule.body):
            if not (lit.positive and isinstance(lit.atom, Rel)):
                continue
            if lit.atom.pred not in r_deps:
                continue
            body = list(rule.body)
            body[i] = Literal(Rel(delta_of[lit.atom.pred], lit.atom.args), True)
            prop = Rule(Rel(delta_of[rule.head.pred], rule.head.args), tuple(body))
            rules.append(prop)
            provenance[prop] = f"propagate through {rule.head.pred} rule"

    all_rules = _dedup_rules(p.rules + rules)
    program = DatalogProgram(all_rules, schema)
    wp = not_exists_formula(delta_of[t], t_args) if t in delta_of else TRUE
    return DeltaResult(wp_formula=wp, program=program, provenance=provenance,
                       safe=t not in delta_of)


def _default_phi_vars(lits, p, r):
    arity = p.schema.arity[r]
    # use the variables of the first IDB atom when they fit, else X1..Xk
    for l in lits:
        if isinstance(l.atom, Rel) and len(l.atom.args) == arity \
                and all(isinstance(a, Var) for a in l.atom.args):
            return l.atom.args
    return tuple(Var(f"X{i+1}") for i in range(arity))
