"""Weakest preconditions for relational updates.

`wp_full` is the plain substitution-based transformer (insert maps the
constraint through r -> r union phi, delete through r -> r minus phi,
sequences compose, conditionals branch).  `rewrite_swp` runs the nine-rule
rewriting system to saturation instead: resolution against the updated
predicate isolates the constraint instances an update can touch, and every
conjunct already implied by the constraint (theta-subsumed by one of its
clauses, or a tautology) is dropped, leaving the simplified weakest
precondition together with a full derivation trace.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field

from .errors import ArityError, BlowupError, PrecondError
from .logic import (
    Clause, Const, Eq, FAnd, FAtom, FClosed, FNot, FOr, Formula, Literal,
    Rel, Var, canonical_clause, clause_formula, clauses_formula,
    close_formula, dedup_clauses, f_and, f_not, f_or, formula_preds,
    is_tautology, binary_resolvents_on, subst_formula, subst_literal,
    theta_subsumes, to_clauses,
)
from .updates import (
    DeleteForeach, If, InsertForeach, Seq, Skip, is_normalized,
    normalize_update, qual_literals,
)


class SubstMode(enum.Enum):
    ALL_UNION = "all-union"    # c[r -> r u phi]
    ALL_DIFF = "all-diff"      # c[r -> r - phi]
    POS_UNION = "pos-union"    # c[+r -> r u phi]
    NEG_UNION = "neg-union"    # c[-r -> !r u phi]


def substitute(c, r, mode, phi, phi_vars):
    """Substitute through every (or every positive/negative) occurrence of r
    in c, instantiating phi at each occurrence's argument tuple."""
    occ_arity = formula_preds(c).get(r)
    if occ_arity is not None and occ_arity != len(phi_vars):
        raise ArityError(f"{r} has arity {occ_arity} in the constraint but the "
                         f"qualification binds {len(phi_vars)} variables")

    def go(f, pos):
        if isinstance(f, FAtom):
            a = f.atom
            if not (isinstance(a, Rel) and a.pred == r):
                return f
            inst = subst_formula(phi, dict(zip(phi_vars, a.args)))
            if mode is SubstMode.ALL_UNION:
                return f_or((f, inst))
            if mode is SubstMode.ALL_DIFF:
                return f_and((f, f_not(inst)))
            if mode is SubstMode.POS_UNION:
                return f_or((f, inst)) if pos else f
            return f if pos else f_and((f, f_not(inst)))
        if isinstance(f, FNot):
            return FNot(go(f.sub, not pos))
        if isinstance(f, FClosed):
            return FClosed(go(f.sub, pos))
        if isinstance(f, FAnd):
            return FAnd(tuple(go(p, pos) for p in f.parts))
        return FOr(tuple(go(p, pos) for p in f.parts))

    return go(c, True)


def wp_full(u, c):
    """The weakest precondition of update u for constraint c (substitution
    transformer, no simplification)."""
    if isinstance(u, Skip):
        return c
    if isinstance(u, Seq):
        return wp_full(u.first, wp_full(u.second, c))
    if isinstance(u, If):
        # the guard must be a self-contained sentence: its negation is
        # existential and its variables are not shared with the branches
        guard = close_formula(u.cond)
        wp_then = wp_full(u.then, c)
        wp_else = wp_full(u.els, c) if u.els is not None else c
        return f_or((f_and((guard, wp_then)),
                     f_and((f_not(guard), wp_else))))
    mode = SubstMode.ALL_UNION if isinstance(u, InsertForeach) else SubstMode.ALL_DIFF
    return substitute(c, u.target, mode, u.qual, u.vars)


# ---------------------------------------------------------------------------
# rewrite terms


@dataclass(frozen=True)
class WpApp:
    update: object
    target: object


@dataclass(frozen=True)
class NAnd:
    parts: tuple


@dataclass(frozen=True)
class NOr:
    parts: tuple


@dataclass(frozen=True)
class NNot:
    sub: object


@dataclass(frozen=True)
class NLeaf:
    clause: Clause


def _node_str(node, depth=0):
    from .syntax import print_clause, print_update

    if isinstance(node, NLeaf):
        return f"({print_clause(node.clause)})"
    if isinstance(node, WpApp):
        return f"wp[{print_update(node.update)} ; {_node_str(node.target)}]"
    if isinstance(node, NNot):
        return f"!{_node_str(node.sub)}"
    sep = " & " if isinstance(node, NAnd) else " | "
    if not node.parts:
        return "true" if isinstance(node, NAnd) else "false"
    return "(" + sep.join(_node_str(p) for p in node.parts) + ")"


def node_formula(node):
    """Convert a fully rewritten term to a Formula.

    Conjuncts stay open (the implicit closure distributes over them), but
    each disjunct and each negated subterm is closed into a sentence first:
    those boolean connectives sit *between* sentences.
    """
    if isinstance(node, NLeaf):
        return clause_formula(node.clause)
    if isinstance(node, NAnd):
        return f_and(tuple(node_formula(p) for p in node.parts)) if node.parts else FAnd(())
    if isinstance(node, NOr):
        if not node.parts:
            return FOr(())
        return f_or(tuple(close_formula(node_formula(p)) for p in node.parts))
    if isinstance(node, NNot):
        return f_not(close_formula(node_formula(node.sub)))
    raise PrecondError(f"unrewritten term {node!r}")


def node_signature(node):
    """Renaming-invariant signature used for confluence comparisons."""
    if isinstance(node, NLeaf):
        return ("c", canonical_clause(node.clause))
    if isinstance(node, NAnd):
        return ("and", frozenset(node_signature(p) for p in node.parts))
    if isinstance(node, NOr):
        return ("or", frozenset(node_signature(p) for p in node.parts))
    return ("not", node_signature(node.sub))


# ---------------------------------------------------------------------------
# the rewriting engine


@dataclass(frozen=True)
class TraceStep:
    index: int
    rule: str
    redex: str
    result: str

    def as_dict(self):
        return {"step": self.index, "rule": self.rule,
                "redex": self.redex, "result": self.result}


@dataclass
class Trace:
    steps: list = field(default_factory=list)

    def record(self, rule, redex, result):
        self.steps.append(TraceStep(len(self.steps) + 1, rule,
                                    _node_str(redex), _node_str(result)))

    def to_json(self, indent=None):
        return json.dumps([s.as_dict() for s in self.steps], indent=indent)

    def render(self):
        return "\n".join(f"[{s.index}] {s.rule}: {s.redex}  -->  {s.result}"
                         for s in self.steps)


def _occurrence_union(clause, r, pos_occurrences, vars_, qlits):
    """CNF of the clause with phi adjoined at each r-occurrence of the given
    sign: one clause per choice of a qualification literal per occurrence."""
    occs = [lit for lit in clause
            if isinstance(lit.atom, Rel) and lit.atom.pred == r
            and lit.positive == pos_occurrences]
    if not occs:
        return [clause]
    per_occ = []
    for lit in occs:
        inst = dict(zip(vars_, lit.atom.args))
        per_occ.append([subst_literal(q, inst) for q in qlits])
    out = [Clause(clause.literals | set(combo))
           for combo in itertools.product(*per_occ)]
    return dedup_clauses(out)


def _count_sign(clause, r, positive):
    return sum(1 for lit in clause
               if isinstance(lit.atom, Rel) and lit.atom.pred == r
               and lit.positive == positive)


class _Rewriter:
    def __init__(self, selector=None, max_conjuncts=10_000, bound=None):
        self.selector = selector
        self.max_conjuncts = max_conjuncts
        self.bound = bound
        self.trace = Trace()
        self.steps = 0
        self.leaves = 0

    def _redexes(self, node, path=()):
        if isinstance(node, WpApp):
            inner = list(self._redexes(node.target, path + (0,)))
            return inner if inner else [(path, node)]
        if isinstance(node, (NAnd, NOr)):
            out = []
            for i, p in enumerate(node.parts):
                out.extend(self._redexes(p, path + (i,)))
            return out
        if isinstance(node, NNot):
            return self._redexes(node.sub, path + (0,))
        return []

    def _replace(self, node, path, new):
        if not path:
            return new
        i, rest = path[0], path[1:]
        if isinstance(node, WpApp):
            return WpApp(node.update, self._replace(node.target, rest, new))
        if isinstance(node, NNot):
            return NNot(self._replace(node.sub, rest, new))
        parts = list(node.parts)
        parts[i] = self._replace(parts[i], rest, new)
        return type(node)(tuple(parts))

    def run(self, root):
        while True:
            redexes = self._redexes(root)
            if not redexes:
                return root
            if self.selector is None:
                path, redex = redexes[0]
            else:
                path, redex = self.selector.choice(redexes)
            new = self._step(redex)
            self.steps += 1
            if self.bound is not None and self.steps > self.bound:
                raise PrecondError(
                    f"rewrite exceeded its declared structural bound {self.bound}")
            root = self._replace(root, path, new)

    def _emit_leaves(self, n):
        self.leaves += n
        if self.leaves > self.max_conjuncts:
            raise BlowupError(
                f"rewriting produced more than {self.max_conjuncts} conjuncts; "
                "this is the exponential blow-up case for constraints with "
                "many occurrences of the updated predicate (raise the cap to "
                "proceed)")

    def _step(self, redex):
        u, t = redex.update, redex.target
        if isinstance(u, Skip):
            self.trace.record("skip", redex, t)
            return t
        if isinstance(u, Seq):
            new = WpApp(u.first, WpApp(u.second, t))
            self.trace.record("R5", redex, new)
            return new
        if isinstance(u, If):
            cond_cls = to_clauses(u.cond)
            guard = NAnd(tuple(NLeaf(c) for c in cond_cls))
            then_branch = NAnd((guard, WpApp(u.then, t)))
            els_target = WpApp(u.els, t) if u.els is not None else t
            els_branch = NAnd((NNot(guard), els_target))
            self._emit_leaves(2 * len(cond_cls))
            new = NOr((then_branch, els_branch))
            self.trace.record("R6", redex, new)
            return new
        if isinstance(t, NNot):
            new = NNot(WpApp(u, t.sub))
            self.trace.record("R7", redex, new)
            return new
        if isinstance(t, NAnd):
            new = NAnd(tuple(WpApp(u, p) for p in t.parts))
            self.trace.record("R8", redex, new)
            return new
        if isinstance(t, NOr):
            new = NOr(tuple(WpApp(u, p) for p in t.parts))
            self.trace.record("R9", redex, new)
            return new
        # foreach applied to a single clause: R1-R4
        clause = t.clause
        insert = isinstance(u, InsertForeach)
        qlits = qual_literals(u.qual)
        head = Literal(Rel(u.target, u.vars), insert)
        aux = Clause([head] + [q.negated() for q in qlits])
        resolvents = binary_resolvents_on(clause, aux, u.target)
        subst_clauses = _occurrence_union(clause, u.target, insert, u.vars, qlits)
        self._emit_leaves(len(subst_clauses))
        conjuncts = [NLeaf(c) for c in subst_clauses]
        if not resolvents:
            new = conjuncts[0] if len(conjuncts) == 1 else NAnd(tuple(conjuncts))
            self.trace.record("R1" if insert else "R3", redex, new)
            return new
        # recursion guard: the paper's termination measure
        before = _count_sign(clause, u.target, not insert)
        for res in resolvents:
            after = _count_sign(res, u.target, not insert)
            assert after < before, \
                f"resolvent {res!r} did not shrink the r-literal count"
        new = NAnd(tuple(conjuncts) + tuple(WpApp(u, NLeaf(r)) for r in resolvents))
        self.trace.record("R2" if insert else "R4", redex, new)
        return new


class _RandomSelector:
    def __init__(self, rng):
        self.rng = rng

    def choice(self, redexes):
        return self.rng.choice(redexes)


# ---------------------------------------------------------------------------
# declared termination bound


def _g(k, _memo={0: 1}):
    if k not in _memo:
        _memo[k] = 1 + k * _g(k - 1)
    return _memo[k]


def rewrite_bound(u, clauses):
    """Structural overestimate of the number of rewrite steps.

    Per clause of length l, a foreach recurses through at most g(l) rule
    applications where g(k) = 1 + k*g(k-1) (each resolution step consumes one
    literal of the updated predicate); substitution can multiply conjuncts by
    at most the qualification size per occurrence, and sequencing feeds one
    update's output conjuncts to the next.
    """

    def est(u, n, l):
        if isinstance(u, Skip):
            return 1, n, l
        if isinstance(u, Seq):
            s2, n2, l2 = est(u.second, n, l)
            s1, n1, l1 = est(u.first, n2, l2)
            return 1 + s1 + s2 + n2, n1, l1
        if isinstance(u, If):
            lc = max((len(cl) for cl in to_clauses(u.cond)), default=1)
            s1, n1, l1 = est(u.then, n, l)
            if u.els is not None:
                s2, n2, l2 = est(u.els, n, l)
            else:
                s2, n2, l2 = 0, n, l
            return 1 + s1 + s2, n1 + n2 + lc + 2, max(l1, l2, lc)
        m = max(1, len(qual_literals(u.qual)))
        steps = n * _g(l) + n + 1
        out_n = n * _g(l) * (m ** min(l, 12))
        out_l = l * (1 + 2 * m) + 2
        return steps, out_n, out_l

    n = max(1, len(clauses))
    l = max((len(c) for c in clauses), default=1)
    steps, _, _ = est(u, n, l)
    return 4 * steps + 64


# ---------------------------------------------------------------------------
# swp extraction


@dataclass(frozen=True)
class SwpReport:
    swp: Formula
    conjuncts: tuple | None
    dropped: tuple
    wp: Formula
    trace: Trace
    steps: int
    bound: int

    def swp_clauses(self):
        if self.conjuncts is None:
            raise PrecondError("swp has disjunctive structure; use .swp")
        return list(self.conjuncts)


def _filter_node(node, c_clauses, dropped, positive, subsume_emitted, emitted):
    if isinstance(node, NLeaf):
        cl = node.clause
        if is_tautology(cl):
            dropped.append((cl, "tautology"))
            return None
        if positive:
            if any(theta_subsumes(cc, cl) for cc in c_clauses):
                dropped.append((cl, "subsumed-by-constraint"))
                return None
            if subsume_emitted and any(theta_subsumes(e, cl) for e in emitted):
                dropped.append((cl, "subsumed-by-emitted"))
                return None
            emitted.append(cl)
        return node
    if isinstance(node, NAnd):
        def flatten(n):
            for p in n.parts:
                if isinstance(p, NAnd):
                    yield from flatten(p)
                else:
                    yield p

        kept = []
        seen = set()
        for p in flatten(node):
            q = _filter_node(p, c_clauses, dropped, positive, subsume_emitted, emitted)
            if q is None:
                continue
            if isinstance(q, NLeaf):
                key = canonical_clause(q.clause)
                if key in seen:
                    continue
                seen.add(key)
            kept.append(q)
        if not kept:
            return None
        return kept[0] if len(kept) == 1 else NAnd(tuple(kept))
    if isinstance(node, NOr):
        parts = []
        for p in node.parts:
            branch_emitted = list(emitted) if subsume_emitted else emitted
            q = _filter_node(p, c_clauses, dropped, positive, subsume_emitted,
                             branch_emitted)
            if q is None:
                return None  # one disjunct reduced to true
            parts.append(q)
        return NOr(tuple(parts))
    # NNot: only polarity-independent drops inside
    sub = _filter_node(node.sub, c_clauses, dropped, False, False, emitted)
    if sub is None:
        return NNot(NAnd(()))
    return NNot(sub)


def _collect_conjuncts(node):
    """Leaf clauses if the node is purely conjunctive, else None."""
    if node is None:
        return []
    if isinstance(node, NLeaf):
        return [node.clause]
    if isinstance(node, NAnd):
        out = []
        for p in node.parts:
            sub = _collect_conjuncts(p)
            if sub is None:
                return None
            out.extend(sub)
        return out
    return None


def rewrite_swp(u, c, schema=None, max_conjuncts=10_000, selector=None,
                subsume_with_emitted=False):
    """Saturate the rewriting system on wp(u, c) and factor the result into
    kept conjuncts (the swp) and dropped ones with their justifications."""
    if schema is not None:
        u = normalize_update(u, schema)
    c_clauses = to_clauses(c)
    bound = rewrite_bound(u, c_clauses)
    rw = _Rewriter(selector=selector, max_conjuncts=max_conjuncts, bound=bound)
    if not c_clauses:
        root = NAnd(())
    elif len(c_clauses) == 1:
        root = WpApp(u, NLeaf(c_clauses[0]))
    else:
        root = WpApp(u, NAnd(tuple(NLeaf(cl) for cl in c_clauses)))
    result = rw.run(root)
    wp_formula = node_formula(result)
    raw_dropped = []
    filtered = _filter_node(result, c_clauses, raw_dropped, True,
                            subsume_with_emitted, [])
    dropped = []
    seen_drops = set()
    for cl, reason in raw_dropped:
        key = (canonical_clause(cl), reason)
        if key not in seen_drops:
            seen_drops.add(key)
            dropped.append((cl, reason))
    swp_formula = node_formula(filtered) if filtered is not None else FAnd(())
    conjuncts = _collect_conjuncts(filtered)
    return SwpReport(
        swp=swp_formula,
        conjuncts=tuple(conjuncts) if conjuncts is not None else None,
        dropped=tuple(dropped),
        wp=wp_formula,
        trace=rw.trace,
        steps=rw.steps,
        bound=bound,
    )


# ---------------------------------------------------------------------------
# confluence sampling


@dataclass(frozen=True)
class ConfluenceVerdict:
    confluent: bool
    orders: int
    detail: str = ""

    def __bool__(self):
        return self.confluent


def check_confluence_sample(u, c, n_orders=10, seed=0, extra_constants=3,
                            schema=None, max_conjuncts=10_000):
    """Rewrite under randomized redex-selection orders and check that all
    outcomes are pairwise equivalent (canonically equal, or failing that,
    logically equivalent on a brute-force domain)."""
    import random as _random

    from .oracle import equiv_bruteforce

    if schema is not None:
        u = normalize_update(u, schema)
        schema = None
    reports = [rewrite_swp(u, c, max_conjuncts=max_conjuncts)]
    for i in range(n_orders - 1):
        sel = _RandomSelector(_random.Random(seed * 7919 + i))
        reports.append(rewrite_swp(u, c, max_conjuncts=max_conjuncts, selector=sel))
    base = reports[0]
    base_sig = _swp_signature(base)
    for i, rep in enumerate(reports[1:], start=1):
        if _swp_signature(rep) == base_sig:
            continue
        verdict = equiv_bruteforce(base.swp, rep.swp, extra_constants)
        if not verdict:
            return ConfluenceVerdict(
                False, n_orders,
                f"order {i} produced an inequivalent result: "
                f"{verdict.counterexample}")
    return ConfluenceVerdict(True, n_orders)


def _swp_signature(report):
    if report.conjuncts is not None:
        return frozenset(canonical_clause(c) for c in report.conjuncts)
    return None
