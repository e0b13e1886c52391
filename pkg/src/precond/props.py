"""Property suites shared by the test suite, the fuzz CLI command and the
experiment scripts: every claim is checked against the brute-force oracles."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .logic import canonical_clause
from .datalog import Database, evaluate
from .oracle import (
    GenConfig, InstanceSpace, case_schema, eval_masked, exec_masked,
    generate_case,
)
from .rewrite import check_confluence_sample, rewrite_swp, wp_full
from .updates import normalize_update


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def summary(self):
        status = "ok" if self.ok else f"{len(self.violations)} violation(s)"
        return f"{self.name}: {self.cases} cases, {status}"


def _space_for(cfg, schema):
    sp = InstanceSpace(dict(cfg.relations), [chr(ord("a") + i)
                                             for i in range(cfg.domain_size)])
    extra = {p: schema.arity[p] for p in schema.snapshots}
    return sp, sp.initial_state(extra)


def _witness(sp, vec_bad):
    return sp.database((vec_bad & -vec_bad).bit_length() - 1)


def wp_soundness_suite(seeds, max_failures=5):
    """B |= wp_full(u,c) iff exec(u,B) |= c, exhaustively over the instance
    space of every generated case."""
    res = SuiteResult("wp-soundness")
    for seed in seeds:
        cfg = GenConfig(seed=seed)
        _, u, c = generate_case(cfg)
        schema = case_schema(cfg)
        nu = normalize_update(u, schema)
        sp, st = _space_for(cfg, schema)
        wp_vec = eval_masked(sp, wp_full(nu, c), st)
        cpost_vec = eval_masked(sp, c, exec_masked(sp, u, st))
        res.cases += 1
        diff = wp_vec ^ cpost_vec
        if diff:
            res.violations.append((seed, _witness(sp, diff)))
            if len(res.violations) >= max_failures:
                break
    return res


def swp_suite(seeds, max_failures=5):
    """Theorem-3 claims: given B |= c, B |= swp iff exec(u,B) |= c; and
    B |= wp implies B |= swp on every B."""
    res = SuiteResult("swp-simplification")
    for seed in seeds:
        cfg = GenConfig(seed=seed)
        _, u, c = generate_case(cfg)
        schema = case_schema(cfg)
        nu = normalize_update(u, schema)
        report = rewrite_swp(nu, c)
        sp, st = _space_for(cfg, schema)
        swp_vec = eval_masked(sp, report.swp, st)
        wp_vec = eval_masked(sp, report.wp, st)
        c_vec = eval_masked(sp, c, st)
        cpost_vec = eval_masked(sp, c, exec_masked(sp, u, st))
        res.cases += 1
        bad = (c_vec & (swp_vec ^ cpost_vec)) | (wp_vec & ~swp_vec & sp.full)
        if bad:
            res.violations.append((seed, _witness(sp, bad)))
            if len(res.violations) >= max_failures:
                break
    return res


def confluence_suite(seeds, n_orders=10, extra_constants=1, max_failures=5):
    res = SuiteResult("confluence-sampling")
    for seed in seeds:
        cfg = GenConfig(seed=seed)
        _, u, c = generate_case(cfg)
        schema = case_schema(cfg)
        nu = normalize_update(u, schema)
        verdict = check_confluence_sample(nu, c, n_orders=n_orders, seed=seed,
                                          extra_constants=extra_constants)
        res.cases += 1
        if not verdict:
            res.violations.append((seed, verdict.detail))
            if len(res.violations) >= max_failures:
                break
    return res


def termination_suite(seeds):
    """Every rewrite stays within its declared structural step bound (the
    engine asserts this; here we also record the slack observed)."""
    res = SuiteResult("termination-bound")
    worst = 0.0
    for seed in seeds:
        cfg = GenConfig(seed=seed)
        _, u, c = generate_case(cfg)
        schema = case_schema(cfg)
        nu = normalize_update(u, schema)
        report = rewrite_swp(nu, c)
        res.cases += 1
        if report.steps > report.bound:
            res.violations.append((seed, report.steps, report.bound))
        worst = max(worst, report.steps / report.bound)
    res.worst_ratio = worst
    return res


# -- the exponential blow-up family (discussion-section measurement) ---------


def blowup_family(k, positive=False):
    """Constraint with k occurrences of the updated predicate: negative
    occurrences resolve against an insert (worst case), positive ones do not.
    Returns (update, constraint, schema)."""
    from .logic import Clause, Const, Eq, FAtom, Literal, Rel, Var
    from .logic import clause_formula
    from .updates import InsertForeach, Schema

    schema = Schema()
    schema.declare("r", 1)
    schema.declare("q", k)
    vars_ = [Var(f"X{i+1}") for i in range(k)]
    lits = [Literal(Rel("r", (v,)), positive) for v in vars_]
    lits.append(Literal(Rel("q", tuple(vars_)), True))
    c = clause_formula(Clause(lits))
    x = Var("X1")
    u = InsertForeach((x,), FAtom(Eq((x,), (Const("a"),))), "r")
    return u, c, schema


def measure_blowup(ks=(1, 2, 3, 4, 5), positive=False, max_conjuncts=200_000):
    """Total literal count of the saturated wp for each k."""
    sizes = []
    for k in ks:
        u, c, schema = blowup_family(k, positive)
        report = rewrite_swp(u, c, schema=schema, max_conjuncts=max_conjuncts)
        total = _formula_literals(report.wp)
        sizes.append(total)
    return sizes


def _formula_literals(f):
    from .logic import FAtom

    if isinstance(f, FAtom):
        return 1
    if hasattr(f, "sub"):
        return _formula_literals(f.sub)
    return sum(_formula_literals(p) for p in f.parts)
