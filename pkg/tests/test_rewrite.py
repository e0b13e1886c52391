"""The substitution transformer and the nine-rule rewriting system."""

import pytest

from precond import (
    BlowupError, Clause, Const, Literal, Rel, SubstMode, Var, canonical_clause,
    check_confluence_sample, equiv_bruteforce, eval_sentence, exec_update,
    normalize_update, rewrite_swp, substitute, to_clauses, wp_full,
)
from precond.logic import FAnd, clause_formula, clauses_formula, f_and
from precond.oracle import InstanceSpace, eval_masked, exec_masked
from precond.syntax import print_clause, print_formula

from conftest import parse_all


def canon(clauses):
    return {canonical_clause(c) for c in clauses}


def swp_clauses(report):
    assert report.conjuncts is not None
    return canon(report.conjuncts)


# ---------------------------------------------------------------------------
# substitute


def test_substitute_all_union():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="foreach X : p(X) do insert r(X)")
    u = env["update"]
    got = substitute(env["constraint"], "r", SubstMode.ALL_UNION, u.qual, u.vars)
    want = env["parser"].parse_constraint("forall X: (r(X) | p(X)) -> q(X)")
    assert canon(to_clauses(got)) == canon(to_clauses(want))


def test_substitute_chain_matches_sequence_result():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="foreach X : s(X) do delete r(X)")
    u = env["update"]
    step1 = substitute(env["constraint"], "r", SubstMode.ALL_DIFF, u.qual, u.vars)
    p2 = env["parser"].parse_update("foreach X : p(X) do insert r(X)")
    step2 = substitute(step1, "r", SubstMode.ALL_UNION, p2.qual, p2.vars)
    want = env["parser"].parse_constraint(
        "forall X: ((r(X) & !s(X)) | p(X)) -> q(X)")
    assert canon(to_clauses(step2)) == canon(to_clauses(want))


def test_substitute_absent_predicate_is_identity():
    env = parse_all(constraint="forall X: p(X) -> q(X)",
                    update="foreach X : s(X) do insert r(X)")
    u = env["update"]
    got = substitute(env["constraint"], "r", SubstMode.ALL_UNION, u.qual, u.vars)
    assert got == env["constraint"]


def test_substitute_positive_and_negative_modes():
    env = parse_all(constraint="forall X: r(X) -> (q(X) | r(X))",
                    update="foreach X : p(X) do insert r(X)")
    u = env["update"]
    pos = substitute(env["constraint"], "r", SubstMode.POS_UNION, u.qual, u.vars)
    # only the positive occurrence gains the disjunct
    want_pos = env["parser"].parse_constraint("forall X: r(X) -> (q(X) | r(X) | p(X))")
    assert canon(to_clauses(pos)) == canon(to_clauses(want_pos))
    neg = substitute(env["constraint"], "r", SubstMode.NEG_UNION, u.qual, u.vars)
    want_neg = env["parser"].parse_constraint(
        "forall X: (r(X) & !p(X)) -> (q(X) | r(X))")
    assert canon(to_clauses(neg)) == canon(to_clauses(want_neg))


def test_substitute_arity_mismatch():
    from precond import ArityError

    env = parse_all(constraint="forall X,Y: r(X,Y) -> q(X,Y)",
                    update="foreach X : p(X) do insert s(X)")
    u = env["update"]
    with pytest.raises(ArityError):
        substitute(env["constraint"], "r", SubstMode.ALL_UNION, u.qual, u.vars)


# ---------------------------------------------------------------------------
# wp_full


def test_wp_full_insert():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="foreach X : p(X) do insert r(X)")
    got = wp_full(env["update"], env["constraint"])
    want = env["parser"].parse_constraint("forall X: (r(X) | p(X)) -> q(X)")
    assert canon(to_clauses(got)) == canon(to_clauses(want))


def test_wp_full_sequence():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="foreach X : s(X) do delete r(X) ; "
                           "foreach Y : p(Y) do insert r(Y)")
    got = wp_full(env["update"], env["constraint"])
    want = env["parser"].parse_constraint(
        "forall X: ((r(X) & !s(X)) | p(X)) -> q(X)")
    assert canon(to_clauses(got)) == canon(to_clauses(want))


def test_wp_full_if_true_reduces_to_constraint():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="if (a = a) then insert s(b)")
    got = wp_full(normalize_update(env["update"], env["schema"]),
                  env["constraint"])
    assert equiv_bruteforce(got, env["constraint"], extra_constants=1)


def test_wp_full_soundness_exhaustive_on_paper_pairs():
    cases = [
        ("forall X: r(X) -> q(X)", "foreach X : p(X) do insert r(X)",
         {"r": 1, "q": 1, "p": 1}),
        ("forall X: r(X) -> q(X)",
         "foreach X : s(X) do delete r(X) ; foreach Y : p(Y) do insert r(Y)",
         {"r": 1, "q": 1, "p": 1, "s": 1}),
        ("forall X,Y,Z: !p(X,Y) | !p(X,Z) | q(Y,Z)", "insert p(a,b)",
         {"p": 2, "q": 2}),
    ]
    for con, upd, rels in cases:
        env = parse_all(constraint=con, update=upd)
        nu = normalize_update(env["update"], env["schema"])
        w = wp_full(nu, env["constraint"])
        sp = InstanceSpace(rels, ["a", "b", "c"])
        st = sp.initial_state()
        wp_vec = eval_masked(sp, w, st)
        cpost = eval_masked(sp, env["constraint"],
                            exec_masked(sp, env["update"], st))
        assert wp_vec == cpost


# ---------------------------------------------------------------------------
# rewrite_swp on the three worked examples


def test_swp_insert_of_reflexive_pair_is_true():
    env = parse_all(
        constraint="forall X,Y,Z: (p(X,Y) & q(Y,Z)) -> (p(X,Z) | q(X,Z))",
        update="insert p(a,a)")
    report = rewrite_swp(env["update"], env["constraint"], schema=env["schema"])
    assert report.swp == FAnd(())
    reasons = sorted(reason for _, reason in report.dropped)
    assert reasons == ["subsumed-by-constraint", "tautology"]
    # drop soundness is mechanically checkable from the report
    from precond import is_tautology, theta_subsumes

    c_clauses = to_clauses(env["constraint"])
    for cl, reason in report.dropped:
        if reason == "tautology":
            assert is_tautology(cl)
        else:
            assert any(theta_subsumes(cc, cl) for cc in c_clauses)


def test_swp_delete_insert_sequence():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="foreach X : s(X) do delete r(X) ; "
                           "foreach Y : p(Y) do insert r(Y)")
    report = rewrite_swp(env["update"], env["constraint"], schema=env["schema"])
    want = env["parser"].parse_constraint("forall Y: p(Y) -> q(Y)")
    assert swp_clauses(report) == canon(to_clauses(want))


def test_swp_remark_simplification():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="foreach X : p(X) do insert r(X)")
    report = rewrite_swp(env["update"], env["constraint"], schema=env["schema"])
    want = env["parser"].parse_constraint("forall X: p(X) -> q(X)")
    assert swp_clauses(report) == canon(to_clauses(want))
    assert [reason for _, reason in report.dropped] == ["subsumed-by-constraint"]


def test_swp_three_conjunct_example():
    env = parse_all(constraint="forall X,Y,Z: !p(X,Y) | !p(X,Z) | q(Y,Z)",
                    update="insert p(a,b)")
    report = rewrite_swp(env["update"], env["constraint"], schema=env["schema"])
    a, b = Const("a"), Const("b")
    Y, Z = Var("Y"), Var("Z")
    want = [
        Clause([Literal(Rel("q", (b, b)), True)]),
        Clause([Literal(Rel("p", (a, Z)), False), Literal(Rel("q", (b, Z)), True)]),
        Clause([Literal(Rel("p", (a, Y)), False), Literal(Rel("q", (Y, b)), True)]),
    ]
    assert swp_clauses(report) == canon(want)
    assert [reason for _, reason in report.dropped] == ["subsumed-by-constraint"]


def test_swp_equals_wp_conjoined_with_dropped():
    env = parse_all(constraint="forall X,Y,Z: !p(X,Y) | !p(X,Z) | q(Y,Z)",
                    update="insert p(a,b)")
    report = rewrite_swp(env["update"], env["constraint"], schema=env["schema"])
    recombined = f_and((report.swp,
                        clauses_formula([cl for cl, _ in report.dropped])))
    assert equiv_bruteforce(report.wp, recombined, extra_constants=1)


def test_swp_strictly_weaker_than_wp():
    # the reflexive-insert example: swp is true, wp fails on any database
    # already violating the constraint in an untouched spot
    env = parse_all(
        constraint="forall X,Y,Z: (p(X,Y) & q(Y,Z)) -> (p(X,Z) | q(X,Z))",
        update="insert p(a,a)")
    report = rewrite_swp(env["update"], env["constraint"], schema=env["schema"])
    from precond import Database

    witness = Database({"p": frozenset({("b", "c")}),
                        "q": frozenset({("c", "b")})})
    assert eval_sentence(report.swp, witness, ["a", "b", "c"])
    assert not eval_sentence(report.wp, witness, ["a", "b", "c"])


def test_swp_conditional_keeps_disjunctive_structure():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="if (!s(a)) then insert r(a) else delete r(a)")
    report = rewrite_swp(env["update"], env["constraint"], schema=env["schema"])
    assert report.conjuncts is None
    # and it still satisfies the simplification contract on every database
    sp = InstanceSpace({"r": 1, "q": 1, "s": 1}, ["a", "b"])
    st = sp.initial_state()
    c_vec = eval_masked(sp, env["constraint"], st)
    swp_vec = eval_masked(sp, report.swp, st)
    cpost = eval_masked(sp, env["constraint"],
                        exec_masked(sp, env["update"], st))
    assert (c_vec & (swp_vec ^ cpost)) == 0
    wp_vec = eval_masked(sp, report.wp, st)
    assert (wp_vec & ~swp_vec & sp.full) == 0


def test_blowup_guard_raises():
    from precond.props import blowup_family

    u, c, schema = blowup_family(6)
    with pytest.raises(BlowupError, match="blow-up"):
        rewrite_swp(u, c, schema=schema, max_conjuncts=30)


def test_rewrite_steps_within_declared_bound():
    for seed in range(40):
        from precond import GenConfig, generate_case
        from precond.oracle import case_schema

        cfg = GenConfig(seed=seed)
        _, u, c = generate_case(cfg)
        report = rewrite_swp(u, c, schema=case_schema(cfg))
        assert report.steps <= report.bound


# ---------------------------------------------------------------------------
# confluence


def test_confluence_on_worked_examples():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="foreach X : s(X) do delete r(X) ; "
                           "foreach Y : p(Y) do insert r(Y)")
    nu = normalize_update(env["update"], env["schema"])
    assert check_confluence_sample(nu, env["constraint"], n_orders=10, seed=0)

    env2 = parse_all(constraint="forall X,Y,Z: !p(X,Y) | !p(X,Z) | q(Y,Z)",
                     update="insert p(a,b)")
    nu2 = normalize_update(env2["update"], env2["schema"])
    assert check_confluence_sample(nu2, env2["constraint"], n_orders=10, seed=1)


def test_confluence_trivial_when_predicate_absent():
    env = parse_all(constraint="forall X: p(X) -> q(X)",
                    update="insert s(a)")
    nu = normalize_update(env["update"], env["schema"])
    assert check_confluence_sample(nu, env["constraint"], n_orders=5, seed=2)


# ---------------------------------------------------------------------------
# trace


def test_trace_records_rules_and_serializes():
    import json

    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="foreach X : s(X) do delete r(X) ; "
                           "foreach Y : p(Y) do insert r(Y)")
    report = rewrite_swp(env["update"], env["constraint"], schema=env["schema"])
    rules = [s.rule for s in report.trace.steps]
    assert rules[0] == "R5"
    assert "R2" in rules and "R3" in rules and "R8" in rules
    doc = json.loads(report.trace.to_json())
    assert doc[0]["step"] == 1 and {"rule", "redex", "result"} <= set(doc[0])


def test_trace_uses_negation_rule_for_negated_guards():
    env = parse_all(constraint="forall X: r(X) -> q(X)",
                    update="foreach Y : p(Y) do insert r(Y) ; "
                           "if (!s(a)) then insert r(a)")
    report = rewrite_swp(env["update"], env["constraint"], schema=env["schema"])
    rules = [s.rule for s in report.trace.steps]
    assert "R6" in rules and "R7" in rules and "R9" in rules
