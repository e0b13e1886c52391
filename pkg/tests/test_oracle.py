"""Concrete execution, evaluation and the brute-force oracles."""

import pytest

from precond import (
    Database, GenConfig, equiv_bruteforce, eval_sentence, exec_update,
    generate_case, normalize_update, parse_constraint, to_clauses,
)
from precond.logic import clauses_formula
from precond.oracle import InstanceSpace, case_schema, eval_masked, exec_masked
from precond.syntax import print_database, print_formula, print_update

from conftest import parse_all


def db(**rels):
    return Database({k: frozenset(v) for k, v in rels.items()})


# ---------------------------------------------------------------------------
# exec_update


def test_insert_on_empty_database():
    env = parse_all(update="insert p(a)")
    got = exec_update(env["update"], Database({}))
    assert got.get("p") == {("a",)}


def test_delete_then_insert_sequence():
    # hand execution: the delete removes r(1) (s selects it), then the
    # insert adds r(2) (p selects it)
    env = parse_all(update="foreach X : s(X) do delete r(X) ; "
                           "foreach Y : p(Y) do insert r(Y)")
    b = db(r={("1",)}, s={("1",)}, p={("2",)})
    got = exec_update(env["update"], b)
    assert got.get("r") == {("2",)}
    assert got.get("s") == {("1",)} and got.get("p") == {("2",)}


def test_insert_existing_fact_is_idempotent():
    env = parse_all(update="if (forall X: !p(X)) then insert q(a) else delete q(a)")
    b = db(p=set(), q={("a",)})
    got = exec_update(env["update"], b)
    assert got.get("q") == {("a",)}


def test_delete_of_absent_tuples_is_noop():
    env = parse_all(update="foreach X : p(X) do delete r(X)")
    b = db(p={("a",)}, r=set())
    assert exec_update(env["update"], b).get("r") == frozenset()


def test_insert_then_delete_restores_when_fact_was_absent():
    env = parse_all(update="insert p(a) ; delete p(a)")
    b = db(p={("b",)})
    assert exec_update(env["update"], b).get("p") == {("b",)}


def test_qualification_evaluates_on_the_pre_state():
    # inserting everything q holds of into q itself must not cascade
    env = parse_all(update="foreach X : q(X) | p(X) do insert q(X)")
    b = db(p={("a",)}, q={("b",)})
    got = exec_update(env["update"], b)
    assert got.get("q") == {("a",), ("b",)}
    # and the normalized (snapshot) form agrees
    nu = normalize_update(env["update"], env["schema"])
    got2 = exec_update(nu, b)
    assert got2.get("q") == got.get("q")


# ---------------------------------------------------------------------------
# eval_sentence


def test_eval_universal_implication():
    f = parse_constraint("forall X: r(X) -> q(X)")
    assert eval_sentence(f, db(r={("a",)}, q={("a",), ("b",)}))
    assert not eval_sentence(f, db(r={("a",)}, q=set()))


def test_eval_uses_active_domain():
    f = parse_constraint("q(X)")
    assert eval_sentence(f, db(q={("a",)}))          # domain {a}
    assert not eval_sentence(f, db(q={("a",)}, r={("b",)}))


# ---------------------------------------------------------------------------
# equivalence oracle


def test_equiv_reflexive():
    f = parse_constraint("r(X) -> q(X)")
    assert equiv_bruteforce(f, f, extra_constants=1)


def test_equiv_finds_counterexample():
    f = parse_constraint("r(X) -> q(X)")
    g = parse_constraint("r(X) -> s(X)")
    verdict = equiv_bruteforce(f, g, extra_constants=1)
    assert not verdict.equivalent
    assert verdict.counterexample is not None
    # the counterexample is replayable
    assert eval_sentence(f, verdict.counterexample) != eval_sentence(
        g, verdict.counterexample)


def test_equiv_instance_cap():
    from precond.errors import PrecondError

    f = parse_constraint("r(X,Y,Z) -> q(X,Y,Z)")
    with pytest.raises(PrecondError, match="cap"):
        equiv_bruteforce(f, f, extra_constants=3, max_instances=2 ** 10)


# ---------------------------------------------------------------------------
# masked space agrees with the single-database semantics


def test_masked_space_matches_pointwise_execution():
    for seed in range(25):
        cfg = GenConfig(seed=seed)
        b, u, c = generate_case(cfg)
        sp = InstanceSpace(dict(cfg.relations), ["a", "b", "c"])
        st = sp.initial_state()
        post = exec_masked(sp, u, st)
        idx = 0
        for j, (pred, tup) in enumerate(sp.cells):
            if tup in b.get(pred):
                idx |= 1 << j
        got = {pred: frozenset(t for t, v in cols.items() if (v >> idx) & 1)
               for pred, cols in post.items()}
        want = exec_update(u, b, domain=["a", "b", "c"])
        for pred in got:
            assert got[pred] == want.get(pred)
        vec = eval_masked(sp, c, st)
        assert bool((vec >> idx) & 1) == eval_sentence(c, b, ["a", "b", "c"])


# ---------------------------------------------------------------------------
# generation


def test_generate_case_is_deterministic():
    one = generate_case(GenConfig(seed=1))
    two = generate_case(GenConfig(seed=1))
    assert one[0] == two[0]
    assert print_update(one[1]) == print_update(two[1])
    assert print_formula(one[2]) == print_formula(two[2])


def test_generated_cases_normalize_cleanly():
    for seed in range(50):
        cfg = GenConfig(seed=seed)
        _, u, c = generate_case(cfg)
        schema = case_schema(cfg)
        nu = normalize_update(u, schema)
        from precond import is_normalized

        assert is_normalized(nu, schema)
        assert len(to_clauses(c)) == 1  # constraints are single clauses


def test_clause_view_agrees_with_formula_view():
    for seed in range(30):
        cfg = GenConfig(seed=seed)
        b, _, c = generate_case(cfg)
        cs = clauses_formula(to_clauses(c))
        assert eval_sentence(c, b) == eval_sentence(cs, b)


def test_counterexample_prints_as_database():
    f = parse_constraint("r(X) -> q(X)")
    g = parse_constraint("r(X) -> s(X)")
    verdict = equiv_bruteforce(f, g, extra_constants=1)
    text = print_database(verdict.counterexample)
    from precond import parse_database

    assert parse_database(text) == verdict.counterexample.restrict(
        {p for p, ts in verdict.counterexample.relations.items() if ts})
