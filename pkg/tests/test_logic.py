"""Core symbolic operations, checked against small brute-force oracles."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from precond import (
    Clause, Const, Eq, Literal, Rel, Var, apply_substitution,
    binary_resolvents_on, canonical_clause, equiv_bruteforce, is_tautology,
    mgu, res_r, simplify_disequalities, theta_subsumes, to_clauses, to_dnf,
)
from precond.logic import (
    FAtom, FNot, clause_formula, clauses_formula, close_formula, f_and,
    f_implies, f_or,
)
from precond.oracle import InstanceSpace, eval_masked

X, Y, Z = Var("X"), Var("Y"), Var("Z")
a, b, c = Const("a"), Const("b"), Const("c")


def lit(pred, *args, positive=True):
    return Literal(Rel(pred, tuple(args)), positive)


def clause(*lits):
    return Clause(lits)


def same_clause_set(got, expected):
    return {canonical_clause(x) for x in got} == {canonical_clause(x) for x in expected}


# ---------------------------------------------------------------------------
# unification


def test_mgu_binds_variables_both_ways():
    s = mgu(Rel("p", (X, Y)), Rel("p", (a, Z)))
    assert s == {X: a, Y: Z} or s == {X: a, Z: Y}


def test_mgu_constant_clash():
    assert mgu(Rel("p", (a,)), Rel("p", (b,))) is None


def test_mgu_repeated_variable_clash():
    assert mgu(Rel("p", (X, X)), Rel("p", (a, b))) is None


def test_mgu_idempotent():
    a1, a2 = Rel("p", (X, Y, X)), Rel("p", (Y, Z, Z))
    s = mgu(a1, a2)
    assert s is not None
    from precond.logic import subst_atom

    once = subst_atom(a1, s)
    assert subst_atom(once, s) == once
    assert all(v != t for v, t in s.items())


# ---------------------------------------------------------------------------
# substitution on clauses


def test_apply_substitution_replaces_everywhere():
    cl = clause(lit("p", X, positive=False), lit("q", X))
    got = apply_substitution(cl, {X: a})
    assert got == clause(lit("p", a, positive=False), lit("q", a))


def test_apply_empty_substitution_is_identity():
    cl = clause(lit("p", X), lit("q", Y))
    assert apply_substitution(cl, {}) == cl


def test_apply_substitution_collapses_duplicates():
    cl = clause(lit("p", X), lit("p", Y))
    assert apply_substitution(cl, {X: Y}) == clause(lit("p", Y))


# ---------------------------------------------------------------------------
# disequality simplification


def test_simplify_tuple_disequality_substitutes_constants():
    # the resolvent simplification of the second resolution example
    cl = Clause([lit("q", Y, Z), Literal(Eq((X, Y), (a, b)), False),
                 lit("r", X, Z, positive=False)])
    got = simplify_disequalities(cl)
    assert got == clause(lit("q", b, Z), lit("r", a, Z, positive=False))


def test_simplify_preserves_equivalence_brute_force():
    # a clause with chained variable disequalities; its simplified form must
    # agree with it on every database over the mentioned constants plus one
    cl = Clause([lit("p", X), Literal(Eq((X,), (a,)), False),
                 Literal(Eq((X,), (b,)), False)])
    got = simplify_disequalities(cl)
    verdict = equiv_bruteforce(clause_formula(cl), clause_formula(got),
                               extra_constants=1)
    assert verdict.equivalent
    # with two disequalities on distinct constants the clause is valid
    assert is_tautology(got)


def test_simplify_drops_false_ground_disjuncts():
    cl = Clause([lit("p", X), Literal(Eq((a,), (b,)), True)])  # a = b is false
    assert simplify_disequalities(cl) == clause(lit("p", X))
    cl2 = Clause([lit("p", X), Literal(Eq((a,), (a,)), False)])  # a != a
    assert simplify_disequalities(cl2) == clause(lit("p", X))


def test_simplify_keeps_true_ground_disjuncts_as_tautology_markers():
    cl = Clause([lit("p", X), Literal(Eq((a,), (b,)), False)])  # a != b is true
    got = simplify_disequalities(cl)
    assert is_tautology(got)
    assert equiv_bruteforce(clause_formula(cl), clause_formula(got), 1)


@given(st.integers(0, 2 ** 16 - 1))
@settings(max_examples=60, deadline=None)
def test_simplify_equivalence_random(bits):
    # random clauses over p/1, q/2 with equality literals
    rnd = []
    pool = [
        lit("p", X), lit("p", a, positive=False), lit("q", X, Y),
        lit("q", Y, b, positive=False),
        Literal(Eq((X, Y), (a, b)), False),
        Literal(Eq((X,), (Y,)), False),
        Literal(Eq((X,), (b,)), True),
        Literal(Eq((a,), (a,)), False),
    ]
    for i, l in enumerate(pool):
        if (bits >> i) & 1:
            rnd.append(l)
    if not rnd:
        return
    cl = Clause(rnd)
    got = simplify_disequalities(cl)
    assert equiv_bruteforce(clause_formula(cl), clause_formula(got), 1)


# ---------------------------------------------------------------------------
# resolution


def test_binary_resolvents_first_example():
    c1 = clause(lit("r", X, Y, positive=False), lit("q", Y, Z))
    c2 = clause(lit("r", X, Y), lit("q", X, Y, positive=False))
    got = binary_resolvents_on(c1, c2, "r")
    want = [clause(lit("q", Y, Z), lit("q", X, Y, positive=False))]
    assert same_clause_set(got, want)


def test_binary_resolvents_second_example():
    c1 = clause(lit("r", X, Y, positive=False), lit("r", X, Z, positive=False),
                lit("q", Y, Z))
    c2 = Clause([lit("r", X, Y), Literal(Eq((X, Y), (a, b)), False)])
    got = binary_resolvents_on(c1, c2, "r")
    want = [clause(lit("r", a, Z, positive=False), lit("q", b, Z)),
            clause(lit("r", a, Y, positive=False), lit("q", Y, b))]
    assert same_clause_set(got, want)


def test_binary_resolvents_no_r_literals():
    assert binary_resolvents_on(clause(lit("q", X)), clause(lit("p", X)), "r") == []


def test_res_r_examples():
    c1 = clause(lit("r", X, Y, positive=False), lit("q", Y, Z))
    c2 = clause(lit("r", X, Y), lit("q", X, Y, positive=False))
    got = res_r([c1, c2], "r")
    assert same_clause_set(got, [clause(lit("q", Y, Z), lit("q", X, Y, positive=False))])

    c3 = clause(lit("r", X, Y, positive=False), lit("r", X, Z, positive=False),
                lit("q", Y, Z))
    c4 = Clause([lit("r", X, Y), Literal(Eq((X, Y), (a, b)), False)])
    got = res_r([c3, c4], "r")
    assert same_clause_set(got, [
        clause(lit("r", a, Z, positive=False), lit("q", b, Z)),
        clause(lit("r", a, Y, positive=False), lit("q", Y, b))])


def test_res_r_no_complementary_pair():
    assert res_r([clause(lit("q", X)), clause(lit("p", X))], "r") == []


def test_resolution_soundness_small_models():
    # every resolvent is entailed by its premises on all databases (domain 2+1)
    cases = [
        (clause(lit("r", X, positive=False), lit("q", X)),
         clause(lit("r", a))),
        (clause(lit("r", X, Y, positive=False), lit("q", Y, X)),
         Clause([lit("r", X, Y), Literal(Eq((X, Y), (a, b)), False)])),
    ]
    for c1, c2 in cases:
        for res in binary_resolvents_on(c1, c2, "r"):
            premises = close_formula(clauses_formula([c1, c2]))
            entails = f_implies(premises, close_formula(clause_formula(res)))
            from precond.oracle import formula_vocabulary

            rels, consts = formula_vocabulary(entails)
            space = InstanceSpace(rels, sorted(consts) + ["u1"])
            vec = eval_masked(space, entails, space.initial_state())
            assert vec == space.full


# ---------------------------------------------------------------------------
# tautology and subsumption


def test_is_tautology_complementary_pair():
    cl = clause(lit("q", a, Z, positive=False), lit("p", a, Z), lit("q", a, Z))
    assert is_tautology(cl)


def test_is_tautology_distinct_atoms_is_not():
    assert not is_tautology(clause(lit("p", X), lit("p", Y, positive=False)))


def test_is_tautology_ground_equality():
    assert is_tautology(Clause([Literal(Eq((a,), (a,)), True)]))


def test_theta_subsumes_instance():
    c1 = clause(lit("r", X, positive=False), lit("q", X))
    c2 = clause(lit("r", a, positive=False), lit("q", a), lit("s", b))
    assert theta_subsumes(c1, c2)


def test_theta_subsumes_reflexive():
    c1 = clause(lit("r", X, positive=False), lit("q", X))
    assert theta_subsumes(c1, c1)


def test_theta_subsumes_repeated_variable():
    # oracle: try every substitution of X over {a, b}; none embeds q(X,X)
    # into {q(a,b)}, so the answer is fixed to False
    embeds = any(
        apply_substitution(clause(lit("q", X, X)), {X: t}).literals
        <= clause(lit("q", a, b)).literals
        for t in (a, b))
    assert embeds is False
    assert not theta_subsumes(clause(lit("q", X, X)), clause(lit("q", a, b)))


def test_theta_subsumption_implies_entailment():
    pairs = [
        (clause(lit("r", X, positive=False), lit("q", X)),
         clause(lit("r", a, positive=False), lit("q", a), lit("s", b))),
        (clause(lit("p", X, Y)), clause(lit("p", a, Z), lit("q", Z))),
        (clause(lit("p", X, X)), clause(lit("p", Y, Y), lit("q", Y))),
    ]
    for c1, c2 in pairs:
        if theta_subsumes(c1, c2):
            entails = f_implies(close_formula(clause_formula(c1)),
                                close_formula(clause_formula(c2)))
            assert equiv_bruteforce(entails, f_and(()), extra_constants=1)


# ---------------------------------------------------------------------------
# normal forms


def p0(name):
    return FAtom(Rel(name, ()))


def test_to_clauses_implication():
    f = f_implies(f_and((p0("p"), p0("q"))), p0("r"))
    got = to_clauses(f)
    want = [Clause([Literal(Rel("p", ()), False), Literal(Rel("q", ()), False),
                    Literal(Rel("r", ()), True)])]
    assert same_clause_set(got, want)


def test_to_clauses_single_clause_identity():
    cl = clause(lit("p", X, positive=False), lit("q", X))
    got = to_clauses(clause_formula(cl))
    assert same_clause_set(got, [cl])


def test_to_clauses_conjunction_of_implications():
    f = f_and((f_implies(p0("p"), p0("q")), f_implies(p0("r"), p0("s"))))
    got = to_clauses(f)
    want = [Clause([Literal(Rel("p", ()), False), Literal(Rel("q", ()), True)]),
            Clause([Literal(Rel("r", ()), False), Literal(Rel("s", ()), True)])]
    assert same_clause_set(got, want)


def test_to_dnf_examples():
    f = f_or((p0("p"), f_and((p0("q"), p0("r")))))
    got = to_dnf(f)
    assert sorted(sorted(repr(l) for l in conj) for conj in got) == [
        ["p"], ["q", "r"]]
    # conjunction of literals maps to itself
    f2 = f_and((p0("p"), FNot(p0("q"))))
    assert len(to_dnf(f2)) == 1
    # negated conjunction
    f3 = FNot(f_and((p0("p"), p0("q"))))
    got3 = to_dnf(f3)
    assert sorted(sorted(repr(l) for l in conj) for conj in got3) == [
        ["!p"], ["!q"]]


@st.composite
def formulas(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        pred = draw(st.sampled_from(["p", "q"]))
        arg = draw(st.sampled_from([X, Y, a]))
        return FAtom(Rel(pred, (arg,)))
    kind = draw(st.sampled_from(["and", "or", "not", "imp"]))
    if kind == "not":
        return FNot(draw(formulas(depth=depth - 1)))
    f1 = draw(formulas(depth=depth - 1))
    f2 = draw(formulas(depth=depth - 1))
    if kind == "and":
        return f_and((f1, f2))
    if kind == "or":
        return f_or((f1, f2))
    return f_implies(f1, f2)


@given(formulas())
@settings(max_examples=80, deadline=None)
def test_normal_forms_preserve_equivalence(f):
    cnf = clauses_formula(to_clauses(f))
    assert equiv_bruteforce(f, cnf, extra_constants=1)
    dnf_conjs = to_dnf(f)
    dnf = f_or(tuple(f_and(tuple(clause_formula(Clause([l])) for l in conj))
                     for conj in dnf_conjs)) if dnf_conjs else f_or(())
    assert equiv_bruteforce(f, dnf, extra_constants=1)
