"""Weakest-precondition generation and simplification for database
integrity constraints: given a constraint and an update program, derive the
weakest precondition, simplify it by resolution against the updated
predicates, and (for deductive rule bases) build delta programs that check
just the potentially new facts."""

from .logic import (
    Atom, Clause, Const, Eq, FAnd, FAtom, FClosed, FNot, FOr, Formula,
    Literal, Rel, Term, Var, apply_substitution, binary_resolvents_on,
    canonical_clause, is_tautology, mgu, res_r, simplify_disequalities,
    theta_subsumes, to_clauses, to_dnf,
)
from .updates import (
    DeleteForeach, If, InsertForeach, NormalizedUpdate, Schema, Seq, Skip,
    Update, is_normalized, normalize_update,
)
from .syntax import (
    Parser, parse_constraint, parse_database, parse_program, parse_update,
    print_clause, print_database, print_formula, print_program, print_rule,
    print_update,
)
from .datalog import (
    Database, DatalogProgram, Interpretation, Rule, depends, evaluate,
    naive_evaluate, stratify,
)
from .rewrite import (
    SubstMode, SwpReport, check_confluence_sample, rewrite_swp, substitute,
    wp_full,
)
from .deductive import (
    DeltaResult, PrimedProgram, check_hypotheses, delta_qualified_insert,
    delta_saturation, prime_program, wp_deductive,
)
from .oracle import (
    GenConfig, InstanceSpace, Verdict, equiv_bruteforce, eval_sentence,
    exec_update, generate_case,
)
from .errors import (
    ArityError, BlowupError, NonStratifiableError, ParseError, PrecondError,
    UnsupportedError,
)
