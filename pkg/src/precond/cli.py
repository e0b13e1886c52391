"""Command-line front end.

Results go to stdout, diagnostics to stderr.  Exit codes: 0 success,
1 parse or validation error, 2 property violation (fuzz, check --verify),
3 unsupported feature (hypothesis violations, non-linear programs, the
conjunct blow-up cap).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ParseError, PrecondError, UnsupportedError
from .logic import Clause, FAnd, FAtom, FClosed, FNot, Literal, Rel, formula_vars
from .datalog import evaluate
from .deductive import (
    check_hypotheses, delta_qualified_insert, delta_saturation, prime_program,
    wp_deductive,
)
from .oracle import eval_sentence, exec_update
from .rewrite import rewrite_swp, wp_full
from .syntax import (
    Parser, print_clause, print_database, print_formula, print_program,
    print_rule, print_update,
)
from .updates import (
    DeleteForeach, InsertForeach, Schema, Seq, Skip, normalize_update,
    qual_literals, update_foreachs,
)


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


class Inputs:
    """Parse the given files against one shared schema."""

    def __init__(self, args):
        self.parser = Parser(Schema())
        self.constraint = None
        self.update = None
        self.program = None
        self.database = None
        if getattr(args, "rules", None):
            self.program = self.parser.parse_program(_read(args.rules))
        if getattr(args, "constraint", None):
            self.constraint = self.parser.parse_constraint(_read(args.constraint))
        if getattr(args, "update", None):
            self.update = self.parser.parse_update(_read(args.update))
        if getattr(args, "db", None):
            self.database = self.parser.parse_database(_read(args.db))

    @property
    def schema(self):
        return self.parser.schema


def _print_wp_formula(f):
    """Prefer the '!exists' rendering for pure negative-witness sentences."""
    if isinstance(f, FAnd) and not f.parts:
        return "true"
    clause = _single_negative_clause(f)
    if clause is not None:
        lit = next(iter(clause.literals))
        names = sorted({v.name for v in formula_vars(FAtom(lit.atom))})
        if names:
            head = print_clause(Clause([lit.negated()])).strip()
            return f"!exists {','.join(names)}: {head}"
    return print_formula(f)


def _single_negative_clause(f):
    from .logic import to_clauses

    try:
        cls = to_clauses(f)
    except PrecondError:
        return None
    if len(cls) == 1:
        lits = list(cls[0].literals)
        if len(lits) == 1 and not lits[0].positive and isinstance(lits[0].atom, Rel):
            return cls[0]
    return None


def cmd_wp(args):
    inp = Inputs(args)
    u = normalize_update(inp.update, inp.schema)
    if inp.program is not None:
        report = check_hypotheses(inp.program, u, inp.constraint)
        if not report:
            for v in report.violations:
                print(f"hypothesis violation: {v}", file=sys.stderr)
            return 3
        formula, program = wp_deductive(u, inp.constraint, inp.program)
        print("wp:", _print_wp_formula(formula))
        print("program:")
        print(print_program(program))
        return 0
    print("wp:", print_formula(wp_full(u, inp.constraint)))
    return 0


def cmd_swp(args):
    inp = Inputs(args)
    report = rewrite_swp(inp.update, inp.constraint, schema=inp.schema,
                         max_conjuncts=args.max_conjuncts,
                         subsume_with_emitted=args.subsume_emitted)
    print("swp:", _print_wp_formula(report.swp) if not report.conjuncts
          else " & ".join(f"({print_clause(c)})" for c in sorted(
              report.conjuncts, key=print_clause)))
    for clause, reason in sorted(report.dropped,
                                 key=lambda d: (print_clause(d[0]), d[1])):
        print(f"dropped: {print_clause(clause)}   [{reason}]")
    if args.trace:
        print("trace:")
        print(report.trace.render())
    return 0


def cmd_exec(args):
    inp = Inputs(args)
    post = exec_update(inp.update, inp.database)
    original = {p for p in inp.schema.arity if p not in inp.schema.snapshots}
    print(print_database(post.restrict(original)))
    return 0


def cmd_check(args):
    inp = Inputs(args)
    report = rewrite_swp(inp.update, inp.constraint, schema=inp.schema)
    b = inp.database
    holds = eval_sentence(report.swp, b)
    print(f"B |= swp: {'true' if holds else 'false'}")
    if args.verify:
        if not eval_sentence(inp.constraint, b):
            print("note: B does not satisfy the constraint; the swp verdict "
                  "is not binding", file=sys.stderr)
            return 0
        post = exec_update(inp.update, b)
        actual = eval_sentence(inp.constraint, post)
        print(f"exec cross-check: post-state satisfies constraint: "
              f"{'true' if actual else 'false'}")
        if actual != holds:
            print("violation: swp verdict disagrees with execution",
                  file=sys.stderr)
            return 2
    return 0


def cmd_prime(args):
    inp = Inputs(args)
    pp = prime_program(inp.program, args.predicate)
    print(print_program(pp.program))
    return 0


def cmd_delta(args):
    inp = Inputs(args)
    u = normalize_update(inp.update, inp.schema)
    report = check_hypotheses(inp.program, u, inp.constraint)
    if not report:
        for v in report.violations:
            print(f"hypothesis violation: {v}", file=sys.stderr)
        return 3
    foreachs = list(update_foreachs(u))
    if not foreachs or any(isinstance(fe, DeleteForeach) for fe in foreachs):
        raise UnsupportedError("delta simplification handles insertions only")
    targets = {fe.target for fe in foreachs}
    if len(targets) > 1:
        raise UnsupportedError("delta simplification handles one target predicate")
    ground_atoms = _ground_inserts(foreachs)
    if ground_atoms is not None:
        result = delta_saturation(inp.program, ground_atoms, inp.constraint,
                                  prune=not args.no_prune)
    else:
        if len(foreachs) != 1:
            raise UnsupportedError(
                "qualified delta insertion takes a single foreach")
        fe = foreachs[0]
        result = delta_qualified_insert(inp.program, fe.target, fe.qual,
                                        inp.constraint, phi_vars=fe.vars)
    if result.safe:
        print("update is safe: no derivable fact can violate the constraint")
        return 0
    print("program:")
    print(print_program(result.program, provenance=result.provenance))
    for rule in result.pruned:
        print(f"% pruned: {print_rule(rule)}", file=sys.stderr)
    print("wp:", _print_wp_formula(result.wp_formula))
    return 0


def _ground_inserts(foreachs):
    """Match a sequence of ground insertions insert_R(d1..), .., returning
    the inserted atoms, or None when a qualification is not ground."""
    from .logic import Const, Eq

    atoms = []
    for fe in foreachs:
        if not isinstance(fe, InsertForeach):
            return None
        lits = qual_literals(fe.qual)
        if len(lits) != 1 or not isinstance(lits[0].atom, Eq) or not lits[0].positive:
            return None
        eq = lits[0].atom
        if eq.left != fe.vars or any(not isinstance(t, Const) for t in eq.right):
            return None
        atoms.append(Rel(fe.target, eq.right))
    return atoms


def cmd_fuzz(args):
    from . import props

    seeds = range(args.seed, args.seed + args.cases)
    suites = [
        props.wp_soundness_suite(seeds),
        props.swp_suite(seeds),
        props.confluence_suite(range(args.seed, args.seed + max(1, args.cases // 5)),
                               n_orders=args.orders),
        props.termination_suite(seeds),
    ]
    bad = False
    for suite in suites:
        print(suite.summary())
        for v in suite.violations:
            bad = True
            print(f"  violation: {v}", file=sys.stderr)
    return 2 if bad else 0


def build_arg_parser():
    ap = argparse.ArgumentParser(
        prog="precond",
        description="Weakest-precondition generation and simplification for "
                    "database integrity constraints")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        return p

    p = add("wp", cmd_wp, help="full weakest precondition")
    p.add_argument("constraint", help=".con file")
    p.add_argument("update", help=".upd file")
    p.add_argument("--rules", help=".dl program (deductive mode)")

    p = add("swp", cmd_swp, help="simplified weakest precondition")
    p.add_argument("constraint")
    p.add_argument("update")
    p.add_argument("--trace", action="store_true", help="print the derivation")
    p.add_argument("--max-conjuncts", type=int, default=10_000,
                   help="blow-up cap on generated conjuncts")
    p.add_argument("--subsume-emitted", action="store_true",
                   help="also drop conjuncts subsumed by earlier swp conjuncts")

    p = add("exec", cmd_exec, help="run an update on a database")
    p.add_argument("update")
    p.add_argument("db")

    p = add("check", cmd_check, help="evaluate the swp on a database")
    p.add_argument("constraint")
    p.add_argument("update")
    p.add_argument("db")
    p.add_argument("--verify", action="store_true",
                   help="cross-check the verdict against execution")

    p = add("prime", cmd_prime, help="primed (post-state) program copy")
    p.add_argument("rules", help=".dl program")
    p.add_argument("predicate")

    p = add("delta", cmd_delta, help="delta program for an insertion update")
    p.add_argument("constraint")
    p.add_argument("update")
    p.add_argument("--rules", required=True, help=".dl program")
    p.add_argument("--no-prune", action="store_true",
                   help="keep redundant saturation by-products")

    p = add("fuzz", cmd_fuzz, help="run the property suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--orders", type=int, default=5,
                   help="rewrite orders per confluence sample")
    return ap


def main(argv=None):
    ap = build_arg_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except UnsupportedError as e:
        print(f"unsupported: {e}", file=sys.stderr)
        return 3
    except PrecondError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
