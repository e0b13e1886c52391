"""Parsing and printing for the four file formats.

.con  one constraint formula          .upd  one update program
.dl   Datalog rules, '.'-terminated   .db   ground facts, '.'-terminated

Lexical convention: variables start with an uppercase letter, constants and
predicate names with a lowercase letter or digit.  '%' starts a comment.
The full grammar ships in docs/grammar.ebnf.
"""

from __future__ import annotations

import re

from .errors import ArityError, ParseError, UnsupportedError
from .logic import (
    Clause, Const, Eq, FAnd, FAtom, FClosed, FNot, FOr, Formula, Literal,
    Rel, Var, close_formula, f_and, f_implies, f_not, f_or, formula_vars,
)
from .datalog import Database, DatalogProgram, Rule
from .updates import (
    DeleteForeach, EDB, IDB, If, InsertForeach, Schema, Seq, Skip, Update,
    validate_update,
)

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<arrow>->|:-)
  | (?P<neq>!=)
  | (?P<sym>[(),:;.=&|!])
  | (?P<name>[A-Za-z0-9_'][A-Za-z0-9_']*)
""", re.VERBOSE)

KEYWORDS = {"forall", "exists", "foreach", "do", "insert", "delete",
            "if", "then", "else", "skip"}


class _Tokens:
    def __init__(self, text):
        self.toks = []
        line, col = 1, 1
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            lexeme = m.group(0)
            if m.lastgroup != "ws":
                kind = m.lastgroup
                if kind == "name" and lexeme in KEYWORDS:
                    kind = "kw"
                self.toks.append((kind, lexeme, line, col))
            nl = lexeme.count("\n")
            if nl:
                line += nl
                col = len(lexeme) - lexeme.rfind("\n")
            else:
                col += len(lexeme)
            pos = m.end()
        self.toks.append(("eof", "", line, col))
        self.i = 0

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        if t[0] != "eof":
            self.i += 1
        return t

    def expect(self, lexeme):
        kind, lex, line, col = self.next()
        if lex != lexeme:
            raise ParseError(f"expected {lexeme!r}, found {lex or 'end of input'!r}", line, col)

    def error(self, msg):
        _, lex, line, col = self.peek()
        raise ParseError(f"{msg} (found {lex or 'end of input'!r})", line, col)


def _is_varname(name):
    return name[0].isupper()


def _has_quantifier(f):
    if isinstance(f, FClosed):
        return True
    if isinstance(f, FNot):
        return _has_quantifier(f.sub)
    if isinstance(f, (FAnd, FOr)):
        return any(_has_quantifier(p) for p in f.parts)
    return False


def _term(name):
    return Var(name) if _is_varname(name) else Const(name)


class Parser:
    """Recursive-descent parser; one instance per schema session."""

    def __init__(self, schema=None):
        self.schema = schema if schema is not None else Schema()

    # -- shared pieces ------------------------------------------------------

    def _declare(self, pred, arity, ts, kind=None):
        try:
            self.schema.declare(pred, arity, kind)
        except ArityError as e:
            _, _, line, col = ts.peek()
            raise ParseError(str(e), line, col) from None

    def _term_list(self, ts):
        terms = [self._one_term(ts)]
        while ts.peek()[1] == ",":
            ts.next()
            terms.append(self._one_term(ts))
        return tuple(terms)

    def _one_term(self, ts):
        kind, lex, line, col = ts.next()
        if kind != "name":
            raise ParseError(f"expected a term, found {lex!r}", line, col)
        return _term(lex)

    def _term_tuple(self, ts):
        """A term or a parenthesized tuple of terms."""
        if ts.peek()[1] == "(":
            ts.next()
            terms = self._term_list(ts)
            ts.expect(")")
            return terms
        return (self._one_term(ts),)

    # -- formulas -----------------------------------------------------------

    def parse_constraint(self, text, allow_exists=False):
        ts = _Tokens(text)
        f = self._formula(ts, allow_exists)
        if ts.peek()[0] != "eof":
            ts.error("trailing input after formula")
        return f

    def _formula(self, ts, allow_exists):
        kind, lex, line, col = ts.peek()
        if lex in ("forall", "exists"):
            ts.next()
            if lex == "exists" and not allow_exists:
                raise ParseError(
                    "existential quantifiers are not supported in relational "
                    "mode (such constraints cannot be simplified)", line, col)
            self._term_list(ts)  # the variable list is decorative; FClosed
            ts.expect(":")      # binds every free variable of the body
            return close_formula(self._formula(ts, allow_exists))
        return self._implication(ts, allow_exists)

    def _implication(self, ts, allow_exists):
        left = self._disjunction(ts, allow_exists)
        if ts.peek()[1] == "->":
            ts.next()
            right = self._implication(ts, allow_exists)
            return f_implies(left, right)
        return left

    def _disjunction(self, ts, allow_exists):
        parts = [self._conjunction(ts, allow_exists)]
        while ts.peek()[1] == "|":
            ts.next()
            parts.append(self._conjunction(ts, allow_exists))
        return f_or(parts) if len(parts) > 1 else parts[0]

    def _conjunction(self, ts, allow_exists):
        parts = [self._unary(ts, allow_exists)]
        while ts.peek()[1] == "&":
            ts.next()
            parts.append(self._unary(ts, allow_exists))
        return f_and(parts) if len(parts) > 1 else parts[0]

    def _unary(self, ts, allow_exists):
        kind, lex, line, col = ts.peek()
        if lex == "!":
            ts.next()
            return f_not(self._unary(ts, allow_exists))
        if lex in ("forall", "exists"):
            return self._formula(ts, allow_exists)
        if lex == "(":
            # could be a parenthesized formula or a tuple equality
            save = ts.i
            try:
                ts.next()
                terms = self._term_list(ts)
                ts.expect(")")
                op = ts.peek()[1]
                if op not in ("=", "!="):
                    raise ParseError("not a tuple equality")
            except ParseError:
                ts.i = save
                ts.next()
                f = self._formula(ts, allow_exists)
                ts.expect(")")
                return f
            ts.next()
            rhs = self._term_tuple(ts)
            if len(rhs) != len(terms):
                raise ParseError("tuple equality sides differ in length", line, col)
            atom = Eq(terms, rhs)
            return FNot(FAtom(atom)) if op == "!=" else FAtom(atom)
        return self._atom_formula(ts)

    def _atom_formula(self, ts):
        kind, lex, line, col = ts.next()
        if kind != "name":
            raise ParseError(f"expected an atom, found {lex or 'end of input'!r}", line, col)
        if _is_varname(lex) or ts.peek()[1] in ("=", "!="):
            left = (_term(lex),)
            op = ts.next()[1]
            if op not in ("=", "!="):
                raise ParseError(f"expected '=' or '!=' after term {lex!r}", line, col)
            rhs = self._term_tuple(ts)
            if len(rhs) != 1:
                raise ParseError("tuple equality sides differ in length", line, col)
            atom = Eq(left, rhs)
            return FNot(FAtom(atom)) if op == "!=" else FAtom(atom)
        pred = lex
        args = ()
        if ts.peek()[1] == "(":
            ts.next()
            args = self._term_list(ts)
            ts.expect(")")
        self._declare(pred, len(args), ts)
        return FAtom(Rel(pred, args))

    # -- updates ------------------------------------------------------------

    def parse_update(self, text):
        ts = _Tokens(text)
        u = self._update_seq(ts)
        if ts.peek()[0] != "eof":
            ts.error("trailing input after update")
        validate_update(u, self.schema)
        return u

    def _update_seq(self, ts):
        items = [self._update_item(ts)]
        while ts.peek()[1] == ";":
            ts.next()
            items.append(self._update_item(ts))
        out = items[0]
        for u in items[1:]:
            out = Seq(out, u)
        return out

    def _update_item(self, ts):
        kind, lex, line, col = ts.peek()
        if lex == "(":
            ts.next()
            u = self._update_seq(ts)
            ts.expect(")")
            return u
        if lex == "skip":
            ts.next()
            return Skip()
        if lex == "foreach":
            ts.next()
            vars_ = self._term_list(ts)
            if not all(isinstance(v, Var) for v in vars_):
                raise ParseError("foreach binds variables, found a constant", line, col)
            ts.expect(":")
            qual = self._formula(ts, allow_exists=False)
            if _has_quantifier(qual):
                raise ParseError("qualifications must be quantifier-free", line, col)
            ts.expect("do")
            return self._action(ts, vars_, qual)
        if lex == "if":
            ts.next()
            ts.expect("(")
            cond = self._formula(ts, allow_exists=False)
            ts.expect(")")
            ts.expect("then")
            then = self._update_item(ts)
            els = None
            if ts.peek()[1] == "else":
                ts.next()
                els = self._update_item(ts)
            return If(cond, then, els)
        if lex in ("insert", "delete"):
            # ground sugar: insert p(a,b) stands for
            # foreach X1,X2 : (X1,X2) = (a,b) do insert p(X1,X2)
            ts.next()
            pred, args = self._ground_atom(ts)
            if not args:
                vars_, qual = (), FAnd(())
            else:
                vars_ = tuple(Var(f"X{i+1}") for i in range(len(args)))
                qual = FAtom(Eq(vars_, args))
            self._declare(pred, len(args), ts)
            cls = InsertForeach if lex == "insert" else DeleteForeach
            return cls(vars_, qual, pred)
        ts.error("expected an update instruction")

    def _ground_atom(self, ts):
        kind, lex, line, col = ts.next()
        if kind != "name" or _is_varname(lex):
            raise ParseError("expected a predicate name", line, col)
        args = ()
        if ts.peek()[1] == "(":
            ts.next()
            args = self._term_list(ts)
            ts.expect(")")
        bad = [t for t in args if isinstance(t, Var)]
        if bad:
            raise ParseError(
                f"ground insert/delete takes constants, found variable {bad[0].name}",
                line, col)
        return lex, args

    def _action(self, ts, vars_, qual):
        kind, lex, line, col = ts.next()
        if lex not in ("insert", "delete"):
            raise ParseError(f"expected insert or delete, found {lex!r}", line, col)
        pk, pred, pl, pc = ts.next()
        if pk != "name" or _is_varname(pred):
            raise ParseError("expected a predicate name", pl, pc)
        args = ()
        if ts.peek()[1] == "(":
            ts.next()
            args = self._term_list(ts)
            ts.expect(")")
        if args != vars_:
            raise ParseError(
                f"action arguments {args} must repeat the foreach variables {vars_}",
                pl, pc)
        self._declare(pred, len(vars_), ts)
        cls = InsertForeach if lex == "insert" else DeleteForeach
        return cls(vars_, qual, pred)

    # -- Datalog programs and databases --------------------------------------

    def parse_program(self, text):
        ts = _Tokens(text)
        rules = []
        while ts.peek()[0] != "eof":
            rules.append(self._rule(ts))
        return DatalogProgram(rules, self.schema)

    def _rule(self, ts):
        head = self._rule_atom(ts)
        body = []
        if ts.peek()[1] == ":-":
            ts.next()
            body.append(self._body_literal(ts))
            while ts.peek()[1] == ",":
                ts.next()
                body.append(self._body_literal(ts))
        ts.expect(".")
        self._declare(head.pred, len(head.args), ts, kind=IDB)
        for lit in body:
            if isinstance(lit.atom, Rel):
                self._declare(lit.atom.pred, len(lit.atom.args), ts)
        return Rule(head, tuple(body))

    def _rule_atom(self, ts):
        kind, lex, line, col = ts.next()
        if kind != "name" or _is_varname(lex):
            raise ParseError("expected a predicate name", line, col)
        args = ()
        if ts.peek()[1] == "(":
            ts.next()
            args = self._term_list(ts)
            ts.expect(")")
        return Rel(lex, args)

    def _body_literal(self, ts):
        positive = True
        if ts.peek()[1] == "!":
            ts.next()
            positive = False
        kind, lex, line, col = ts.peek()
        if kind == "name" and (_is_varname(lex) or ts.peek(1)[1] in ("=", "!=")):
            t = self._one_term(ts)
            op = ts.next()[1]
            if op not in ("=", "!="):
                raise ParseError(f"expected '=' or '!=', found {op!r}", line, col)
            rhs = self._one_term(ts)
            atom = Eq((t,), (rhs,))
            return Literal(atom, positive == (op == "="))
        atom = self._rule_atom(ts)
        return Literal(atom, positive)

    def parse_database(self, text):
        ts = _Tokens(text)
        rels = {}
        while ts.peek()[0] != "eof":
            kind, lex, line, col = ts.peek()
            atom = self._rule_atom(ts)
            ts.expect(".")
            bad = [t for t in atom.args if isinstance(t, Var)]
            if bad:
                raise ParseError(f"facts must be ground, found variable {bad[0].name}",
                                 line, col)
            self._declare(atom.pred, len(atom.args), ts)
            rels.setdefault(atom.pred, set()).add(tuple(t.name for t in atom.args))
        return Database({p: frozenset(ts_) for p, ts_ in rels.items()})


# module-level convenience wrappers ------------------------------------------


def parse_constraint(text, schema=None):
    return Parser(schema).parse_constraint(text)


def parse_update(text, schema=None):
    return Parser(schema).parse_update(text)


def parse_program(text, schema=None):
    return Parser(schema).parse_program(text)


def parse_database(text, schema=None):
    return Parser(schema).parse_database(text)


# ---------------------------------------------------------------------------
# printing (deterministic; output re-parses to a structurally identical value)


def print_term(t):
    return t.name


def print_atom(a):
    if isinstance(a, Rel):
        if not a.args:
            return a.pred
        return f"{a.pred}({','.join(print_term(t) for t in a.args)})"

    def side(ts):
        if len(ts) == 1:
            return print_term(ts[0])
        return "(" + ",".join(print_term(t) for t in ts) + ")"

    return f"{side(a.left)} = {side(a.right)}"


def print_literal(lit):
    if isinstance(lit.atom, Eq) and not lit.positive:
        return print_atom(lit.atom).replace(" = ", " != ")
    s = print_atom(lit.atom)
    return s if lit.positive else "!" + s


def print_clause(c):
    if not c.literals:
        return "false"
    return " | ".join(sorted(print_literal(l) for l in c))


def print_formula(f):
    def go(f, prec):
        if isinstance(f, FAtom):
            return print_atom(f.atom)
        if isinstance(f, FNot):
            sub = go(f.sub, 3)
            if isinstance(f.sub, FAtom) and isinstance(f.sub.atom, Eq):
                return print_atom(f.sub.atom).replace(" = ", " != ")
            return "!" + sub
        if isinstance(f, FClosed):
            names = ",".join(sorted(v.name for v in formula_vars(f.sub)))
            s = f"forall {names}: {go(f.sub, 0)}"
            return f"({s})" if prec > 0 else s
        if isinstance(f, FAnd):
            if not f.parts:
                return "true"
            s = " & ".join(go(p, 2) for p in f.parts)
            return f"({s})" if prec > 1 else s
        if not f.parts:
            return "false"
        s = " | ".join(go(p, 1) for p in f.parts)
        return f"({s})" if prec > 0 else s

    return go(f, 0)


def print_update(u, prec=0):
    if isinstance(u, Skip):
        return "skip"
    if isinstance(u, Seq):
        s = f"{print_update(u.first, 1)} ; {print_update(u.second, 1)}"
        return f"({s})" if prec > 0 else s
    if isinstance(u, If):
        s = f"if ({print_formula(u.cond)}) then {print_update(u.then, 2)}"
        if u.els is not None:
            s += f" else {print_update(u.els, 2)}"
        return s
    op = "insert" if isinstance(u, InsertForeach) else "delete"
    head = f"{u.target}({','.join(v.name for v in u.vars)})" if u.vars else u.target
    return f"foreach {','.join(v.name for v in u.vars)} : {print_formula(u.qual)} do {op} {head}"


def print_rule(rule):
    head = print_atom(rule.head)
    if not rule.body:
        return f"{head}."
    body = ", ".join(print_literal(l) for l in rule.body)
    return f"{head} :- {body}."


def print_program(p, provenance=None):
    lines = []
    for r in p.rules:
        line = print_rule(r)
        if provenance and r in provenance:
            line += f"   % {provenance[r]}"
        lines.append(line)
    return "\n".join(lines)


def print_database(b):
    lines = []
    for pred in sorted(b.relations):
        for tup in sorted(b.relations[pred]):
            args = f"({','.join(tup)})" if tup else ""
            lines.append(f"{pred}{args}.")
    return "\n".join(lines)
