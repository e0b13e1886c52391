import pytest

from precond import Parser, Schema


@pytest.fixture
def parser():
    return Parser(Schema())


def parse_all(constraint=None, update=None, program=None, database=None):
    """Parse related inputs against one shared schema."""
    p = Parser(Schema())
    out = {"schema": p.schema, "parser": p}
    if program is not None:
        out["program"] = p.parse_program(program)
    if constraint is not None:
        out["constraint"] = p.parse_constraint(constraint)
    if update is not None:
        out["update"] = p.parse_update(update)
    if database is not None:
        out["database"] = p.parse_database(database)
    return out


TC_PROGRAM = "tc(X,Y) :- arc(X,Y). tc(X,Y) :- arc(X,Z), tc(Z,Y)."

PATH_PROGRAM = """
tc(X,Y) :- arc(X,Y).
tc(X,Y) :- arc(X,Z), tc(Z,Y).
path(X,Y) :- edge(X,Y).
path(X,Y) :- edge(X,Z), path(Z,Y).
i(X,Y) :- body(X,Y).
"""
