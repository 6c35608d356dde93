import pytest

from certflow.corpus import load_fixture
from certflow.dataflow import ProgramContext
from certflow.ir import parse_program


def method_ctx(program, mid):
    return ProgramContext(program).method(mid)


def body_of(stmts, params="this: T, x: int, y: int, z: int", ret="int", extra=""):
    """Wrap statements in a single-method program ``T.m``."""
    lines = "\n".join(f"    {s}" for s in stmts)
    return f"class T {{\n  field f: int\n  method m({params}) -> {ret} {{\n{lines}\n  }}\n}}\n{extra}"


@pytest.fixture(scope="session")
def phone():
    return load_fixture("phone")


@pytest.fixture
def parse():
    return parse_program
