import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certflow.corpus import FIXTURES, load_fixture
from certflow.corpus.generator import GenSpec, generate
from certflow.ir import (STATEMENT_KINDS, ArrayRead, ArrayWrite, Binary, Call, ConfigError, Const,
                         Copy, CyclicHierarchyError, DuplicateLabelError, FieldRead, FieldWrite,
                         Goto, If, IRError, Label, ParseError, Return, Unary,
                         UndeclaredIdentifierError, UndefinedLabelError, UnknownTypeError,
                         format_program, parse_config, parse_program, superchain)

from conftest import body_of


def test_phone_program_shape(phone):
    assert sorted(phone.methods()) == ["App.Send/2", "App.bar/1", "App.foo/1", "App.getId/1",
                                      "App.getNumber/1"]
    assert phone.config.sources == {"TelephonyManager.getDeviceId/1": "id",
                                   "TelephonyManager.getLine1Number/1": "num"}
    assert phone.config.sinks == {"SmsManager.sendTextMessage/5": "sms"}
    assert phone.method("App.foo/1").entry_point


def test_empty_program():
    p = parse_program("")
    assert p.methods() == {}


def test_binary_then_return():
    p = parse_program(body_of(["x := y add z", "return x"]))
    assert p.method("T.m/4").body == (Binary("x", "y", "add", "z"), Return("x"))


def test_semicolons_separate_statements():
    p = parse_program(body_of(["x := y add z; return x"]))
    assert len(p.method("T.m/4").body) == 2


def test_all_thirteen_kinds_parse():
    text = """
class T {
  field f: int
  method m(this: T, a: int[], x: int) -> int {
    c := const 1
    d := x
    e := neg x
    g := x mul c
    h := a[c]
    a[c] := g
    k := this.f
    this.f := k
    r := call T.n/2(this, x)
    goto L
    label L
    if x > 0 goto L2
    label L2
    return r
  }
  method n(this: T, y: int) -> int {
    return y
  }
}
"""
    body = parse_program(text).method("T.m/3").body
    kinds = {type(s) for s in body}
    assert kinds == set(STATEMENT_KINDS)
    assert len(STATEMENT_KINDS) == 13
    assert body[0] == Const("c", 1)
    assert body[1] == Copy("d", "x")
    assert body[2] == Unary("e", "neg", "x")
    assert body[4] == ArrayRead("h", "a", "c")
    assert body[5] == ArrayWrite("a", "c", "g")
    assert body[6] == FieldRead("k", "this", "f")
    assert body[7] == FieldWrite("this", "f", "k")
    assert body[8] == Call("T.n/2", ("this", "x"), "r")
    assert body[9] == Goto("L") and body[10] == Label("L")
    assert body[11] == If("x", ">", "L2")


def test_unary_op_name_as_variable():
    # `len` is an operator only when followed by exactly one operand
    p = parse_program(body_of(["var len: int", "len := x", "w := len", "return w"]))
    assert p.method("T.m/4").body[1] == Copy("w", "len")


@pytest.mark.parametrize("text,err", [
    ("class A {\n  method m(this: A) -> int {\n    x := := y\n  }\n}", ParseError),
    ("class A {\n  field f: Nope\n}", UnknownTypeError),
    ("class A extends B {\n}\nclass B extends A {\n}", CyclicHierarchyError),
    (body_of(["label L", "label L", "return x"]), DuplicateLabelError),
    (body_of(["goto M", "return x"]), UndefinedLabelError),
    (body_of(["w := q", "return w"]), UndeclaredIdentifierError),
])
def test_rejects_invalid_programs(text, err):
    with pytest.raises(err):
        parse_program(text)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as e:
        parse_program("class A {\n  method m(this: A) -> int {\n    x := := y\n  }\n}")
    assert e.value.line == 3


def test_non_void_must_return():
    with pytest.raises(IRError):
        parse_program(body_of(["x := y"]))


def test_config_rejects_source_and_sink_on_one_method():
    with pytest.raises(ConfigError):
        parse_config("source A.b/1 s\nsink A.b/1 t\n")
    with pytest.raises(ConfigError):
        parse_config("source A.b/1 s\nsink A.c/1 s\n")


def test_superchain():
    p = parse_program("class A {\n}\nclass B extends A {\n}\nclass C extends B {\n}\n"
                      "interface I {\n}\nclass D extends A implements I {\n}\n")
    assert superchain(p, "C") == ["C", "B", "A"]
    assert superchain(p, "A") == ["A"]
    assert superchain(p, "D") == ["D", "A"]
    with pytest.raises(IRError):
        superchain(p, "Nope")


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_round_trip(name):
    p = load_fixture(name)
    again = parse_program(format_program(p))
    assert again.classes == p.classes


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 12), bd=st.floats(0, 1), ad=st.floats(0, 1))
def test_generated_round_trip(seed, n, bd, ad):
    spec = GenSpec(method_count=n, call_chain_depth=min(3, n - 1), fan_out=2,
                   stmts_per_method=4, branch_density=bd, array_field_density=ad, seed=seed)
    p = parse_program(generate(spec))
    assert parse_program(format_program(p)).classes == p.classes
    for c in p.class_map:
        assert len(superchain(p, c)) == len(set(superchain(p, c)))
