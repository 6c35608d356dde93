import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certflow.corpus import PHONE_EXPECTED
from certflow.dataflow import (ProgramContext, filter_summary, flow, kill, method_summary,
                               summarise, transfer)
from certflow.ir import parse_program

from conftest import body_of

TABLE = """
class T {
  field f: int
  method m(this: T, a: int[], y: int, z: int) -> int {
    var o: T
    x := const 5
    x := y
    x := neg y
    x := y add z
    x := o.f
    x := a[y]
    o.f := z
    a[y] := z
    r := call T.g/2(this, y)
    call T.h/2(this, z)
    if y > 0 goto L
    label L
    return x
  }
  method g(this: T, u: int) -> int {
    return u
  }
  method h(this: T, u: int) -> void {
    this.f := u
    return
  }
}
"""
M = "T.m/4"
X, R, O = f"v:{M}::x", f"v:{M}::r", f"v:{M}::o"
A, Y, Z = "p:1", "p:2", "p:3"
F = "f:T.f"
ARR = f"arr:{M}::a"
ENV = {"T.g/2": frozenset({("ret", "p:1")}), "T.h/2": frozenset({("f:T.f", "p:1")}),
       M: frozenset()}
# a fact set mentioning every target that any row could kill
D = frozenset({(X, "sym:t"), (R, Y), (F, Z), (Y, "sym:p")})

# (statement index, flow, kill(D)) for each row of the statement table
ROWS = [
    ("const", 0, set(), {(X, "sym:t")}),
    ("copy", 1, {(X, Y)}, {(X, "sym:t")}),
    ("unary", 2, {(X, Y)}, {(X, "sym:t")}),
    ("binary", 3, {(X, Y), (X, Z)}, {(X, "sym:t")}),
    ("field-read", 4, {(X, F)}, {(X, "sym:t")}),
    ("array-read", 5, {(X, ARR)}, {(X, "sym:t")}),
    ("field-write", 6, {(F, Z)}, set()),
    ("array-write", 7, {(ARR, Z)}, set()),
    ("call-with-result", 8, {(R, Y)}, {(R, Y)}),
    ("call-void", 9, {(F, Z)}, set()),
    ("cond", 10, set(), set()),
    ("return", 12, {("ret", X)}, set()),
]


@pytest.fixture(scope="module")
def table_ctx():
    return ProgramContext(parse_program(TABLE)).method(M)


@pytest.mark.parametrize("name,idx,want_flow,want_kill", ROWS, ids=[r[0] for r in ROWS])
def test_statement_table(table_ctx, name, idx, want_flow, want_kill):
    s = table_ctx.method.body[idx]
    assert flow(s, ENV, table_ctx) == want_flow
    assert kill(s, D, table_ctx) == want_kill


def test_label_is_identity(table_ctx):
    s = table_ctx.method.body[11]
    assert transfer(D, s, ENV, table_ctx) == D


def test_worked_composition():
    p = parse_program(body_of(["var x: int", "var y: int", "var z: int", "var t: int",
                               "var p: int", "x := y add z", "return x"], params="this: T"))
    ctx = ProgramContext(p).method("T.m/1")
    v = lambda n: f"v:T.m/1::{n}"  # noqa: E731
    d = {(v("x"), v("t")), (v("y"), v("p"))}
    got = transfer(d, ctx.method.body[0], {}, ctx)
    assert got == {(v("x"), v("p")), (v("y"), v("p"))}


def test_cond_identity_on_arbitrary_facts(table_ctx):
    s = table_ctx.method.body[10]
    assert transfer(D, s, ENV, table_ctx) == D


def test_empty_input_composes_to_nothing(table_ctx):
    assert transfer(set(), table_ctx.method.body[1], ENV, table_ctx) == set()


def test_identity_seeded_copy(table_ctx):
    s = table_ctx.method.body[1]
    assert transfer({(Y, Y)}, s, ENV, table_ctx) == {(X, Y), (Y, Y)}


def test_kill_of_field_write_is_empty_for_any_facts(table_ctx):
    s = table_ctx.method.body[6]
    universe = [X, Y, Z, F, R]
    for d in itertools.combinations(itertools.product(universe, universe), 3):
        assert kill(s, d, table_ctx) == set()


_TABLE_CTX = ProgramContext(parse_program(TABLE)).method(M)
_universe = [X, Y, Z, F, ARR, R, O, "ret", "sym:s"]
_pairs = st.tuples(st.sampled_from(_universe), st.sampled_from(_universe))


@settings(max_examples=200, deadline=None)
@given(st.sets(_pairs, max_size=12), st.sets(_pairs, max_size=12), st.integers(0, 12))
def test_transfer_monotone(d, extra, idx):
    ctx = _TABLE_CTX
    s = ctx.method.body[idx]
    assert transfer(d, s, ENV, ctx) <= transfer(d | extra, s, ENV, ctx)


def test_implicit_flow_pairs():
    p = parse_program(body_of(["y := const 0", "if x > 0 goto L1", "goto L2", "label L1",
                               "y := z", "label L2", "return y"]))
    ctx = ProgramContext(p).method("T.m/4")
    s = ctx.method.body[4]
    # y is the second parameter; it receives z directly and x through the branch
    assert flow(s, {}, ctx) == {("p:2", "p:3"), ("p:2", "p:1")}


def test_sink_call_flows(phone):
    ctx = ProgramContext(phone).method("App.Send/2")
    call = ctx.method.body[-1]
    assert ("sym:sms", "p:1") in flow(call, {}, ctx)


def test_source_call_flows(phone):
    ctx = ProgramContext(phone).method("App.getId/1")
    call = ctx.method.body[1]
    tm, x = "v:App.getId/1::tm", "v:App.getId/1::x"
    assert flow(call, {}, ctx) == {(x, "sym:id"), (x, tm)}


LIB = """
class W {
  method m(this: W, c: String) -> String {
    var sb: StringBuilder
    sb := call StringBuilder.create/0()
    s2 := call StringBuilder.append/2(sb, c)
    call StringBuilder.clear/1(sb)
    h := call Hash.of/1(c)
    return s2
  }
}
extern class StringBuilder {
  method create/0() -> StringBuilder
  method append/2(this, c) -> StringBuilder
  method clear/1(this) -> void
}
extern class Hash {
  method of/1(c) -> int
}
"""


def test_library_rules():
    p = parse_program(LIB, "pure Hash.of/1\n")
    ctx = ProgramContext(p).method("W.m/2")
    body = ctx.method.body
    sb, s2 = "v:W.m/2::sb", "v:W.m/2::s2"
    assert flow(body[1], {}, ctx) == {(s2, sb), (s2, "p:1"), (sb, "p:1")}
    assert flow(body[2], {}, ctx) == set()
    assert flow(body[3], {}, ctx) == set()
    assert method_summary(ctx, {}) == {("ret", "p:1")}


def test_phone_leaf_summaries(phone):
    pctx = ProgramContext(phone)
    raw = summarise(pctx.method("App.getId/1"), {})
    assert ("ret", "sym:id") in raw
    assert method_summary(pctx.method("App.getId/1"), {}) == {("ret", "sym:id")}
    assert method_summary(pctx.method("App.Send/2"), {}) == {("sym:sms", "p:1")}


def test_bar_after_first_round(phone):
    pctx = ProgramContext(phone)
    env = {m: frozenset(PHONE_EXPECTED[m]) for m in ("App.getId/1", "App.getNumber/1", "App.Send/2")}
    assert method_summary(pctx.method("App.bar/1"), env) == {("sym:sms", "sym:id"),
                                                             ("ret", "sym:num")}


def test_empty_void_method():
    p = parse_program("class E {\n  method m(this: E, a: int) -> void {\n  }\n}")
    ctx = ProgramContext(p).method("E.m/2")
    raw = summarise(ctx, {})
    assert raw and all(x == y for x, y in raw)
    assert filter_summary({x: frozenset({y}) for x, y in raw}) == frozenset()
