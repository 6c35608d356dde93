import pytest

from certflow.certify import analyze, decode, encode
from certflow.corpus import FIXTURES, fixture_entries, fixture_paths, load_fixture
from certflow.corpus.generator import (GenSpec, InfeasibleSpecError, generate, generate_config,
                                       generate_program)
from certflow.corpus.interpreter import BudgetExhausted, DynError, dyn_taint_run
from certflow.dataflow import ProgramContext
from certflow.ir import Call, If, parse_program

from oracles import soundness_gaps


# -- fixtures


@pytest.mark.parametrize("name", FIXTURES)
def test_stored_certificate_matches_analysis(name):
    p = load_fixture(name)
    stored = fixture_paths(name)[2].read_text()
    assert stored == encode(analyze(p))
    assert decode(stored).digest == p.digest


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_have_entries(name):
    assert fixture_entries(name)


def test_unknown_fixture():
    with pytest.raises(KeyError):
        fixture_paths("nope")


# -- generator


def test_generation_is_deterministic():
    spec = GenSpec(30, 6, 3, 5, 0.4, 0.3, seed=11)
    assert generate(spec) == generate(spec)
    assert generate(spec) != generate(GenSpec(30, 6, 3, 5, 0.4, 0.3, seed=12))


def test_chain_of_depth_three():
    p = generate_program(GenSpec(4, 3, 1, 3, 0.0, 0.0, seed=2))
    assert len(p.methods()) == 4
    cg = ProgramContext(p).call_graph
    assert cg.depth() == 3
    assert len(cg.edges) == 3
    assert all(len(cg.callees_of(m)) <= 1 for m in p.methods())


def test_single_method_is_straight_line():
    p = generate_program(GenSpec(1, 0, 1, 6, 0.0, 0.0, seed=5))
    (m,) = p.methods().values()
    assert not any(isinstance(s, If) for s in m.body)
    assert not any(isinstance(s, Call) and s.callee.startswith("Mod") for s in m.body)


@pytest.mark.parametrize("kw", [
    dict(method_count=0), dict(method_count=3, call_chain_depth=5), dict(fan_out=0),
    dict(fan_out=65), dict(branch_density=1.5), dict(array_field_density=-0.1),
    dict(stmts_per_method=-1),
])
def test_infeasible_specs(kw):
    with pytest.raises(InfeasibleSpecError):
        generate(GenSpec(**kw))


@pytest.mark.parametrize("seed", range(8))
def test_generated_programs_round_trip_through_text(seed):
    spec = GenSpec(20, 5, 2, 5, 0.4, 0.4, seed)
    p = parse_program(generate(spec), generate_config(spec))
    assert p.config.entries == {"Mod0.m0/3"}
    assert ProgramContext(p).call_graph.depth() >= 5


def test_generated_program_leaks_and_keeps_a_clean_sink():
    p = generate_program(GenSpec(40, 8, 2, 5, 0.3, 0.2, seed=9))
    trace = dyn_taint_run(p, "Mod0.m0/3")
    sinks = {x for pairs in trace.flows.values() for x, _ in pairs if x.startswith("sym:")}
    assert "sym:net" in sinks
    assert ("sym:log", "sym:id") not in trace.flows.get("Mod0.m0/3", set())


# -- dynamic oracle


def test_phone_trace():
    t = dyn_taint_run(load_fixture("phone"), "App.foo/1")
    assert ("sym:sms", "sym:id") in t.flows["App.foo/1"]
    assert t.call_edges == {("App.foo/1", "App.bar/1"), ("App.bar/1", "App.getId/1"),
                            ("App.bar/1", "App.Send/2"), ("App.bar/1", "App.getNumber/1")}


def test_no_sources_no_symbol_flows():
    bare = parse_program(fixture_paths("phone")[0].read_text(), "entry App.foo/1\n")
    t = dyn_taint_run(bare, "App.foo/1")
    assert not any(y.startswith("sym:") for _, _, y in t.all_flows())


def test_implicit_flow_when_branch_taken():
    p = load_fixture("implicit")
    taken = dyn_taint_run(p, "Gate.pick/3", args=[None, 5, 7])
    assert ("ret", "p:1") in taken.flows["Gate.pick/3"]
    # the untaken branch assigns nothing, so nothing is observed
    skipped = dyn_taint_run(p, "Gate.pick/3", args=[None, -1, 7])
    assert ("ret", "p:1") not in skipped.flows.get("Gate.pick/3", set())


def test_budget():
    src = ("class L {\n  method spin(this: L) -> void {\n    label Top\n"
           "    goto Top\n  }\n}\n")
    with pytest.raises(BudgetExhausted):
        dyn_taint_run(parse_program(src), "L.spin/1", budget=50)


def test_runtime_type_error():
    src = ("class R {\n  field f: int\n  method m(this: R, o: R) -> int {\n"
           "    x := o.f\n    return x\n  }\n}\n")
    with pytest.raises(DynError):
        dyn_taint_run(parse_program(src), "R.m/2", args=[None, None])


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_soundness(name):
    p = load_fixture(name)
    ctx = ProgramContext(p)
    flows, edges, n_flows, _ = soundness_gaps(p, analyze(p, context=ctx), ctx)
    assert not flows and not edges
    assert n_flows > 0


@pytest.mark.parametrize("seed", range(10))
def test_generated_soundness(seed):
    p = generate_program(GenSpec(15, 4, 2, 5, 0.4, 0.4, seed))
    ctx = ProgramContext(p)
    flows, edges, n_flows, n_edges = soundness_gaps(p, analyze(p, context=ctx), ctx)
    assert not flows and not edges
    assert n_flows > 0 and n_edges > 0
