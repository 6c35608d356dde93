import random

import pytest
from hypothesis import given, settings, strategies as st

from certflow.certify import (AnalysisStats, Certificate, CertificateError, analyze, check,
                              decode, encode, leaks, load, save)
from certflow.corpus import PHONE_EXPECTED, FIXTURES, fixture_paths, load_fixture
from certflow.corpus.generator import GenSpec, generate_program
from certflow.dataflow import ProgramContext, Stats, method_summary
from certflow.ir import parse_program

from oracles import (HOST_A, HOST_A_CONFIG, HOST_B, HOST_B_CONFIG, LIBRARY_METHODS,
                     random_tampering, rep_universe, single_tamperings)


def small(seed, methods=12, depth=4):
    return generate_program(GenSpec(methods, depth, 2, 4, 0.3, 0.3, seed))


@pytest.fixture(scope="module")
def phone_cert(phone):
    return analyze(phone)


# -- analyze


def test_phone_matches_converged_table(phone_cert):
    assert {m: set(f) for m, f in phone_cert.entries.items()} == PHONE_EXPECTED


def test_phone_is_fixpoint(phone, phone_cert):
    ctx = ProgramContext(phone)
    for m in phone.methods():
        assert method_summary(ctx.method(m), phone_cert.entries) == phone_cert[m]


def test_single_empty_method():
    p = parse_program("class T {\n  method m(this: T) -> void {\n  }\n}\n")
    assert analyze(p).entries == {"T.m/1": frozenset()}


def test_mutual_recursion_fixpoint():
    p = load_fixture("recursion")
    stats = AnalysisStats()
    cert = analyze(p, stats=stats)
    both = {("ret", "p:1"), ("ret", "p:2")}
    assert set(cert["Walk.even/3"]) == both
    assert set(cert["Walk.odd/3"]) == both
    assert set(cert["Walk.main/1"]) == {("ret", "sym:imei")}
    assert max(stats.per_method.values()) <= 3


@pytest.mark.parametrize("seed", range(5))
def test_generated_certificates_are_fixpoints(seed):
    p = small(seed)
    ctx = ProgramContext(p)
    cert = analyze(p, context=ctx)
    for m in p.methods():
        assert method_summary(ctx.method(m), cert.entries) == cert[m]


@pytest.mark.parametrize("seed", range(4))
def test_any_worklist_order_reaches_same_fixpoint(seed):
    p = small(seed)
    base = analyze(p)
    order = sorted(p.methods())
    for k in range(3):
        random.Random(seed * 10 + k).shuffle(order)
        assert analyze(p, order=list(order)).entries == base.entries
    assert analyze(p, order=order[::-1]).entries == base.entries


def test_order_must_be_permutation(phone):
    with pytest.raises(ValueError):
        analyze(phone, order=["App.foo/1"])


@pytest.mark.parametrize("name", ["phone", "hierarchy", "recursion"])
def test_reanalysis_from_valid_certificate_is_idle(name):
    p = load_fixture(name)
    cert = analyze(p)
    stats = AnalysisStats()
    again = analyze(p, initial=cert, stats=stats)
    assert again.entries == cert.entries
    assert stats.summarise_calls == len(p.methods())
    assert stats.changes == 0


def test_checker_counts_one_call_per_method(phone, phone_cert):
    stats = Stats()
    result = check(phone, phone_cert, stats=stats)
    assert result.valid and result.summarise_calls == 5 == stats.summarise_calls


@pytest.mark.parametrize("seed", range(3))
def test_analyzer_does_more_work_than_checker(seed):
    p = small(seed)
    ctx = ProgramContext(p)
    assert ctx.call_graph.depth() >= 2
    astats = AnalysisStats()
    cert = analyze(p, context=ctx, stats=astats)
    result = check(p, cert, context=ctx)
    assert result.summarise_calls == len(p.methods())
    assert astats.summarise_calls > result.summarise_calls


def test_phone_analyzer_count(phone):
    stats = AnalysisStats()
    analyze(phone, stats=stats)
    assert stats.summarise_calls > 5


# -- check


def test_check_accepts_analysis(phone, phone_cert):
    assert check(phone, phone_cert).verdict == "valid"


def test_missing_root_entry(phone, phone_cert):
    r = check(phone, phone_cert.with_entry("App.foo/1", None))
    assert not r.valid
    assert (r.failure.reason, r.failure.method_id) == ("missing-entry", "App.foo/1")
    assert r.summarise_calls == 0


def test_pair_removed_from_bar(phone, phone_cert):
    tampered = phone_cert.with_entry("App.bar/1", {("ret", "sym:num")})
    r = check(phone, tampered)
    assert r.failure.reason == "summary-mismatch"
    assert r.failure.method_id == "App.bar/1"
    assert r.failure.missing == {("sym:sms", "sym:id")}
    assert r.failure.extra == frozenset()
    assert "missing (sym:sms, sym:id)" in r.failure.describe()


def test_root_follows_from_bar_entry(phone):
    ctx = ProgramContext(phone)
    env = {"App.bar/1": frozenset({("sym:sms", "sym:id"), ("ret", "sym:num")})}
    assert method_summary(ctx.method("App.foo/1"), env, strict=True) == env["App.bar/1"]


def test_superset_is_rejected(phone, phone_cert):
    extra = set(phone_cert["App.getId/1"]) | {("ret", "sym:num")}
    r = check(phone, phone_cert.with_entry("App.getId/1", extra))
    assert not r.valid
    # the first failing method in MethodId order is reported
    assert r.failure.method_id == "App.bar/1"


def test_digest_binding(phone, phone_cert):
    other = Certificate(phone_cert.entries, "0" * 64)
    r = check(phone, other)
    assert r.failure.reason == "digest-mismatch" and r.failure.method_id is None


def test_exhaustive_phone_tampering(phone, phone_cert):
    universe = rep_universe(phone, phone_cert)
    assert {"ret", "p:0", "p:4", "sym:id", "sym:num", "sym:sms"} <= set(universe)
    n = 0
    ctx = ProgramContext(phone)
    for what, bad in single_tamperings(phone_cert, universe):
        assert not check(phone, bad, context=ctx).valid, what
        n += 1
    assert n > 400


@pytest.mark.parametrize("name", FIXTURES)
def test_random_fixture_tampering(name):
    p = load_fixture(name)
    ctx = ProgramContext(p)
    cert = analyze(p, context=ctx)
    universe = rep_universe(p, cert)
    rng = random.Random(name)
    for _ in range(40):
        what, bad = random_tampering(cert, universe, rng)
        assert not check(p, bad, context=ctx).valid, what


def test_coordinated_recursive_insertion_is_accepted():
    # a pair planted in both halves of a recursive cycle supports itself:
    # the certificate is a fixpoint, just not the least one
    p = load_fixture("recursion")
    cert = analyze(p)
    forged = cert
    for m in ("Walk.even/3", "Walk.odd/3"):
        forged = forged.with_entry(m, set(cert[m]) | {("ret", "p:0")})
    r = check(p, forged)
    # the caller must then carry the pair as well
    assert r.failure and r.failure.method_id == "Walk.main/1"
    forged = forged.with_entry("Walk.main/1", set(cert["Walk.main/1"]) | {("ret", "p:0")})
    assert check(p, forged).valid


# -- leaks


def test_entry_leak(phone, phone_cert):
    assert list(leaks(phone_cert, phone, entry_only=True)) == [("App.foo/1", "sms", "id")]


def test_all_leaks(phone, phone_cert):
    got = leaks(phone_cert, phone)
    assert [l.method for l in got] == ["App.bar/1", "App.foo/1"]


def test_no_symbol_pairs_no_leaks(phone):
    empty = Certificate({m: frozenset({("ret", "p:0")}) for m in phone.methods()}, phone.digest)
    assert len(leaks(empty, phone)) == 0


def test_helper_leak_reported_with_its_method(phone):
    cert = Certificate({"App.getNumber/1": frozenset({("sym:sms", "sym:num")})}, phone.digest)
    assert list(leaks(cert, phone)) == [("App.getNumber/1", "sms", "num")]


def test_generated_plants_a_leak_and_a_clean_sink():
    p = small(3)
    found = leaks(analyze(p), p, entry_only=True)
    assert {l.sink for l in found} == {"net"}


# -- serialization


def test_round_trip(phone_cert, tmp_path):
    assert decode(encode(phone_cert)) == phone_cert
    path = tmp_path / "c.dcert"
    save(phone_cert, path)
    assert load(path) == phone_cert


def test_fixture_file_is_canonical(phone, phone_cert):
    assert fixture_paths("phone")[2].read_text() == encode(phone_cert)


def test_encode_is_deterministic(phone):
    assert encode(analyze(phone)) == encode(analyze(load_fixture("phone")))


def test_empty_certificate_round_trip():
    c = Certificate({}, "d")
    assert decode(encode(c)) == c


@pytest.mark.parametrize("text", [
    encode(Certificate({"A.m/1": frozenset({("ret", "p:0")})}, "d"))[:-20],
    "",
    "[]",
    '{"version": "1", "digest": "d"}',
    '{"version": "9", "digest": "d", "entries": {}}',
    '{"version": "1", "digest": "d", "entries": {"A.m/1": [["ret"]]}}',
    '{"version": "1", "digest": "d", "entries": {"A.m/1": [["zz:1", "ret"]]}}',
    '{"version": "1", "digest": "d", "entries": {"A.m/1": [["v:A.m/1::x", "ret"]]}}',
    '{"version": "1", "digest": "d", "entries": {"A.m/1": "ret"}}',
])
def test_decode_rejects(text):
    with pytest.raises(CertificateError):
        decode(text)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_generated_round_trip(seed):
    p = small(seed, methods=8, depth=3)
    cert = analyze(p)
    assert decode(encode(cert)) == cert
    assert check(p, cert).valid


# -- context independence


def test_library_entries_do_not_depend_on_host():
    a = analyze(parse_program(HOST_A, HOST_A_CONFIG))
    b = analyze(parse_program(HOST_B, HOST_B_CONFIG))
    for m in LIBRARY_METHODS:
        assert a[m] == b[m], m
    assert ("ret", "p:1") in a["Codec.encode/2"]
    # hosts themselves differ
    assert leaks(a, parse_program(HOST_A, HOST_A_CONFIG), entry_only=True).leaks
