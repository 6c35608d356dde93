"""Certificate generation, checking, serialization and leak reporting."""

from __future__ import annotations

import json
from collections import deque
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .alias import RepresentativeError, decode_rep, is_local
from .dataflow import FactSet, ProgramContext, Stats, method_summary
from .ir import Program

FORMAT_VERSION = "1"
TOOL = "certflow"


class CertificateError(ValueError):
    """A certificate file that cannot be decoded."""


@dataclass(frozen=True)
class Certificate:
    entries: Mapping[str, FactSet]
    digest: str = ""
    version: str = FORMAT_VERSION

    def __getitem__(self, method_id: str) -> FactSet:
        return self.entries[method_id]

    def __contains__(self, method_id: str) -> bool:
        return method_id in self.entries

    def with_entry(self, method_id: str, facts: Optional[Iterable]) -> "Certificate":
        """Copy with one entry replaced (``None`` removes it)."""
        entries = dict(self.entries)
        if facts is None:
            entries.pop(method_id, None)
        else:
            entries[method_id] = frozenset(facts)
        return Certificate(entries, self.digest, self.version)


@dataclass(frozen=True)
class Failure:
    method_id: Optional[str]
    reason: str  # missing-entry | summary-mismatch | digest-mismatch
    missing: FactSet = frozenset()  # recomputed but absent from the certificate
    extra: FactSet = frozenset()  # claimed by the certificate but not recomputed

    def describe(self) -> str:
        if self.reason == "digest-mismatch":
            return "digest-mismatch: certificate was issued for different program bytes"
        if self.reason == "missing-entry":
            return f"missing-entry: {self.method_id}"
        lines = [f"summary-mismatch: {self.method_id}"]
        lines += [f"  - missing ({x}, {y})" for x, y in sorted(self.missing)]
        lines += [f"  + extra   ({x}, {y})" for x, y in sorted(self.extra)]
        return "\n".join(lines)


@dataclass(frozen=True)
class CheckResult:
    valid: bool
    failure: Optional[Failure] = None
    summarise_calls: int = 0

    def __post_init__(self):
        if not self.valid and self.failure is None:
            raise ValueError("an invalid verdict needs a failure")

    @property
    def verdict(self) -> str:
        return "valid" if self.valid else "invalid"

    def __bool__(self) -> bool:
        return self.valid


class Leak(NamedTuple):
    method: str
    sink: str
    source: str


@dataclass(frozen=True)
class LeakReport:
    leaks: tuple[Leak, ...] = ()
    entry_only: bool = False

    def __len__(self) -> int:
        return len(self.leaks)

    def __iter__(self):
        return iter(self.leaks)


@dataclass
class AnalysisStats(Stats):
    changes: int = 0
    per_method: Counter = field(default_factory=Counter)


def analyze(program: Program, *, order: Optional[Sequence[str]] = None,
            stats: Optional[AnalysisStats] = None,
            context: Optional[ProgramContext] = None,
            initial: Optional[Certificate] = None) -> Certificate:
    """Bottom-up summary fixpoint over the call graph.

    Methods start with empty summaries (or those of ``initial``) and are
    visited from a FIFO worklist, in declaration order unless ``order`` is
    given. Whenever a summary changes, every caller not already pending is
    appended.
    """
    pctx = context or ProgramContext(program)
    stats = stats if stats is not None else AnalysisStats()
    methods = list(program.methods())
    if order is not None:
        if sorted(order) != sorted(methods):
            raise ValueError("order must be a permutation of the program's methods")
        methods = list(order)
    cg = pctx.call_graph
    start = initial.entries if initial is not None else {}
    summary: dict[str, FactSet] = {m: frozenset(start.get(m, ())) for m in methods}
    worklist = deque(methods)
    pending = set(methods)
    while worklist:
        m = worklist.popleft()
        pending.discard(m)
        stats.per_method[m] += 1
        new = method_summary(pctx.method(m), summary, stats=stats)
        if new != summary[m]:
            summary[m] = new
            stats.changes += 1
            for caller in sorted(cg.callers_of(m)):
                if caller not in pending:
                    pending.add(caller)
                    worklist.append(caller)
    return Certificate(summary, program.digest)


def check(program: Program, cert: Certificate, *, stats: Optional[Stats] = None,
          context: Optional[ProgramContext] = None) -> CheckResult:
    """Validate ``cert`` in one pass: each method is re-summarised once against it."""
    stats = stats if stats is not None else Stats()
    if cert.digest != program.digest:
        return CheckResult(False, Failure(None, "digest-mismatch"))
    methods = sorted(program.methods())
    for m in methods:
        if m not in cert.entries:
            return CheckResult(False, Failure(m, "missing-entry"))
    pctx = context or ProgramContext(program)
    before = stats.summarise_calls
    for m in methods:
        got = method_summary(pctx.method(m), cert.entries, strict=True, stats=stats)
        claimed = frozenset(cert.entries[m])
        if got != claimed:
            return CheckResult(False, Failure(m, "summary-mismatch", got - claimed, claimed - got),
                               stats.summarise_calls - before)
    return CheckResult(True, None, stats.summarise_calls - before)


def leaks(cert: Certificate, program: Program, entry_only: bool = False) -> LeakReport:
    cfg = program.config
    src = {f"sym:{s}": s for s in cfg.sources.values()}
    snk = {f"sym:{s}": s for s in cfg.sinks.values()}
    found = []
    methods = program.methods()
    for mid in sorted(cert.entries):
        if entry_only and not (mid in methods and methods[mid].entry_point):
            continue
        for x, y in sorted(cert.entries[mid]):
            if x in snk and y in src:
                found.append(Leak(mid, snk[x], src[y]))
    return LeakReport(tuple(found), entry_only)


# ---------------------------------------------------------------------------
# serialization


def encode(cert: Certificate) -> str:
    """Canonical JSON: entries sorted by MethodId, pairs sorted, one entry per line."""
    dump = json.dumps
    lines = ["{", f'  "version": {dump(cert.version)},', f'  "digest": {dump(cert.digest)},']
    if not cert.entries:
        lines.append('  "entries": {}')
    else:
        lines.append('  "entries": {')
        items = sorted(cert.entries.items())
        for i, (mid, facts) in enumerate(items):
            pairs = ", ".join(f"[{dump(x)}, {dump(y)}]" for x, y in sorted(facts))
            sep = "," if i < len(items) - 1 else ""
            lines.append(f"    {dump(mid)}: [{pairs}]{sep}")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def decode(text: str) -> Certificate:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise CertificateError(f"malformed certificate: {e}") from None
    if not isinstance(data, dict) or set(data) != {"version", "digest", "entries"}:
        raise CertificateError("certificate must have exactly version, digest and entries")
    if data["version"] != FORMAT_VERSION:
        raise CertificateError(f"unsupported certificate version {data['version']!r}")
    if not isinstance(data["digest"], str) or not isinstance(data["entries"], dict):
        raise CertificateError("malformed digest or entries")
    entries = {}
    for mid, pairs in data["entries"].items():
        if not isinstance(pairs, list):
            raise CertificateError(f"entry {mid!r} is not a list of pairs")
        facts = set()
        for pair in pairs:
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(r, str) for r in pair)):
                raise CertificateError(f"entry {mid!r}: malformed pair {pair!r}")
            for r in pair:
                try:
                    decode_rep(r)
                except RepresentativeError as e:
                    raise CertificateError(f"entry {mid!r}: {e}") from None
                if is_local(r):
                    raise CertificateError(f"entry {mid!r}: local representative {r!r}")
            facts.add(tuple(pair))
        entries[mid] = frozenset(facts)
    return Certificate(entries, data["digest"], data["version"])


def save(cert: Certificate, path) -> None:
    with open(path, "w") as fh:
        fh.write(encode(cert))


def load(path) -> Certificate:
    with open(path) as fh:
        return decode(fh.read())
