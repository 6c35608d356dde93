"""Analysis vs checking cost on generated corpora.

Only the analysis and checking proper are timed; generation, parsing and
the construction of CFGs and the call graph happen before the clock starts.
"""

from __future__ import annotations

import gc
import json
import statistics
import time
from dataclasses import asdict, dataclass, field

from .certify import AnalysisStats, analyze, check, leaks
from .corpus.generator import GenSpec, generate_program
from .dataflow import ProgramContext, Stats

DEFAULT_SIZES = (200, 1000, 5000)
# call-chain depth per corpus size; never below 20
DEPTHS = {200: 20, 1000: 50, 5000: 150}


def depth_for(methods: int) -> int:
    return DEPTHS.get(methods, max(20, methods // 33))


def bench_spec(methods: int, seed: int = 1, depth: int | None = None) -> GenSpec:
    depth = depth_for(methods) if depth is None else depth
    return GenSpec(method_count=methods, call_chain_depth=depth, fan_out=3,
                   stmts_per_method=5, branch_density=0.3, array_field_density=0.2, seed=seed)


@dataclass
class BenchRow:
    name: str
    methods: int
    depth: int
    analysis_time: float  # median seconds
    checking_time: float
    analyze_calls: int
    check_calls: int
    leaks: int
    ratios: list[float] = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return statistics.median(self.ratios)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d


def _timed(fn):
    gc.collect()
    gc.disable()
    try:
        t = time.perf_counter()
        out = fn()
        return out, time.perf_counter() - t
    finally:
        gc.enable()


def bench_program(name: str, spec: GenSpec, repeats: int = 3) -> BenchRow:
    program = generate_program(spec)
    ctx = ProgramContext(program)
    for mid in program.methods():
        ctx.method(mid).plans  # noqa: B018 - warm the per-method plans outside the timer
    ctx.call_graph  # noqa: B018
    a_times, c_times, ratios = [], [], []
    for _ in range(repeats):
        astats = AnalysisStats()
        cert, a = _timed(lambda: analyze(program, context=ctx, stats=astats))
        cstats = Stats()
        result, c = _timed(lambda: check(program, cert, context=ctx, stats=cstats))
        if not result.valid:
            raise RuntimeError(f"{name}: freshly generated certificate rejected: "
                               f"{result.failure.describe()}")
        a_times.append(a)
        c_times.append(c)
        ratios.append(a / c)
    return BenchRow(name, len(program.methods()), spec.call_chain_depth,
                    statistics.median(a_times), statistics.median(c_times),
                    astats.summarise_calls, cstats.summarise_calls,
                    len(leaks(cert, program, entry_only=True)), ratios)


def run_bench(sizes=DEFAULT_SIZES, repeats: int = 3, seed: int = 1,
              depth: int | None = None) -> list[BenchRow]:
    return [bench_program(f"gen-{n}", bench_spec(n, seed, depth), repeats) for n in sizes]


COLUMNS = ("App", "#Methods", "Analysis time (s)", "Checking time (s)", "#Leaks",
           "Analyze summarise calls", "Check summarise calls", "Ratio")


def format_tsv(rows: list[BenchRow]) -> str:
    lines = ["\t".join(COLUMNS)]
    for r in rows:
        lines.append("\t".join([r.name, str(r.methods), f"{r.analysis_time:.3f}",
                                f"{r.checking_time:.3f}", str(r.leaks), str(r.analyze_calls),
                                str(r.check_calls), f"{r.ratio:.2f}"]))
    return "\n".join(lines) + "\n"


def format_json(rows: list[BenchRow]) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=2) + "\n"
