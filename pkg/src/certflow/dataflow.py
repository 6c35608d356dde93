"""Flow relation domain, transfer function and per-method summaries.

Facts are pairs ``(to, frm)`` of representative strings meaning "frm flows to
to". Internally a fact set is held as ``dict[to, frozenset[frm]]``; the public
functions take and return ``frozenset`` of pairs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional

from .alias import (RET, ArrayAccess, ArrayPartition, FieldAccess, build_array_partition,
                    representative, sym_rep)
from .graphs import (CallGraph, CallResolver, CallTarget, Cfg, ControlDeps, build_call_graph,
                     build_cfg, control_dependencies)
from .ir import (ArrayRead, ArrayWrite, Binary, Call, Const, Copy, FieldRead, FieldWrite,
                 Goto, If, Label, Method, Program, Return, Stmt, Unary)

FactSet = frozenset  # frozenset[tuple[str, str]]
Facts = dict  # dict[str, frozenset[str]]

_EMPTY: Facts = {}

# Prefixes of representatives that no statement kills. Every reachable fact
# set contains their identity pair, so it is implied instead of stored.
PERSISTENT = ("f:", "arr:", "sym:")


class MissingSummaryError(KeyError):
    def __init__(self, method_id: str):
        super().__init__(method_id)
        self.method_id = method_id


def to_pairs(d: Mapping[str, Iterable[str]]) -> FactSet:
    return frozenset((x, y) for x, ys in d.items() for y in ys)


def from_pairs(pairs: Iterable[tuple[str, str]]) -> Facts:
    out: dict[str, set] = {}
    for x, y in pairs:
        out.setdefault(x, set()).add(y)
    return {x: frozenset(ys) for x, ys in out.items()}


@dataclass
class Stats:
    summarise_calls: int = 0
    node_evals: int = 0


# ---------------------------------------------------------------------------
# per-program and per-method context


class ProgramContext:
    """Everything about a program that summaries depend on, built once."""

    def __init__(self, program: Program):
        self.program = program
        self.resolver = CallResolver(program)
        self.partition: ArrayPartition = build_array_partition(program, self.resolver)
        self._methods: dict[str, MethodContext] = {}

    @cached_property
    def call_graph(self) -> CallGraph:
        return build_call_graph(self.program, self.resolver)

    @cached_property
    def symbol_reps(self) -> frozenset[str]:
        return frozenset(sym_rep(s) for s in self.program.config.symbols)

    @cached_property
    def heap_reps(self) -> frozenset[str]:
        """Every field and array representative accessed anywhere."""
        reps = set()
        for m in self.program.methods().values():
            for s in m.body:
                lv = heap_lvalue(s)
                if lv is not None:
                    reps.add(representative(lv, m, self.program, self.partition))
        return frozenset(reps)

    def method(self, method_id: str) -> "MethodContext":
        ctx = self._methods.get(method_id)
        if ctx is None:
            ctx = MethodContext(self, self.program.method(method_id))
            self._methods[method_id] = ctx
        return ctx


def heap_lvalue(s: Stmt):
    if isinstance(s, FieldRead):
        return FieldAccess(s.base, s.field_name)
    if isinstance(s, FieldWrite):
        return FieldAccess(s.base, s.field_name)
    if isinstance(s, ArrayRead):
        return ArrayAccess(s.array, s.index)
    if isinstance(s, ArrayWrite):
        return ArrayAccess(s.array, s.index)
    return None


@dataclass(frozen=True)
class NodePlan:
    """Precomputed effect of one CFG node.

    ``pairs`` are the environment-independent local flows (including implicit
    and library-model pairs); ``calls`` lists internal callees whose summary is
    substituted at evaluation time as ``(callee, argument reps, return rep)``.
    """

    pairs: tuple[tuple[str, str], ...] = ()
    calls: tuple[tuple[str, tuple[str, ...], Optional[str]], ...] = ()
    kill: Optional[str] = None

    @property
    def identity(self) -> bool:
        return not self.pairs and not self.calls and self.kill is None


IDENTITY = NodePlan()


class MethodContext:
    def __init__(self, pctx: ProgramContext, method: Method, cfg: Optional[Cfg] = None):
        self.pctx = pctx
        self.program = pctx.program
        self.method = method
        self.cfg = cfg if cfg is not None else build_cfg(method)
        self.deps: ControlDeps = control_dependencies(self.cfg)

    def rep(self, lv) -> str:
        return representative(lv, self.method, self.program, self.pctx.partition)

    @cached_property
    def local_reps(self) -> frozenset[str]:
        return frozenset(self.rep(v) for v, _ in self.method.locals)

    @cached_property
    def seed_reps(self) -> frozenset[str]:
        m = self.method
        own = {self.rep(v) for v, _ in m.params} | set(self.local_reps)
        return frozenset(own)

    @cached_property
    def seed(self) -> Facts:
        return {r: frozenset((r,)) for r in self.seed_reps}

    @cached_property
    def rank(self) -> dict[int, int]:
        return {n: i for i, n in enumerate(self.cfg.reverse_postorder())}

    @cached_property
    def plans(self) -> dict[int, NodePlan]:
        return {n: self.plan(n) for n in self.cfg.stmts}

    def node_of(self, stmt: Stmt) -> int:
        for n, s in self.cfg.stmts.items():
            if s is stmt:
                return n
        raise ValueError(f"statement not in {self.method.id}: {stmt!r}")

    def implicit_sources(self, node: int) -> list[str]:
        return sorted({self.rep(var) for _, var in self.deps.get(node, ())})

    def plan(self, node: int) -> NodePlan:
        s = self.cfg.stmts[node]
        if s is None or isinstance(s, (If, Goto, Label)):
            return IDENTITY
        pairs: list[tuple[str, str]] = []
        calls = []
        kill = None
        written: list[str] = []
        R = self.rep
        if isinstance(s, Const):
            kill = R(s.target)
            written.append(kill)
        elif isinstance(s, Copy):
            kill = R(s.target)
            pairs.append((kill, R(s.source)))
            written.append(kill)
        elif isinstance(s, Unary):
            kill = R(s.target)
            pairs.append((kill, R(s.operand)))
            written.append(kill)
        elif isinstance(s, Binary):
            kill = R(s.target)
            pairs += [(kill, R(s.left)), (kill, R(s.right))]
            written.append(kill)
        elif isinstance(s, FieldRead):
            kill = R(s.target)
            pairs.append((kill, R(FieldAccess(s.base, s.field_name))))
            written.append(kill)
        elif isinstance(s, ArrayRead):
            kill = R(s.target)
            pairs.append((kill, R(ArrayAccess(s.array, s.index))))
            written.append(kill)
        elif isinstance(s, FieldWrite):
            lhs = R(FieldAccess(s.base, s.field_name))
            pairs.append((lhs, R(s.source)))
            written.append(lhs)
        elif isinstance(s, ArrayWrite):
            lhs = R(ArrayAccess(s.array, s.index))
            pairs.append((lhs, R(s.source)))
            written.append(lhs)
        elif isinstance(s, Return):
            if s.value is not None and not self.method.is_void:
                pairs.append((RET, R(s.value)))
                written.append(RET)
        elif isinstance(s, Call):
            args = tuple(R(a) for a in s.args)
            ret = R(s.target) if s.target is not None else None
            kill = ret
            if ret is not None:
                written.append(ret)
            modeled = False
            for t in self.pctx.resolver.resolve(self.method, s):
                if t.kind == "internal":
                    calls.append((t.method_id, args, ret))
                    continue
                pairs += target_pairs(t, args, ret)
                if t.kind != "pure":
                    modeled = True
            if modeled and len(args) > 1:
                written.append(args[0])
        else:  # pragma: no cover - exhaustive over statement kinds
            raise TypeError(f"unknown statement {s!r}")
        for c in self.implicit_sources(node):
            for lhs in written:
                pairs.append((lhs, c))
        return NodePlan(tuple(dict.fromkeys(pairs)), tuple(calls), kill)


def library_pairs(args: tuple[str, ...], ret: Optional[str]) -> list[tuple[str, str]]:
    """Unavailable-code model: result from receiver and arguments, receiver from arguments."""
    out = []
    if ret is not None:
        out += [(ret, a) for a in args]
    if args:
        out += [(args[0], a) for a in args[1:]]
    return out


def target_pairs(t: CallTarget, args: tuple[str, ...], ret: Optional[str]
                 ) -> list[tuple[str, str]]:
    if t.kind == "pure":
        return []
    out = []
    if t.kind == "source" and ret is not None:
        out.append((ret, sym_rep(t.symbol)))
    elif t.kind == "sink":
        out += [(sym_rep(t.symbol), a) for a in args]
    out += library_pairs(args, ret)
    return out


# ---------------------------------------------------------------------------
# flow / kill / transfer


def substitute(summary: Iterable[tuple[str, str]], args: tuple[str, ...], ret: Optional[str]
               ) -> list[tuple[str, str]]:
    """Rename formals ``p:i`` to actual argument reps and ``ret`` to the return-to rep."""
    names = {f"p:{i}": a for i, a in enumerate(args)}
    names[RET] = ret
    get = names.get
    out = []
    for x, y in summary:
        x2 = get(x, x)
        if x2 is None:
            continue
        y2 = get(y, y)
        if y2 is not None:
            out.append((x2, y2))
    return out


def _lookup(env: Mapping[str, FactSet], callee: str, strict: bool) -> FactSet:
    s = env.get(callee)
    if s is None:
        if strict:
            raise MissingSummaryError(callee)
        return frozenset()
    return s


def plan_flow(plan: NodePlan, env: Mapping[str, FactSet], strict: bool = False
              ) -> list[tuple[str, str]]:
    pairs = list(plan.pairs)
    for callee, args, ret in plan.calls:
        pairs += substitute(_lookup(env, callee, strict), args, ret)
    return pairs


def apply_plan(plan: NodePlan, d: Facts, env: Mapping[str, FactSet], strict: bool = False,
               pairs: Optional[list] = None) -> Facts:
    """F(d, s); ``pairs`` may carry a precomputed ``plan_flow`` result."""
    if plan.identity:
        return d
    if pairs is None:
        pairs = plan_flow(plan, env, strict)
    gen: dict[str, set] = {}
    for x, z in pairs:
        ys = d.get(z)
        if z.startswith(PERSISTENT):
            # heap and symbol reps are never killed, so (z, z) always holds
            ys = ys | {z} if ys else (z,)
        if ys:
            acc = gen.get(x)
            if acc is None:
                gen[x] = set(ys)
            else:
                acc.update(ys)
    out = dict(d)
    if plan.kill is not None:
        out.pop(plan.kill, None)
    for x, ys in gen.items():
        prev = out.get(x)
        out[x] = prev.union(ys) if prev else frozenset(ys)
    return out


def flow(s: Stmt, env: Mapping[str, FactSet], ctx: MethodContext,
         node: Optional[int] = None) -> FactSet:
    """Pairs locally induced by ``s`` (with callee summaries substituted)."""
    n = ctx.node_of(s) if node is None else node
    return frozenset(plan_flow(ctx.plans[n], env))


def kill(s: Stmt, d: Iterable[tuple[str, str]], ctx: MethodContext,
         node: Optional[int] = None) -> FactSet:
    """Facts of ``d`` invalidated by ``s``: those whose target ``s`` overwrites."""
    n = ctx.node_of(s) if node is None else node
    target = ctx.plans[n].kill
    if target is None:
        return frozenset()
    return frozenset((x, y) for x, y in d if x == target)


def transfer(d: Iterable[tuple[str, str]], s: Stmt, env: Mapping[str, FactSet],
             ctx: MethodContext, node: Optional[int] = None) -> FactSet:
    n = ctx.node_of(s) if node is None else node
    return to_pairs(apply_plan(ctx.plans[n], from_pairs(d), env))


# ---------------------------------------------------------------------------
# summaries


def _join(facts: list[Facts]) -> Facts:
    facts = [f for f in facts if f]
    if not facts:
        return _EMPTY
    if len(facts) == 1:
        return facts[0]
    out = dict(facts[0])
    for f in facts[1:]:
        for x, ys in f.items():
            prev = out.get(x)
            if prev is None:
                out[x] = ys
            elif not ys <= prev:
                out[x] = prev | ys
    return out


def summarise_facts(ctx: MethodContext, env: Mapping[str, FactSet], strict: bool = False,
                    stats: Optional[Stats] = None) -> Facts:
    """Forward worklist fixpoint over the method's CFG; returns OUT at the final node."""
    cfg = ctx.cfg
    plans = ctx.plans
    rank = ctx.rank
    flows: dict[int, list] = {}  # env is fixed during one call
    out: dict[int, Facts] = {}
    heap = [(rank[cfg.init], cfg.init)]
    queued = {cfg.init}
    evals = 0
    while heap:
        _, n = heapq.heappop(heap)
        queued.discard(n)
        d = _join([out.get(p, _EMPTY) for p in cfg.preds[n]])
        if n == cfg.init:
            d = _join([ctx.seed, d])
        plan = plans[n]
        pairs = flows.get(n)
        if pairs is None and not plan.identity:
            pairs = flows[n] = plan_flow(plan, env, strict)
        new = apply_plan(plan, d, env, strict, pairs)
        evals += 1
        if n not in out or new != out[n]:
            out[n] = new
            for s in cfg.succs[n]:
                if s not in queued:
                    queued.add(s)
                    heapq.heappush(heap, (rank[s], s))
    if stats is not None:
        stats.summarise_calls += 1
        stats.node_evals += evals
    return out.get(cfg.final, _EMPTY)


def summarise(ctx: MethodContext, env: Mapping[str, FactSet], strict: bool = False,
              stats: Optional[Stats] = None) -> FactSet:
    return to_pairs(summarise_facts(ctx, env, strict, stats))


def filter_summary(facts: Facts) -> FactSet:
    """Drop pairs mentioning a local and reflexive pairs; what remains is the summary."""
    out = []
    for x, ys in facts.items():
        if x.startswith("v:"):
            continue
        for y in ys:
            if y != x and not y.startswith("v:"):
                out.append((x, y))
    return frozenset(out)


def method_summary(ctx: MethodContext, env: Mapping[str, FactSet], strict: bool = False,
                   stats: Optional[Stats] = None) -> FactSet:
    return filter_summary(summarise_facts(ctx, env, strict, stats))
