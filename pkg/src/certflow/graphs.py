"""Control-flow graphs, control dependence and the class-hierarchy call graph."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .ir import Call, Goto, If, Label, Method, Program, Return, Stmt, format_stmt

log = logging.getLogger(__name__)

ENTRY = -1  # synthetic entry, only when statement 0 is a jump target


class GraphError(ValueError):
    pass


class UnknownMethodError(GraphError):
    pass


@dataclass(frozen=True)
class Cfg:
    """Statement-level CFG. Nodes are body indices plus optional synthetic nodes.

    A synthetic exit node (index ``len(body)``) exists whenever the method does
    not end in exactly one reachable ``return``; its statement is ``None``.
    """

    method_id: str
    stmts: dict[int, Optional[Stmt]]
    succs: dict[int, tuple[int, ...]]
    preds: dict[int, tuple[int, ...]]
    init: int
    final: int
    pruned: tuple[int, ...] = ()

    @property
    def nodes(self) -> list[int]:
        return sorted(self.stmts)

    def succ(self, n: int) -> tuple[int, ...]:
        return self.succs[n]

    def pred(self, n: int) -> tuple[int, ...]:
        return self.preds[n]

    def stmt(self, n: int) -> Optional[Stmt]:
        return self.stmts[n]

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {(a, b) for a, bs in self.succs.items() for b in bs}

    def reverse_postorder(self) -> list[int]:
        seen, order = set(), []
        # iterative DFS; successors visited in location order for stable ties
        stack = [(self.init, iter(sorted(self.succs[self.init])))]
        seen.add(self.init)
        while stack:
            node, it = stack[-1]
            for s in it:
                if s not in seen:
                    seen.add(s)
                    stack.append((s, iter(sorted(self.succs[s]))))
                    break
            else:
                stack.pop()
                order.append(node)
        order.reverse()
        rest = sorted(n for n in self.stmts if n not in seen)
        return order + rest


def make_cfg(method_id: str, stmts: dict, edges: Iterable[tuple[int, int]], init: int,
             final: int) -> Cfg:
    """Assemble a Cfg from raw parts (used by builders and tests)."""
    succs = {n: [] for n in stmts}
    preds = {n: [] for n in stmts}
    for a, b in edges:
        if b not in succs[a]:
            succs[a].append(b)
            preds[b].append(a)
    return Cfg(method_id, dict(stmts), {k: tuple(v) for k, v in succs.items()},
               {k: tuple(sorted(v)) for k, v in preds.items()}, init, final)


def _raw_successors(body, i: int, labels: dict[str, int]) -> list[int]:
    s = body[i]
    n = len(body)
    if isinstance(s, Return):
        return [n]
    if isinstance(s, Goto):
        return [labels[s.label]]
    if isinstance(s, If):
        out = [i + 1]
        if labels[s.label] != i + 1:
            out.append(labels[s.label])
        return out
    return [i + 1]


def build_cfg(m: Method) -> Cfg:
    body = m.body or ()
    n = len(body)
    if n == 0:
        return make_cfg(m.id, {0: None}, [], 0, 0)
    labels = {}
    for i, s in enumerate(body):
        if isinstance(s, Label):
            labels[s.name] = i
    for s in body:
        if isinstance(s, (Goto, If)) and s.label not in labels:
            raise GraphError(f"{m.id}: jump to undefined label {s.label!r}")

    succ = {i: _raw_successors(body, i, labels) for i in range(n)}
    reach, stack = {0}, [0]
    while stack:
        i = stack.pop()
        for j in succ[i]:
            if j < n and j not in reach:
                reach.add(j)
                stack.append(j)
    pruned = tuple(i for i in range(n) if i not in reach)
    if pruned:
        log.warning("%s: pruning unreachable statements at %s", m.id, list(pruned))

    terminals = [i for i in sorted(reach) if n in succ[i]]
    single_return = len(terminals) == 1 and isinstance(body[terminals[0]], Return)
    stmts: dict[int, Optional[Stmt]] = {i: body[i] for i in reach}
    edges = []
    for i in sorted(reach):
        for j in succ[i]:
            if j == n and single_return:
                continue
            edges.append((i, j))
    if single_return:
        final = terminals[0]
    else:
        final = n
        stmts[n] = None
        if not terminals:
            log.warning("%s: no path reaches the method exit", m.id)
    init = 0
    if any(0 in succ[i] for i in reach):
        stmts[ENTRY] = None
        edges.insert(0, (ENTRY, 0))
        init = ENTRY
    cfg = make_cfg(m.id, stmts, edges, init, final)
    return Cfg(cfg.method_id, cfg.stmts, cfg.succs, cfg.preds, cfg.init, cfg.final, pruned)


def postdominators(g: Cfg) -> dict[int, frozenset[int]]:
    """Postdominator sets by the usual iterative intersection.

    Nodes with no path to ``final`` keep the full node set, which is what the
    path definition gives vacuously.
    """
    nodes = frozenset(g.stmts)
    pdom = {n: nodes for n in nodes}
    pdom[g.final] = frozenset({g.final})
    order = list(reversed(g.reverse_postorder()))
    changed = True
    while changed:
        changed = False
        for n in order:
            if n == g.final:
                continue
            ss = g.succs[n]
            meet = frozenset.intersection(*(pdom[s] for s in ss)) if ss else nodes
            new = meet | {n}
            if new != pdom[n]:
                pdom[n] = new
                changed = True
    return pdom


ControlDeps = dict  # node -> frozenset of (predicate node, condition variable)


def control_dependencies(g: Cfg) -> ControlDeps:
    """Ferrante/Ottenstein/Warren control dependence restricted to branch nodes.

    ``n`` depends on predicate ``p`` iff some successor ``s`` of ``p`` is
    postdominated by ``n`` while ``p`` is not.
    """
    pdom = postdominators(g)
    deps: dict[int, set] = {}
    for p in g.stmts:
        s = g.stmts[p]
        if not isinstance(s, If):
            continue
        for succ in g.succs[p]:
            for n in pdom[succ] - pdom[p]:
                deps.setdefault(n, set()).add((p, s.var))
    return {n: frozenset(v) for n, v in deps.items()}


def cfg_to_dot(g: Cfg) -> str:
    lines = [f'digraph "{g.method_id}" {{']
    for n in g.nodes:
        s = g.stmts[n]
        text = format_stmt(s) if s is not None else ("entry" if n == ENTRY else "exit")
        shape = ", shape=diamond" if isinstance(s, If) else ""
        lines.append(f'  n{n if n >= 0 else "_entry"} [label="{n}: {_esc(text)}"{shape}];')
    for a, b in sorted(g.edges):
        lines.append(f"  {_dot_node(a)} -> {_dot_node(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_node(n: int) -> str:
    return f"n{n}" if n >= 0 else "n_entry"


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


# ---------------------------------------------------------------------------
# call resolution


@dataclass(frozen=True)
class CallTarget:
    method_id: str
    kind: str  # internal | source | sink | library | pure
    symbol: Optional[str] = None


class CallResolver:
    """Class-hierarchy resolution of call sites, memoised per program."""

    def __init__(self, program: Program):
        self.program = program
        self._subtypes: dict[str, list[str]] = {}
        self._cache: dict[tuple, tuple[CallTarget, ...]] = {}

    def subtypes(self, name: str) -> list[str]:
        if name not in self._subtypes:
            self._subtypes[name] = self.program.subtypes(name)
        return self._subtypes[name]

    def classify(self, method_id: str) -> CallTarget:
        cfg = self.program.config
        if method_id in cfg.sources:
            return CallTarget(method_id, "source", cfg.sources[method_id])
        if method_id in cfg.sinks:
            return CallTarget(method_id, "sink", cfg.sinks[method_id])
        if method_id in cfg.pure:
            return CallTarget(method_id, "pure")
        if method_id in self.program.methods():
            return CallTarget(method_id, "internal")
        return CallTarget(method_id, "library")

    def resolve(self, caller: Method, call: Call) -> tuple[CallTarget, ...]:
        p = self.program
        cfg = p.config
        if call.callee in cfg.sources or call.callee in cfg.sinks or call.callee in cfg.pure:
            return (self.classify(call.callee),)
        cls, sig = call.class_name, call.signature
        base = cls
        if call.args:
            t = caller.type_of(call.args[0])
            if t is not None and t != cls and t in p.class_map and t in self.subtypes(cls):
                base = t
        key = (cls, base, sig)
        if key in self._cache:
            return self._cache[key]
        found = set()
        declared = False
        for d in self.subtypes(base):
            decl = p.class_map.get(d)
            if decl is None or decl.is_interface:
                if decl is not None and decl.method(sig) is not None:
                    declared = True
                continue
            m = p.lookup_method(d, sig)
            if m is not None:
                found.add(m.id)
        if not found:
            # opaque library code anywhere above the named class may define it
            if p.is_external(cls) or any(p.is_external(c) for c in p.superchain(cls)):
                found.add(call.callee)
            elif not declared and p.lookup_method(cls, sig) is None:
                raise UnknownMethodError(f"{caller.id}: call to unknown method {call.callee}")
        targets = tuple(self.classify(mid) for mid in sorted(found))
        self._cache[key] = targets
        return targets


@dataclass
class CallGraph:
    edges: set[tuple[str, str]] = field(default_factory=set)
    _callers: dict[str, set[str]] = field(default_factory=dict)
    _callees: dict[str, set[str]] = field(default_factory=dict)

    def add(self, caller: str, callee: str) -> None:
        self.edges.add((caller, callee))
        self._callers.setdefault(callee, set()).add(caller)
        self._callees.setdefault(caller, set()).add(callee)

    def callers_of(self, m: str) -> set[str]:
        return self._callers.get(m, set())

    def callees_of(self, m: str) -> set[str]:
        return self._callees.get(m, set())

    def depth(self) -> int:
        """Length (in edges) of the longest acyclic call chain."""
        memo: dict[str, int] = {}
        nodes = {a for a, _ in self.edges} | {b for _, b in self.edges}

        def longest(m, onstack):
            if m in memo:
                return memo[m]
            best = 0
            for c in self.callees_of(m):
                if c in onstack:
                    continue
                onstack.add(c)
                best = max(best, 1 + longest(c, onstack))
                onstack.discard(c)
            memo[m] = best
            return best

        return max((longest(m, {m}) for m in sorted(nodes)), default=0)

    def to_dot(self) -> str:
        lines = ["digraph callgraph {"]
        for a, b in sorted(self.edges):
            lines.append(f'  "{a}" -> "{b}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_call_graph(p: Program, resolver: Optional[CallResolver] = None) -> CallGraph:
    resolver = resolver or CallResolver(p)
    cg = CallGraph()
    for m in p.methods().values():
        for s in m.body:
            if isinstance(s, Call):
                for t in resolver.resolve(m, s):
                    if t.kind == "internal":
                        cg.add(m.id, t.method_id)
    return cg
