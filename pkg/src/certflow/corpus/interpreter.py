"""Concrete interpreter that tracks taint labels, used as a soundness oracle.

Every value carries a set of labels ``(rep, frame)``: "this value derives
from what ``rep`` held when frame ``frame`` observed it". Labels are minted
at parameter binding (callee frame only), at heap reads and source calls
(every frame on the stack, since for each of them the read happens inside
their execution). A flow ``(to, rep)`` is observed for a frame of method
``m`` when a value carrying ``(rep, that frame)`` reaches ``to``: the
method's return slot, a heap location, or a sink symbol.

Implicit flows follow the static notion: an assignment executed at a node
that is control dependent on branch ``p`` additionally carries the labels
the branch variable had when ``p`` last executed in the same frame.
Library calls follow the same two rules as the static model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from ..alias import RET, ArrayAccess, FieldAccess, sym_rep
from ..dataflow import MethodContext, ProgramContext
from ..ir import (ArrayRead, ArrayWrite, Binary, Call, Const, Copy, FieldRead, FieldWrite, Goto,
                  If, Label, Method, PRIMITIVES, Program, Return, Unary, element_type,
                  is_array_type)

EMPTY = frozenset()
_MASK = 0xFFFFFFFF


class DynError(RuntimeError):
    """Runtime type error in the interpreted program."""


class BudgetExhausted(DynError):
    pass


@dataclass(eq=False)
class Obj:
    cls: str
    fields: dict = field(default_factory=dict)


@dataclass(eq=False)
class Arr:
    elems: list


@dataclass
class DynTrace:
    flows: dict[str, set[tuple[str, str]]] = field(default_factory=dict)
    call_edges: set[tuple[str, str]] = field(default_factory=set)
    steps: int = 0
    result: Any = None

    def all_flows(self) -> set[tuple[str, str, str]]:
        return {(m, x, y) for m, pairs in self.flows.items() for x, y in pairs}


def _wrap(n: int) -> int:
    n &= _MASK
    return n - (1 << 32) if n & 0x80000000 else n


def as_int(v) -> int:
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, int):
        return v
    if v is None:
        return 0
    if isinstance(v, str):
        return len(v)
    if isinstance(v, Arr):
        return len(v.elems)
    return 1


def binop(op: str, a, b):
    if op == "concat" or (op == "add" and (isinstance(a, str) or isinstance(b, str))):
        return f"{a}{b}"
    x, y = as_int(a), as_int(b)
    if op == "add":
        return _wrap(x + y)
    if op == "sub":
        return _wrap(x - y)
    if op == "mul":
        return _wrap(x * y)
    if op == "div":
        return 0 if y == 0 else _wrap(int(x / y))
    if op == "rem":
        return 0 if y == 0 else _wrap(x - int(x / y) * y)
    if op == "and":
        return x & y
    if op == "or":
        return x | y
    if op == "xor":
        return x ^ y
    if op == "shl":
        return _wrap(x << (y & 31))
    if op == "shr":
        return x >> (y & 31)
    return int({"eq": x == y, "ne": x != y, "lt": x < y, "le": x <= y, "gt": x > y,
                "ge": x >= y}[op])


def unop(op: str, a):
    if op == "neg":
        return _wrap(-as_int(a))
    if op == "not":
        return int(as_int(a) == 0)
    return as_int(a)


def source_value(symbol: str) -> int:
    return sum(map(ord, symbol)) % 97 + 1


class _Frame:
    __slots__ = ("fid", "ctx", "vars", "branch_labels")

    def __init__(self, fid: int, ctx: MethodContext):
        self.fid = fid
        self.ctx = ctx
        self.vars: dict[str, tuple] = {}
        self.branch_labels: dict[int, frozenset] = {}


class Interpreter:
    def __init__(self, program: Program, budget: int = 100_000,
                 context: Optional[ProgramContext] = None):
        self.program = program
        self.pctx = context or ProgramContext(program)
        self.budget = budget
        self.trace = DynTrace()
        self.stack: list[_Frame] = []
        self._next_fid = 0

    # -- helpers

    def mint(self, rep: str) -> frozenset:
        return frozenset((rep, f.fid) for f in self.stack)

    def observe(self, frames, to: str, labels) -> None:
        for fr in frames:
            pairs = self.trace.flows.setdefault(fr.ctx.method.id, set())
            for rep, fid in labels:
                if fid == fr.fid and rep != to:
                    pairs.add((to, rep))

    def default_value(self, t: Optional[str]):
        if t is None or is_array_type(t):
            return None
        return 0 if element_type(t) in PRIMITIVES else None

    def new_object(self, cls: str) -> Obj:
        fields = {}
        if cls in self.program.class_map:
            for c in reversed(self.program.superchain(cls)):
                decl = self.program.class_map.get(c)
                for f, t in (decl.fields if decl else ()):
                    fields[f] = (self.default_value(t), EMPTY)
        return Obj(cls, fields)

    def fresh_value(self, ret_type: Optional[str], args: list):
        if ret_type == "void":
            return None
        if ret_type is not None and is_array_type(ret_type):
            n = next((a for a in args if isinstance(a, int) and 0 <= a <= 64), 8)
            return Arr([(0, EMPTY) for _ in range(n)])
        if ret_type is not None and element_type(ret_type) not in PRIMITIVES \
                and ret_type != "String" and ret_type in self.program.class_map:
            return self.new_object(ret_type)
        total = sum(as_int(a) for a in args if not isinstance(a, (Obj, Arr)))
        if ret_type == "String":
            return f"s{total}"
        return _wrap(total * 31 + 7)

    def concrete(self, t: str) -> str:
        """First instantiable class at or below ``t``."""
        for c in self.pctx.resolver.subtypes(t):
            decl = self.program.class_map.get(c)
            if decl is not None and not decl.is_interface:
                return c
        return t

    # -- execution

    def run(self, entry: str, args: Optional[list] = None) -> DynTrace:
        m = self.program.method(entry)
        if args is None:
            args = []
            for i, (_, t) in enumerate(m.params):
                if t is not None and is_array_type(t):
                    args.append(Arr([(i + 1, EMPTY) for _ in range(4)]))
                elif t is not None and element_type(t) not in PRIMITIVES and t != "String":
                    args.append(self.new_object(self.concrete(t)))
                else:
                    args.append(i + 1)
        value, _ = self.invoke(m, [(a, EMPTY) for a in args])
        self.trace.result = value
        return self.trace

    def invoke(self, m: Method, args: list[tuple]) -> tuple:
        fr = _Frame(self._next_fid, self.pctx.method(m.id))
        self._next_fid += 1
        for i, ((name, _), (v, labels)) in enumerate(zip(m.params, args)):
            fr.vars[name] = (v, labels | {(f"p:{i}", fr.fid)})
        for name, t in m.locals:
            fr.vars[name] = (self.default_value(t), EMPTY)
        self.stack.append(fr)
        try:
            return self.execute(fr)
        finally:
            self.stack.pop()

    def execute(self, fr: _Frame) -> tuple:
        ctx = fr.ctx
        m = ctx.method
        body = m.body
        labels_at = {s.name: i for i, s in enumerate(body) if isinstance(s, Label)}
        deps = ctx.deps
        V = fr.vars
        i = 0
        while i < len(body):
            self.trace.steps += 1
            if self.trace.steps > self.budget:
                raise BudgetExhausted(f"step budget {self.budget} exhausted in {m.id}")
            s = body[i]
            pc = EMPTY
            for p, _ in deps.get(i, ()):
                pc = pc | fr.branch_labels.get(p, EMPTY)
            nxt = i + 1
            if isinstance(s, Const):
                V[s.target] = (s.value, pc)
            elif isinstance(s, Copy):
                v, l = V[s.source]
                V[s.target] = (v, l | pc)
            elif isinstance(s, Unary):
                v, l = V[s.operand]
                V[s.target] = (unop(s.op, v), l | pc)
            elif isinstance(s, Binary):
                a, la = V[s.left]
                b, lb = V[s.right]
                V[s.target] = (binop(s.op, a, b), la | lb | pc)
            elif isinstance(s, FieldRead):
                obj = self._object(V[s.base][0], s)
                v, l = obj.fields.get(s.field_name, (None, EMPTY))
                rep = ctx.rep(FieldAccess(s.base, s.field_name))
                V[s.target] = (v, l | self.mint(rep) | pc)
            elif isinstance(s, FieldWrite):
                obj = self._object(V[s.base][0], s)
                v, l = V[s.source]
                l = l | pc
                obj.fields[s.field_name] = (v, l)
                self.observe(self.stack, ctx.rep(FieldAccess(s.base, s.field_name)), l)
            elif isinstance(s, ArrayRead):
                arr, k = self._element(V, s.array, s.index, s)
                v, l = arr.elems[k]
                rep = ctx.rep(ArrayAccess(s.array, s.index))
                V[s.target] = (v, l | self.mint(rep) | pc)
            elif isinstance(s, ArrayWrite):
                arr, k = self._element(V, s.array, s.index, s)
                v, l = V[s.source]
                l = l | pc
                arr.elems[k] = (v, l)
                self.observe(self.stack, ctx.rep(ArrayAccess(s.array, s.index)), l)
            elif isinstance(s, Return):
                if s.value is None or m.is_void:
                    return (None, EMPTY)
                v, l = V[s.value]
                l = l | pc
                self.observe([fr], RET, l)
                return (v, l)
            elif isinstance(s, Goto):
                nxt = labels_at[s.label]
            elif isinstance(s, If):
                v, l = V[s.var]
                fr.branch_labels[i] = l
                x = as_int(v)
                taken = x > 0 if s.cmp == ">" else (x < 0 if s.cmp == "<" else x == 0)
                if taken:
                    nxt = labels_at[s.label]
            elif isinstance(s, Call):
                self.call(fr, s, pc)
            i = nxt
        return (None, EMPTY)

    def _object(self, v, s) -> Obj:
        if not isinstance(v, Obj):
            raise DynError(f"line {s.line}: field access on non-object {v!r}")
        return v

    def _element(self, V, a, idx, s):
        arr = V[a][0]
        if not isinstance(arr, Arr):
            raise DynError(f"line {s.line}: indexing non-array {arr!r}")
        k = as_int(V[idx][0])
        if not 0 <= k < len(arr.elems):
            raise DynError(f"line {s.line}: index {k} out of bounds")
        return arr, k

    def dispatch(self, caller: Method, s: Call, args: list[tuple]):
        """Target method id and kind for this call at run time."""
        p = self.program
        resolver = self.pctx.resolver
        if s.callee in p.config.sources or s.callee in p.config.sinks or s.callee in p.config.pure:
            return resolver.classify(s.callee)
        cls, sig = s.class_name, s.signature
        start = cls
        if args and isinstance(args[0][0], Obj) and args[0][0].cls in resolver.subtypes(cls):
            start = args[0][0].cls
        m = p.lookup_method(start, sig)
        if m is None:
            return resolver.classify(s.callee)
        return resolver.classify(m.id)

    def call(self, fr: _Frame, s: Call, pc: frozenset) -> None:
        V = fr.vars
        args = [V[a] for a in s.args]
        target = self.dispatch(fr.ctx.method, s, args)
        if target.kind == "internal":
            callee = self.program.method(target.method_id)
            self.trace.call_edges.add((fr.ctx.method.id, callee.id))
            v, l = self.invoke(callee, args)
            if s.target is not None:
                V[s.target] = (v, l | pc)
            return
        arg_labels = frozenset().union(*(l for _, l in args)) if args else EMPTY
        values = [v for v, _ in args]
        if target.kind == "pure":
            if s.target is not None:
                V[s.target] = (self.fresh_value(None, values), pc)
            return
        if target.kind == "sink":
            for _, l in args:
                self.observe(self.stack, sym_rep(target.symbol), l)
        if s.target is not None:
            if target.kind == "source":
                v = source_value(target.symbol)
                labels = self.mint(sym_rep(target.symbol)) | arg_labels
            else:
                decl = self._extern_decl(target.method_id)
                v = self.fresh_value(decl.return_type if decl else None, values)
                labels = arg_labels
            V[s.target] = (v, labels | pc)
        if len(args) > 1:
            rv, rl = V[s.args[0]]
            extra = frozenset().union(*(l for _, l in args[1:]))
            V[s.args[0]] = (rv, rl | extra | pc)

    def _extern_decl(self, method_id: str) -> Optional[Method]:
        cls, sig = method_id.split(".", 1)
        decl = self.program.class_map.get(cls)
        return decl.method(sig) if decl is not None else None


def dyn_taint_run(program: Program, entry: str, budget: int = 100_000,
                  args: Optional[list] = None,
                  context: Optional[ProgramContext] = None) -> DynTrace:
    """Execute ``entry`` concretely and return the observed flows and call edges."""
    return Interpreter(program, budget, context).run(entry, args)
