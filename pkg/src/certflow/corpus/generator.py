"""Seeded synthetic programs for scaling runs and oracle testing.

Methods sit on call-graph layers 0..depth. A backbone of one method per
layer guarantees a chain of the requested depth; every other method gets a
random layer and calls into deeper layers only, so the graph is a DAG.
Every method folds its callee results into its return value, the backbone
leaf reads a source, and the root sends the fold to a sink: one real leak.
The root also logs a constant to a second sink, which must stay clean.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from ..ir import Program, parse_program

SOURCES = (("Device.getId/1", "id"), ("Device.getLocation/1", "loc"))
LEAK_SINK = ("Net.send/2", "net")
CLEAN_SINK = ("Log.write/2", "log")
ROOT = "Mod0.m0/3"
MAX_CLASSES = 16
_ARITH = ("add", "sub", "mul", "xor", "and", "or", "rem")
_CMP = ("lt", "gt", "eq", "ne", "ge")


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    method_count: int = 10
    call_chain_depth: int = 3
    fan_out: int = 2
    stmts_per_method: int = 8
    branch_density: float = 0.3
    array_field_density: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        if self.method_count < 1 or self.stmts_per_method < 0 or self.call_chain_depth < 0:
            raise InfeasibleSpecError("counts must be positive")
        if self.fan_out < 1:
            raise InfeasibleSpecError("fan_out must be at least 1")
        if self.method_count < self.call_chain_depth + 1:
            raise InfeasibleSpecError(
                f"{self.method_count} methods cannot form a chain of depth {self.call_chain_depth}")
        for name in ("branch_density", "array_field_density"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InfeasibleSpecError(f"{name} must lie in [0, 1], got {v}")
        if self.fan_out > 64:
            raise InfeasibleSpecError("fan_out above 64 is not supported")


@dataclass
class _Slot:
    index: int
    layer: int
    cls: str
    callees: list
    override: bool = False


class _Body:
    """Emits one method body, keeping track of defined integer variables."""

    def __init__(self, rng: random.Random, cls: str):
        self.rng = rng
        self.cls = cls
        self.lines: list[str] = []
        self.decls: dict[str, str] = {}
        self.ints = ["a", "b"]
        self.n = 0
        self.labels = 0

    def temp(self) -> str:
        self.n += 1
        return f"t{self.n}"

    def label(self) -> str:
        self.labels += 1
        return f"L{self.labels}"

    def pick(self) -> str:
        return self.rng.choice(self.ints)

    def emit(self, line: str) -> None:
        self.lines.append(line)

    def define(self, line_fmt: str) -> str:
        t = self.temp()
        self.emit(line_fmt.format(t=t))
        self.ints.append(t)
        return t

    def declare(self, var: str, t: str) -> str:
        self.decls[var] = t
        return var

    # -- statement groups

    def arith(self) -> str:
        r = self.rng.random()
        if r < 0.1:
            return self.define(f"{{t}} := const {self.rng.randint(0, 9)}")
        if r < 0.2:
            return self.define(f"{{t}} := {self.pick()}")
        if r < 0.3:
            return self.define(f"{{t}} := neg {self.pick()}")
        return self.define(f"{{t}} := {self.pick()} {self.rng.choice(_ARITH)} {self.pick()}")

    def update(self, avoid: set) -> None:
        """Reassign an existing temporary (or define one) inside a region."""
        choices = [v for v in self.ints if v.startswith("t") and v not in avoid]
        if not choices:
            self.arith()
            return
        v = self.rng.choice(choices)
        self.emit(f"{v} := {v} {self.rng.choice(_ARITH)} {self.pick()}")

    def branch(self) -> None:
        g = self.define(f"{{t}} := {self.pick()} {self.rng.choice(_CMP)} {self.pick()}")
        avoid = {g}
        if self.rng.random() < 0.5:
            end = self.label()
            self.emit(f"if {g} > 0 goto {end}")
            for _ in range(self.rng.randint(1, 2)):
                self.update(avoid)
            self.emit(f"label {end}")
        else:
            other, end = self.label(), self.label()
            self.emit(f"if {g} = 0 goto {other}")
            self.update(avoid)
            self.emit(f"goto {end}")
            self.emit(f"label {other}")
            self.update(avoid)
            self.emit(f"label {end}")

    def loop(self) -> None:
        c = self.temp()
        one = self.temp()
        self.emit(f"{c} := const {self.rng.randint(1, 3)}")
        self.emit(f"{one} := const 1")
        head = self.label()
        self.emit(f"label {head}")
        for _ in range(self.rng.randint(1, 2)):
            self.update({c, one})
        self.emit(f"{c} := {c} sub {one}")
        self.emit(f"if {c} > 0 goto {head}")

    def field_ops(self) -> None:
        if self.rng.random() < 0.5:
            self.emit(f"this.cache := {self.pick()}")
            self.define("{t} := this.cache")
        else:
            bx = self.declare("bx", "Box")
            self.emit(f"{bx} := call Heap.newBox/0()")
            self.emit(f"{bx}.val := {self.pick()}")
            self.define(f"{{t}} := {bx}.val")

    def array_ops(self) -> None:
        arr = self.declare("arr", "int[]")
        n, ix = self.temp(), self.temp()
        self.emit(f"{n} := const 4")
        self.emit(f"{arr} := call Heap.newArr/1({n})")
        self.emit(f"{ix} := const {self.rng.randint(0, 3)}")
        self.emit(f"{arr}[{ix}] := {self.pick()}")
        if self.rng.random() < 0.9:
            bx = self.declare("bx", "Box")
            self.emit(f"{bx} := call Heap.newBox/0()")
            self.emit(f"{bx}.items := {arr}")
            alias = self.declare("arr2", "int[]")
            self.emit(f"{alias} := {bx}.items")
            self.define(f"{{t}} := {alias}[{ix}]")
        else:
            self.emit(f"this.buf := {arr}")
            alias = self.declare("arr2", "int[]")
            self.emit(f"{alias} := this.buf")
            self.define(f"{{t}} := {alias}[{ix}]")

    def source(self) -> str:
        dev = self.declare("dev", "Device")
        self.emit(f"{dev} := call Heap.newDevice/0()")
        method = self.rng.choice(SOURCES)[0]
        return self.define(f"{{t}} := call {method}({dev})")

    def sink(self, sink: tuple[str, str], var: str, obj: str, cls: str) -> None:
        self.declare(obj, cls)
        self.emit(f"{obj} := call Heap.new{cls}/0()")
        self.emit(f"call {sink[0]}({obj}, {var})")

    def call(self, slot: "_Slot") -> str:
        o = self.declare(f"o{slot.index}", slot.cls)
        alloc = slot.cls + ("Sub" if slot.override and self.rng.random() < 0.5 else "")
        self.emit(f"{o} := call Heap.new{alloc}/0()")
        return self.define(f"{{t}} := call {slot.cls}.m{slot.index}/3({o}, {self.pick()}, "
                           f"{self.pick()})")

    def fold(self, values: list[str]) -> str:
        acc = values[0] if values else self.pick()
        for v in values[1:]:
            t = self.temp()
            self.emit(f"{t} := {acc} add {v}")
            self.ints.append(t)
            acc = t
        return acc


def _layout(spec: GenSpec, rng: random.Random) -> tuple[list[_Slot], int]:
    n, depth = spec.method_count, spec.call_chain_depth
    overrides = max(0, min(n // 10, n - (depth + 1)))
    count = n - overrides
    n_classes = max(1, min(MAX_CLASSES, math.ceil(count / 40)))
    layers = list(range(depth + 1)) + [rng.randint(1, depth) if depth else 0
                                       for _ in range(count - depth - 1)]
    # classes own contiguous layer bands, so declaration order runs caller-first
    slots = [_Slot(i, layers[i], f"Mod{min(n_classes - 1, layers[i] * n_classes // (depth + 1))}",
                   []) for i in range(count)]
    by_layer: dict[int, list[_Slot]] = {}
    for s in slots:
        by_layer.setdefault(s.layer, []).append(s)
    for s in slots:
        if s.layer >= depth:
            continue
        first = slots[s.index + 1] if s.index < depth else rng.choice(by_layer[s.layer + 1])
        callees = [first]
        deeper = [t for t in slots if t.layer > s.layer]
        for _ in range(spec.fan_out - 1):
            t = rng.choice(deeper)
            if t not in callees:
                callees.append(t)
        s.callees = callees
    for s in rng.sample(slots[1:], overrides) if overrides else ():
        s.override = True
    return slots, n_classes


def _method(spec: GenSpec, rng: random.Random, slot: _Slot, cls: str, depth: int) -> list[str]:
    b = _Body(rng, cls)
    root = slot.index == 0 and cls == "Mod0"
    if root:
        k = b.define("{t} := const 7")
        b.sink(CLEAN_SINK, k, "lg", "Log")
    actions = ["call"] * len(slot.callees) + ["arith"] * spec.stmts_per_method
    if slot.index == depth or (slot.layer == depth and rng.random() < 0.3):
        actions.append("source")
    elif rng.random() < 0.1:
        actions.append("source")
    if not root and rng.random() < 0.1:
        actions.append("sink")
    for _ in range(spec.stmts_per_method):
        if rng.random() < spec.branch_density:
            actions.append("loop" if rng.random() < 0.25 else "branch")
        if rng.random() < spec.array_field_density / 2:
            actions.append("field")
        if rng.random() < spec.array_field_density / 2:
            actions.append("array")
    rng.shuffle(actions)
    callees = iter(slot.callees)
    threaded = []
    for a in actions:
        if a == "call":
            threaded.append(b.call(next(callees)))
        elif a == "source":
            threaded.append(b.source())
        elif a == "sink":
            b.sink(LEAK_SINK, b.pick(), "net", "Net")
        elif a == "branch":
            b.branch()
        elif a == "loop":
            b.loop()
        elif a == "field":
            b.field_ops()
        elif a == "array":
            b.array_ops()
        else:
            b.arith()
    result = b.fold(threaded + [b.pick()])
    if root:
        b.sink(LEAK_SINK, result, "net", "Net")
    b.emit(f"return {result}")
    head = "entry method" if root else "method"
    out = [f"  {head} m{slot.index}(this: {cls}, a: int, b: int) -> int {{"]
    out += [f"    var {v}: {t}" for v, t in sorted(b.decls.items())]
    out += [f"    {line}" for line in b.lines]
    out.append("  }")
    return out


def generate(spec: GenSpec) -> str:
    """IR text for ``spec``; byte-identical for equal specs."""
    spec.validate()
    rng = random.Random(spec.seed)
    slots, n_classes = _layout(spec, rng)
    depth = spec.call_chain_depth
    members: dict[str, list[tuple]] = {}
    for s in slots:
        key = (s.layer, rng.random())
        members.setdefault(s.cls, []).append(key + (_method(spec, rng, s, s.cls, depth),))
        if s.override:
            sub = s.cls + "Sub"
            members.setdefault(sub, []).append(key + (_method(spec, rng, s, sub, depth),))
    names = [n for j in range(n_classes) for n in (f"Mod{j}", f"Mod{j}Sub")]
    out = [f"// generated: {spec}", "class Box {", "  field val: int", "  field items: int[]",
           "}"]
    for name in names:
        sub = name.endswith("Sub")
        header = f"class {name} extends {name[:-3]} {{" if sub else f"class {name} {{"
        out.append(header)
        out.append("  field extra: int" if sub else "  field cache: int\n  field buf: int[]")
        for *_, m in sorted(members.get(name, []), key=lambda e: e[:2]):
            out.extend(m)
        out.append("}")
    out.append("extern class Heap {")
    for cls in ("Box", "Device", "Net", "Log") + tuple(sorted(names)):
        out.append(f"  method new{cls}/0() -> {cls}")
    out.append("  method newArr/1(n) -> int[]")
    out.append("}")
    out.append("extern class Device {")
    out.extend(f"  method {m.split('.')[1].split('/')[0]}/1(this) -> int" for m, _ in SOURCES)
    out.append("}")
    out.append("extern class Net {\n  method send/2(this, v) -> void\n}")
    out.append("extern class Log {\n  method write/2(this, v) -> void\n}")
    return "\n".join(out) + "\n"


def generate_config(spec: GenSpec | None = None) -> str:
    lines = [f"source {m} {s}" for m, s in SOURCES]
    lines += [f"sink {m} {s}" for m, s in (LEAK_SINK, CLEAN_SINK)]
    lines.append(f"entry {ROOT}")
    return "\n".join(lines) + "\n"


def generate_program(spec: GenSpec) -> Program:
    return parse_program(generate(spec), generate_config(spec))
