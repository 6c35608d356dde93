"""Representatives: canonical names standing for every l-value that may alias.

Encodings (all strings, injective by prefix)::

    v:<MethodId>::<name>   local variable
    p:<index>              formal parameter, by position
    ret                    the method's return slot
    f:<Class>.<field>      field, hoisted to the topmost declaring class
    arr:<partition id>     every element of every array in one alias set
    sym:<symbol>           source or sink symbol
"""

from __future__ import annotations

import re
from typing import NamedTuple, Optional, Union

from .graphs import CallResolver
from .ir import (ArrayRead, ArrayWrite, Call, Copy, FieldRead, FieldWrite, IRError, Method,
                 Program, Return, is_array_type, superchain)

RET = "ret"


class FieldAccess(NamedTuple):
    base: str
    field: str


class ArrayAccess(NamedTuple):
    base: str
    index: str


LValue = Union[str, FieldAccess, ArrayAccess]


class UnknownFieldError(IRError):
    pass


class RepresentativeError(ValueError):
    pass


def var_rep(method_id: str, name: str) -> str:
    return f"v:{method_id}::{name}"


def param_rep(index: int) -> str:
    return f"p:{index}"


def field_rep(class_name: str, field_name: str) -> str:
    return f"f:{class_name}.{field_name}"


def array_rep(partition_id: str) -> str:
    return f"arr:{partition_id}"


def sym_rep(symbol: str) -> str:
    return f"sym:{symbol}"


_NAME = r"[A-Za-z_$][\w$]*"
_MID = rf"{_NAME}\.{_NAME}/\d+"
_REP_PATTERNS = {
    "v": re.compile(rf"v:({_MID})::({_NAME})"),
    "p": re.compile(r"p:(0|[1-9]\d*)"),
    "ret": re.compile(r"ret"),
    "f": re.compile(rf"f:({_NAME})\.({_NAME})"),
    "arr": re.compile(rf"arr:((?:{_MID}::(?:{_NAME}|<ret>))|(?:{_NAME}\.{_NAME}))"),
    "sym": re.compile(rf"sym:({_NAME})"),
}


class Rep(NamedTuple):
    """Decoded form of a representative string."""

    tag: str
    parts: tuple[str, ...]


def decode_rep(s: str) -> Rep:
    tag = "ret" if s == RET else s.split(":", 1)[0]
    pat = _REP_PATTERNS.get(tag)
    if pat is None:
        raise RepresentativeError(f"unknown representative tag in {s!r}")
    m = pat.fullmatch(s)
    if m is None:
        raise RepresentativeError(f"malformed representative {s!r}")
    return Rep(tag, m.groups())


def encode_rep(rep: Rep) -> str:
    if rep.tag == "ret":
        return RET
    if rep.tag == "v":
        return var_rep(*rep.parts)
    if rep.tag == "f":
        return field_rep(*rep.parts)
    return f"{rep.tag}:{rep.parts[0]}"


def is_local(rep: str) -> bool:
    return rep.startswith("v:")


def hoist_field(program: Program, declared_type: str, f: str) -> str:
    """Topmost class in ``declared_type``'s superchain that declares ``f``."""
    owner = None
    for c in superchain(program, declared_type):
        decl = program.class_map.get(c)
        if decl is not None and decl.declares_field(f):
            owner = c
    if owner is None:
        raise UnknownFieldError(f"field {f!r} not declared in the hierarchy of {declared_type}")
    return owner


# ---------------------------------------------------------------------------
# array alias partition


class UnionFind:
    """Disjoint sets keyed by string; the set name is its smallest member."""

    def __init__(self):
        self.parent: dict[str, str] = {}

    def add(self, x: str) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: str) -> str:
        self.add(x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        # smaller name wins, so the root is always the canonical id
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra

    def groups(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for x in sorted(self.parent):
            out.setdefault(self.find(x), []).append(x)
        return out


def local_member(method_id: str, name: str) -> str:
    return f"{method_id}::{name}"


def return_member(method_id: str) -> str:
    return f"{method_id}::<ret>"


def field_member(class_name: str, f: str) -> str:
    return f"{class_name}.{f}"


class ArrayPartition:
    """Alias sets of array-valued names.

    The closure runs over every copy regardless of declared type (implicit
    locals carry none), so ``groups`` reports only the sets that hold at
    least one name known to denote an array.
    """

    def __init__(self, uf: UnionFind, arrays: set[str] = frozenset()):
        self._uf = uf
        self._arrays = arrays

    def partition_id(self, member: str) -> str:
        return self._uf.find(member)

    def groups(self) -> dict[str, list[str]]:
        return {k: v for k, v in self._uf.groups().items()
                if any(x in self._arrays for x in v)}

    def __len__(self) -> int:
        return len(self.groups())


def _field_member_for(program: Program, m: Method, base: str, f: str) -> str:
    return field_member(hoist_field(program, m.type_of(base), f), f)


def build_array_partition(program: Program, resolver: Optional[CallResolver] = None
                          ) -> ArrayPartition:
    """Flow-insensitive closure over copies, call bindings, returns and field moves."""
    resolver = resolver or CallResolver(program)
    uf = UnionFind()
    arrays: set[str] = set()
    for c in program.classes:
        arrays.update(field_member(c.name, f) for f, t in c.fields if is_array_type(t))
    for m in program.methods().values():
        mid = m.id
        arrays.update(local_member(mid, v) for v, t in m.var_types.items() if is_array_type(t))
        if is_array_type(m.return_type):
            arrays.add(return_member(mid))
        for s in m.body:
            if isinstance(s, Copy):
                uf.union(local_member(mid, s.target), local_member(mid, s.source))
            elif isinstance(s, (ArrayRead, ArrayWrite)):
                uf.add(local_member(mid, s.array))
                arrays.add(local_member(mid, s.array))
            elif isinstance(s, FieldRead):
                uf.union(local_member(mid, s.target), _field_member_for(program, m, s.base,
                                                                         s.field_name))
            elif isinstance(s, FieldWrite):
                uf.union(local_member(mid, s.source), _field_member_for(program, m, s.base,
                                                                         s.field_name))
            elif isinstance(s, Return) and s.value is not None:
                uf.union(local_member(mid, s.value), return_member(mid))
            elif isinstance(s, Call):
                for t in resolver.resolve(m, s):
                    if t.kind != "internal":
                        continue
                    callee = program.method(t.method_id)
                    for a, (formal, _) in zip(s.args, callee.params):
                        uf.union(local_member(mid, a), local_member(callee.id, formal))
                    if s.target is not None:
                        uf.union(local_member(mid, s.target), return_member(callee.id))
    return ArrayPartition(uf, arrays)


def representative(lv: LValue, m: Method, p: Program, ap: ArrayPartition) -> str:
    if isinstance(lv, FieldAccess):
        t = m.type_of(lv.base)
        if t is None:
            raise UnknownFieldError(f"{m.id}: {lv.base} has no declared class type")
        return field_rep(hoist_field(p, t, lv.field), lv.field)
    if isinstance(lv, ArrayAccess):
        return array_rep(ap.partition_id(local_member(m.id, lv.base)))
    idx = m.param_index.get(lv)
    if idx is not None:
        return param_rep(idx)
    return var_rep(m.id, lv)
