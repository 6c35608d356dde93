"""Object-oriented three-address IR: data model, parser and printer.

A program is a list of class declarations. Bodied methods contain one
statement per line (``;`` also separates statements)::

    class App extends Object {
      field buf: String[]
      method foo(this: App) -> String {
        x := call App.bar/1(this)
        return x
      }
    }
    extern class TelephonyManager { method getDeviceId/1(this) -> String }

The taint configuration is a separate line-based file::

    source TelephonyManager.getDeviceId/1 id
    sink   SmsManager.sendTextMessage/5 sms
    entry  App.foo/1
    pure   Math.abs/1
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Union

PRIMITIVES = frozenset(
    {"void", "int", "boolean", "long", "short", "byte", "char", "float", "double"}
)
# Opaque library classes that may be named without being declared.
BUILTIN_CLASSES = ("Object", "String")

UNARY_OPS = frozenset({"neg", "not", "len"})
BINARY_OPS = frozenset(
    {"add", "sub", "mul", "div", "rem", "and", "or", "xor", "shl", "shr",
     "eq", "ne", "lt", "le", "gt", "ge", "concat"}
)
CONDITIONS = (">", "<", "=")


class IRError(ValueError):
    """Base class for every problem found while reading a program."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


class ParseError(IRError):
    pass


class UnknownTypeError(IRError):
    pass


class DuplicateLabelError(IRError):
    pass


class UndefinedLabelError(IRError):
    pass


class UndeclaredIdentifierError(IRError):
    pass


class CyclicHierarchyError(IRError):
    pass


class ConfigError(IRError):
    pass


# ---------------------------------------------------------------------------
# statements


@dataclass(frozen=True)
class Const:
    target: str
    value: Union[int, str, None]
    line: int = field(default=0, compare=False)
    kind = "const"


@dataclass(frozen=True)
class Copy:
    target: str
    source: str
    line: int = field(default=0, compare=False)
    kind = "copy"


@dataclass(frozen=True)
class Unary:
    target: str
    op: str
    operand: str
    line: int = field(default=0, compare=False)
    kind = "unary"


@dataclass(frozen=True)
class Binary:
    target: str
    left: str
    op: str
    right: str
    line: int = field(default=0, compare=False)
    kind = "binary"


@dataclass(frozen=True)
class ArrayRead:
    target: str
    array: str
    index: str
    line: int = field(default=0, compare=False)
    kind = "array-read"


@dataclass(frozen=True)
class ArrayWrite:
    array: str
    index: str
    source: str
    line: int = field(default=0, compare=False)
    kind = "array-write"


@dataclass(frozen=True)
class FieldRead:
    target: str
    base: str
    field_name: str
    line: int = field(default=0, compare=False)
    kind = "field-read"


@dataclass(frozen=True)
class FieldWrite:
    base: str
    field_name: str
    source: str
    line: int = field(default=0, compare=False)
    kind = "field-write"


@dataclass(frozen=True)
class Call:
    callee: str
    args: tuple[str, ...]
    target: Optional[str] = None
    line: int = field(default=0, compare=False)
    kind = "call"

    @property
    def class_name(self) -> str:
        return self.callee.split(".", 1)[0]

    @property
    def signature(self) -> str:
        return self.callee.split(".", 1)[1]


@dataclass(frozen=True)
class Return:
    value: Optional[str] = None
    line: int = field(default=0, compare=False)
    kind = "return"


@dataclass(frozen=True)
class Goto:
    label: str
    line: int = field(default=0, compare=False)
    kind = "goto"


@dataclass(frozen=True)
class Label:
    name: str
    line: int = field(default=0, compare=False)
    kind = "label"


@dataclass(frozen=True)
class If:
    var: str
    cmp: str
    label: str
    line: int = field(default=0, compare=False)
    kind = "if"


Stmt = Union[Const, Copy, Unary, Binary, ArrayRead, ArrayWrite, FieldRead,
             FieldWrite, Call, Return, Goto, Label, If]

STATEMENT_KINDS = (Const, Copy, Unary, Binary, ArrayRead, ArrayWrite, FieldRead,
                   FieldWrite, Call, Return, Goto, Label, If)

ASSIGNMENT_KINDS = (Const, Copy, Unary, Binary, ArrayRead, FieldRead)


def defined_var(s: Stmt) -> Optional[str]:
    """The simple variable a statement overwrites, if any."""
    if isinstance(s, ASSIGNMENT_KINDS):
        return s.target
    if isinstance(s, Call):
        return s.target
    return None


def used_vars(s: Stmt) -> tuple[str, ...]:
    if isinstance(s, Copy):
        return (s.source,)
    if isinstance(s, Unary):
        return (s.operand,)
    if isinstance(s, Binary):
        return (s.left, s.right)
    if isinstance(s, ArrayRead):
        return (s.array, s.index)
    if isinstance(s, ArrayWrite):
        return (s.array, s.index, s.source)
    if isinstance(s, FieldRead):
        return (s.base,)
    if isinstance(s, FieldWrite):
        return (s.base, s.source)
    if isinstance(s, Call):
        return s.args
    if isinstance(s, Return):
        return (s.value,) if s.value is not None else ()
    if isinstance(s, If):
        return (s.var,)
    return ()


# ---------------------------------------------------------------------------
# declarations


def is_array_type(t: Optional[str]) -> bool:
    return t is not None and t.endswith("[]")


def element_type(t: str) -> str:
    while t.endswith("[]"):
        t = t[:-2]
    return t


@dataclass(frozen=True)
class Method:
    class_name: str
    name: str
    params: tuple[tuple[str, Optional[str]], ...]
    return_type: str
    locals: tuple[tuple[str, Optional[str]], ...] = ()
    body: Optional[tuple[Stmt, ...]] = None
    entry_point: bool = False
    line: int = field(default=0, compare=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def signature(self) -> str:
        return f"{self.name}/{self.arity}"

    @property
    def id(self) -> str:
        return f"{self.class_name}.{self.name}/{self.arity}"

    @property
    def has_body(self) -> bool:
        return self.body is not None

    @property
    def is_void(self) -> bool:
        return self.return_type == "void"

    @cached_property
    def param_index(self) -> dict[str, int]:
        return {name: i for i, (name, _) in enumerate(self.params)}

    @cached_property
    def var_types(self) -> dict[str, Optional[str]]:
        types = dict(self.locals)
        types.update(self.params)
        return types

    def type_of(self, var: str) -> Optional[str]:
        return self.var_types.get(var)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    superclass: Optional[str] = None
    interfaces: tuple[str, ...] = ()
    fields: tuple[tuple[str, str], ...] = ()
    methods: tuple[Method, ...] = ()
    external: bool = False
    is_interface: bool = False
    line: int = field(default=0, compare=False)

    def declares_field(self, f: str) -> bool:
        return any(name == f for name, _ in self.fields)

    def field_type(self, f: str) -> Optional[str]:
        for name, t in self.fields:
            if name == f:
                return t
        return None

    def method(self, signature: str) -> Optional[Method]:
        for m in self.methods:
            if m.signature == signature:
                return m
        return None


@dataclass(frozen=True)
class TaintConfig:
    sources: dict[str, str] = field(default_factory=dict)
    sinks: dict[str, str] = field(default_factory=dict)
    entries: frozenset[str] = frozenset()
    pure: frozenset[str] = frozenset()

    @property
    def symbols(self) -> frozenset[str]:
        return frozenset(self.sources.values()) | frozenset(self.sinks.values())

    def __hash__(self):
        return hash((tuple(sorted(self.sources.items())),
                     tuple(sorted(self.sinks.items())), self.entries, self.pure))


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDecl, ...]
    config: TaintConfig = field(default_factory=TaintConfig)
    digest: str = ""

    @cached_property
    def class_map(self) -> dict[str, ClassDecl]:
        return {c.name: c for c in self.classes}

    @cached_property
    def _methods(self) -> dict[str, Method]:
        out = {}
        for c in self.classes:
            if c.external or c.is_interface:
                continue
            for m in c.methods:
                if m.has_body:
                    out[m.id] = m
        return out

    def methods(self) -> dict[str, Method]:
        """Every analyzable (bodied) method, keyed by MethodId, in declaration order."""
        return self._methods

    def method(self, method_id: str) -> Method:
        return self._methods[method_id]

    def is_external(self, class_name: str) -> bool:
        c = self.class_map.get(class_name)
        return c is None or c.external

    @cached_property
    def subclasses(self) -> dict[str, tuple[str, ...]]:
        """Direct subtypes: subclasses of a class, implementors/subinterfaces of an interface."""
        children: dict[str, list[str]] = {c.name: [] for c in self.classes}
        for c in self.classes:
            parents = list(c.interfaces)
            if c.superclass:
                parents.append(c.superclass)
            for p in parents:
                children.setdefault(p, []).append(c.name)
        return {k: tuple(v) for k, v in children.items()}

    def subtypes(self, name: str) -> list[str]:
        """``name`` followed by all its transitive subtypes, breadth first."""
        seen = [name]
        i = 0
        while i < len(seen):
            for child in self.subclasses.get(seen[i], ()):
                if child not in seen:
                    seen.append(child)
            i += 1
        return seen

    def superchain(self, name: str) -> list[str]:
        return superchain(self, name)

    def lookup_field(self, class_name: str, f: str) -> Optional[str]:
        for c in self.superchain(class_name):
            decl = self.class_map.get(c)
            if decl is not None and decl.declares_field(f):
                return decl.field_type(f)
        return None

    def lookup_method(self, class_name: str, signature: str) -> Optional[Method]:
        """First declaration of ``signature`` walking up from ``class_name``."""
        if class_name not in self.class_map:
            return None
        for c in self.superchain(class_name):
            decl = self.class_map.get(c)
            if decl is None:
                continue
            m = decl.method(signature)
            if m is not None:
                return m
        return None

    @cached_property
    def array_field_names(self) -> frozenset[tuple[str, str]]:
        return frozenset((c.name, f) for c in self.classes for f, t in c.fields
                         if is_array_type(t))


def superchain(program: Program, name: str) -> list[str]:
    """``name`` followed by its superclasses up to the root."""
    if name not in program.class_map:
        raise UnknownTypeError(f"unknown class {name!r}")
    chain = [name]
    cur = program.class_map[name].superclass
    while cur is not None:
        if cur in chain:
            raise CyclicHierarchyError(f"cyclic extends through {cur!r}")
        chain.append(cur)
        decl = program.class_map.get(cur)
        if decl is None:
            raise UnknownTypeError(f"unknown class {cur!r}")
        cur = decl.superclass
    return chain


# ---------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>(?://|\#)[^\n]*)
  | (?P<nl>\n)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<op>:=|->|==|[{}()\[\],.:/;><=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            tokens.append(Token("nl", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, expected: str) -> ParseError:
        t = self.tok
        got = "end of input" if t.kind == "eof" else ("newline" if t.kind == "nl" else repr(t.text))
        return ParseError(f"expected {expected}, got {got}", t.line, t.col)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "ident")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(repr(text))
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "ident":
            raise self.error(what)
        t = self.tok
        self.i += 1
        return t.text

    def integer(self) -> int:
        if self.tok.kind != "int":
            raise self.error("integer")
        t = self.tok
        self.i += 1
        return int(t.text)

    def skip_newlines(self) -> None:
        while self.tok.kind == "nl" or self.at(";"):
            self.i += 1

    def end_of_statement(self) -> None:
        if self.tok.kind == "nl" or self.at(";"):
            self.i += 1
        elif not (self.at("}") or self.tok.kind == "eof"):
            raise self.error("end of statement")

    # -- declarations

    def program(self) -> list[ClassDecl]:
        classes = []
        self.skip_newlines()
        while self.tok.kind != "eof":
            classes.append(self.class_decl())
            self.skip_newlines()
        return classes

    def type_name(self) -> str:
        t = self.ident("type name")
        while self.accept("["):
            self.expect("]")
            t += "[]"
        return t

    def class_decl(self) -> ClassDecl:
        line = self.tok.line
        external = self.accept("extern")
        is_interface = False
        if self.accept("interface"):
            is_interface = True
        else:
            self.expect("class")
        name = self.ident("class name")
        superclass, interfaces = None, []
        if is_interface:
            if self.accept("extends"):
                interfaces = self.name_list()
        else:
            if self.accept("extends"):
                superclass = self.ident("superclass name")
            if self.accept("implements"):
                interfaces = self.name_list()
        self.expect("{")
        fields, methods = [], []
        self.skip_newlines()
        while not self.accept("}"):
            if self.at("field"):
                self.i += 1
                fline = self.tok.line
                fname = self.ident("field name")
                self.expect(":")
                ftype = self.type_name()
                if any(f == fname for f, _ in fields):
                    raise IRError(f"duplicate field {fname!r} in class {name}", fline)
                fields.append((fname, ftype))
                self.end_of_statement()
            elif self.at("method") or self.at("entry"):
                methods.append(self.method_decl(name, bodiless=external or is_interface))
            else:
                raise self.error("'field', 'method' or '}'")
            self.skip_newlines()
        return ClassDecl(name, superclass, tuple(interfaces), tuple(fields), tuple(methods),
                         external, is_interface, line)

    def name_list(self) -> list[str]:
        names = [self.ident("type name")]
        while self.accept(","):
            names.append(self.ident("type name"))
        return names

    def method_decl(self, class_name: str, bodiless: bool) -> Method:
        line = self.tok.line
        entry = self.accept("entry")
        self.expect("method")
        name = self.ident("method name")
        arity = None
        if self.accept("/"):
            arity = self.integer()
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                pname = self.ident("parameter name")
                ptype = self.type_name() if self.accept(":") else None
                params.append((pname, ptype))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect("->")
        ret = self.type_name()
        if arity is not None and arity != len(params):
            raise ParseError(f"method {name}/{arity} declares {len(params)} parameters", line)
        if bodiless or not self.at("{"):
            if not bodiless:
                raise self.error("'{'")
            self.end_of_statement()
            return Method(class_name, name, tuple(params), ret, line=line, entry_point=entry)
        self.expect("{")
        locals_, body = [], []
        self.skip_newlines()
        while not self.accept("}"):
            if self.at("var"):
                self.i += 1
                vline, vcol = self.tok.line, self.tok.col
                vname = self.ident("variable name")
                vtype = self.type_name() if self.accept(":") else None
                if any(v == vname for v, _ in locals_) or any(p == vname for p, _ in params):
                    raise IRError(f"duplicate declaration of {vname!r}", vline, vcol)
                locals_.append((vname, vtype))
            else:
                body.append(self.statement())
            self.end_of_statement()
            self.skip_newlines()
        return Method(class_name, name, tuple(params), ret, tuple(locals_), tuple(body),
                      entry, line)

    # -- statements

    def callee(self) -> str:
        cls = self.ident("class name")
        self.expect(".")
        name = self.ident("method name")
        self.expect("/")
        arity = self.integer()
        return f"{cls}.{name}/{arity}"

    def call_args(self) -> tuple[str, ...]:
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.ident("argument identifier"))
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(args)

    def call(self, target: Optional[str], line: int) -> Call:
        tok = self.tok
        callee = self.callee()
        args = self.call_args()
        if int(callee.rsplit("/", 1)[1]) != len(args):
            raise ParseError(f"{callee} called with {len(args)} arguments", tok.line, tok.col)
        return Call(callee, args, target, line)

    def statement(self) -> Stmt:
        t = self.tok
        line = t.line
        if self.accept("label"):
            return Label(self.ident("label name"), line)
        if self.accept("goto"):
            return Goto(self.ident("label name"), line)
        if self.accept("return"):
            if self.tok.kind == "ident":
                return Return(self.ident(), line)
            return Return(None, line)
        if self.accept("call"):
            return self.call(None, line)
        if self.accept("if"):
            var = self.ident("condition variable")
            if self.accept(">"):
                cmp = ">"
            elif self.accept("<"):
                cmp = "<"
            elif self.accept("=") or self.accept("=="):
                cmp = "="
            else:
                raise self.error("'>', '<' or '='")
            zero = self.tok
            if self.integer() != 0:
                raise ParseError("conditions compare against 0", zero.line, zero.col)
            self.expect("goto")
            return If(var, cmp, self.ident("label name"), line)
        first = self.ident("statement")
        if self.accept("["):
            index = self.ident("index identifier")
            self.expect("]")
            self.expect(":=")
            return ArrayWrite(first, index, self.ident("source identifier"), line)
        if self.accept("."):
            fname = self.ident("field name")
            self.expect(":=")
            return FieldWrite(first, fname, self.ident("source identifier"), line)
        self.expect(":=")
        return self.rhs(first, line)

    def rhs(self, target: str, line: int) -> Stmt:
        if self.accept("const"):
            t = self.tok
            if t.kind == "int":
                self.i += 1
                return Const(target, int(t.text), line)
            if t.kind == "str":
                self.i += 1
                return Const(target, _unquote(t.text), line)
            if self.accept("null"):
                return Const(target, None, line)
            raise self.error("constant")
        if self.accept("call"):
            return self.call(target, line)
        first = self.ident("identifier or operator")
        # `neg x` versus a binary whose left operand happens to be named `neg`
        after = self.toks[self.i + 1]
        if first in UNARY_OPS and self.tok.kind == "ident" and (
                after.kind in ("nl", "eof") or after.text in (";", "}")):
            return Unary(target, first, self.ident(), line)
        if self.accept("["):
            index = self.ident("index identifier")
            self.expect("]")
            return ArrayRead(target, first, index, line)
        if self.accept("."):
            return FieldRead(target, first, self.ident("field name"), line)
        if self.tok.kind == "ident" and self.tok.text in BINARY_OPS:
            op = self.ident()
            return Binary(target, first, op, self.ident("operand"), line)
        if self.tok.kind == "ident":
            raise self.error("binary operator")
        return Copy(target, first, line)


def _unquote(s: str) -> str:
    return bytes(s[1:-1], "utf-8").decode("unicode_escape")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


# ---------------------------------------------------------------------------
# taint configuration

_METHOD_ID_RE = re.compile(r"^[A-Za-z_$][\w$]*\.[A-Za-z_$][\w$]*/\d+$")
_SYMBOL_RE = re.compile(r"^[A-Za-z_$][\w$]*$")


def parse_config(text: str) -> TaintConfig:
    sources: dict[str, str] = {}
    sinks: dict[str, str] = {}
    entries: set[str] = set()
    pure: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        want = 3 if key in ("source", "sink") else 2
        if key not in ("source", "sink", "entry", "pure"):
            raise ConfigError(f"unknown directive {key!r}", lineno, 1)
        if len(parts) != want:
            raise ConfigError(f"{key} takes {want - 1} argument(s)", lineno, 1)
        mid = parts[1]
        if not _METHOD_ID_RE.match(mid):
            raise ConfigError(f"malformed method id {mid!r}", lineno, 1)
        if key in ("source", "sink"):
            sym = parts[2]
            if not _SYMBOL_RE.match(sym):
                raise ConfigError(f"malformed symbol {sym!r}", lineno, 1)
            table = sources if key == "source" else sinks
            if mid in table and table[mid] != sym:
                raise ConfigError(f"{mid} mapped to two symbols", lineno, 1)
            table[mid] = sym
        elif key == "entry":
            entries.add(mid)
        else:
            pure.add(mid)
    both = set(sources) & set(sinks)
    if both:
        raise ConfigError(f"method(s) both source and sink: {sorted(both)}")
    shared = set(sources.values()) & set(sinks.values())
    if shared:
        raise ConfigError(f"symbol(s) used as both source and sink: {sorted(shared)}")
    return TaintConfig(sources, sinks, frozenset(entries), frozenset(pure))


def format_config(config: TaintConfig) -> str:
    lines = [f"source {m} {s}" for m, s in sorted(config.sources.items())]
    lines += [f"sink {m} {s}" for m, s in sorted(config.sinks.items())]
    lines += [f"entry {m}" for m in sorted(config.entries)]
    lines += [f"pure {m}" for m in sorted(config.pure)]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# validation


def _resolve_type(t: Optional[str], known: set[str], line: int) -> None:
    if t is None:
        return
    base = element_type(t)
    if base not in PRIMITIVES and base not in known:
        raise UnknownTypeError(f"unknown type {t!r}", line)


def _implicit_locals(m: Method) -> tuple[tuple[str, Optional[str]], ...]:
    declared = {n for n, _ in m.params} | {n for n, _ in m.locals}
    extra = []
    for s in m.body or ():
        v = defined_var(s)
        if v is not None and v not in declared:
            declared.add(v)
            extra.append((v, None))
    return m.locals + tuple(extra)


def _falls_off_end(body: tuple[Stmt, ...]) -> bool:
    """Whether some reachable path runs past the last statement."""
    labels = {s.name: i for i, s in enumerate(body) if isinstance(s, Label)}
    seen, stack = set(), [0] if body else []
    while stack:
        i = stack.pop()
        if i >= len(body):
            return True
        if i in seen:
            continue
        seen.add(i)
        s = body[i]
        if isinstance(s, Return):
            continue
        if isinstance(s, Goto):
            stack.append(labels[s.label])
            continue
        if isinstance(s, If):
            stack.append(labels[s.label])
        stack.append(i + 1)
    return not body


def _check_method(m: Method, program_classes: dict[str, ClassDecl], known: set[str]) -> Method:
    for _, t in m.params:
        _resolve_type(t, known, m.line)
    _resolve_type(m.return_type, known, m.line)
    if m.body is None:
        return m
    for _, t in m.locals:
        _resolve_type(t, known, m.line)
    labels: dict[str, int] = {}
    for s in m.body:
        if isinstance(s, Label):
            if s.name in labels:
                raise DuplicateLabelError(f"label {s.name!r} declared twice in {m.id}", s.line)
            labels[s.name] = s.line
    m = Method(m.class_name, m.name, m.params, m.return_type, _implicit_locals(m),
               m.body, m.entry_point, m.line)
    declared = set(m.var_types)
    for s in m.body:
        if isinstance(s, (Goto, If)) and s.label not in labels:
            raise UndefinedLabelError(f"jump to undeclared label {s.label!r}", s.line)
        for v in used_vars(s):
            if v not in declared:
                raise UndeclaredIdentifierError(f"undeclared identifier {v!r} in {m.id}", s.line)
        if isinstance(s, Call):
            cls = s.class_name
            if cls not in known:
                raise UnknownTypeError(f"call to method of unknown class {cls!r}", s.line)
        if isinstance(s, (FieldRead, FieldWrite)):
            t = m.type_of(s.base)
            if t is None or element_type(t) in PRIMITIVES or is_array_type(t):
                raise IRError(f"field access {s.base}.{s.field_name} needs a declared class type",
                              s.line)
    if not m.is_void and _falls_off_end(m.body):
        raise IRError(f"non-void method {m.id} can finish without 'return'", m.line)
    return m


def _validate(classes: list[ClassDecl], config: TaintConfig) -> list[ClassDecl]:
    names = [c.name for c in classes]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise IRError(f"class(es) declared twice: {sorted(dupes)}")
    for b in BUILTIN_CLASSES:
        if b not in names:
            classes.append(ClassDecl(b, external=True))
    known = {c.name for c in classes}
    by_name = {c.name: c for c in classes}
    for c in classes:
        for parent in ([c.superclass] if c.superclass else []) + list(c.interfaces):
            if parent not in known:
                raise UnknownTypeError(f"class {c.name} extends unknown type {parent!r}", c.line)
        for _, t in c.fields:
            _resolve_type(t, known, c.line)
        seen = set()
        for m in c.methods:
            if m.signature in seen:
                raise IRError(f"method {m.id} declared twice", m.line)
            seen.add(m.signature)
    for c in classes:
        chain, cur = [c.name], c.superclass
        while cur is not None:
            if cur in chain:
                raise CyclicHierarchyError(f"cyclic extends: {' -> '.join(chain + [cur])}", c.line)
            chain.append(cur)
            cur = by_name[cur].superclass
    out = []
    for c in classes:
        methods = []
        for m in c.methods:
            m = _check_method(m, by_name, known)
            if m.id in config.entries and not m.entry_point:
                m = Method(m.class_name, m.name, m.params, m.return_type, m.locals, m.body,
                           True, m.line)
            methods.append(m)
        out.append(ClassDecl(c.name, c.superclass, c.interfaces, c.fields, tuple(methods),
                             c.external, c.is_interface, c.line))
    return out


def program_digest(text: str, config_text: str) -> str:
    h = hashlib.sha256()
    h.update(text.encode())
    h.update(b"\0")
    h.update(config_text.encode())
    return h.hexdigest()


def parse_program(text: str, config: str = "") -> Program:
    """Parse IR text plus taint-configuration text into a validated Program."""
    cfg = parse_config(config)
    classes = _validate(_Parser(text).program(), cfg)
    program = Program(tuple(classes), cfg, program_digest(text, config))
    bodied = program.methods()
    for mid in cfg.entries:
        if mid not in bodied:
            raise ConfigError(f"entry point {mid} is not a method with a body")
    return program


def parse_file(ir_path, config_path=None) -> Program:
    with open(ir_path) as fh:
        text = fh.read()
    cfg_text = ""
    if config_path is not None:
        with open(config_path) as fh:
            cfg_text = fh.read()
    return parse_program(text, cfg_text)


# ---------------------------------------------------------------------------
# printing


def format_stmt(s: Stmt) -> str:
    if isinstance(s, Const):
        v = "null" if s.value is None else (_quote(s.value) if isinstance(s.value, str) else str(s.value))
        return f"{s.target} := const {v}"
    if isinstance(s, Copy):
        return f"{s.target} := {s.source}"
    if isinstance(s, Unary):
        return f"{s.target} := {s.op} {s.operand}"
    if isinstance(s, Binary):
        return f"{s.target} := {s.left} {s.op} {s.right}"
    if isinstance(s, ArrayRead):
        return f"{s.target} := {s.array}[{s.index}]"
    if isinstance(s, ArrayWrite):
        return f"{s.array}[{s.index}] := {s.source}"
    if isinstance(s, FieldRead):
        return f"{s.target} := {s.base}.{s.field_name}"
    if isinstance(s, FieldWrite):
        return f"{s.base}.{s.field_name} := {s.source}"
    if isinstance(s, Call):
        call = f"call {s.callee}({', '.join(s.args)})"
        return f"{s.target} := {call}" if s.target else call
    if isinstance(s, Return):
        return f"return {s.value}" if s.value is not None else "return"
    if isinstance(s, Goto):
        return f"goto {s.label}"
    if isinstance(s, Label):
        return f"label {s.name}"
    if isinstance(s, If):
        return f"if {s.var} {s.cmp} 0 goto {s.label}"
    raise TypeError(f"not a statement: {s!r}")


def _format_params(params) -> str:
    return ", ".join(f"{n}: {t}" if t else n for n, t in params)


def format_program(program: Program, include_builtins: bool = False) -> str:
    out = []
    for c in program.classes:
        if not include_builtins and c.name in BUILTIN_CLASSES and c.external and not c.methods \
                and not c.fields and c.line == 0:
            continue
        head = ("extern " if c.external else "") + ("interface " if c.is_interface else "class ")
        head += c.name
        if c.superclass:
            head += f" extends {c.superclass}"
        if c.interfaces:
            head += (" extends " if c.is_interface else " implements ") + ", ".join(c.interfaces)
        out.append(head + " {")
        for f, t in c.fields:
            out.append(f"  field {f}: {t}")
        for m in c.methods:
            sig = f"  {'entry ' if m.entry_point else ''}method {m.name}/{m.arity}(" \
                  f"{_format_params(m.params)}) -> {m.return_type}"
            if m.body is None:
                out.append(sig)
                continue
            out.append(sig + " {")
            for v, t in m.locals:
                out.append(f"    var {v}: {t}" if t else f"    var {v}")
            for s in m.body:
                out.append("    " + format_stmt(s))
            out.append("  }")
        out.append("}")
    return "\n".join(out) + "\n"


def iter_statements(program: Program) -> Iterator[tuple[Method, Stmt]]:
    for m in program.methods().values():
        for s in m.body:
            yield m, s
