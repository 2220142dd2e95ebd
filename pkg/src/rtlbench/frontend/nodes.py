"""AST node types.

Spans are byte offsets into the parsed source and are excluded from
equality so a module reparsed from its own slice compares equal to the
original.
"""
from __future__ import annotations

from dataclasses import dataclass, field


# -- expressions -------------------------------------------------------------


@dataclass
class Ident:
    name: str


@dataclass
class Number:
    width: int | None
    base: str
    digits: str
    value: int | None
    has_xz: bool = False

    @staticmethod
    def from_int(value: int) -> "Number":
        return Number(None, "d", str(value), value, False)


@dataclass
class Unary:
    op: str  # ~ ! - + & | ^ ~& ~| ~^
    operand: object


@dataclass
class Binary:
    op: str
    left: object
    right: object


@dataclass
class Ternary:
    cond: object
    then: object
    other: object


@dataclass
class Concat:
    parts: list


@dataclass
class Repeat:
    count: object
    part: object


@dataclass
class Select:
    base: Ident
    msb: object
    lsb: object | None  # None = single bit select
    indexed: str | None = None  # '+:' / '-:' unsupported downstream


# -- statements ----------------------------------------------------------------


@dataclass
class Block:
    stmts: list


@dataclass
class IfStmt:
    cond: object
    then: object
    other: object | None


@dataclass
class CaseItem:
    patterns: list | None  # None = default
    body: object


@dataclass
class CaseStmt:
    kind: str  # 'case' or 'casez'
    subject: object
    items: list


@dataclass
class ProcAssign:
    lhs: object
    rhs: object
    blocking: bool


# -- module items ---------------------------------------------------------------


@dataclass
class PortDecl:
    name: str
    direction: str  # 'in', 'out', 'inout'
    width: int
    signed: bool = False
    range_exprs: tuple | None = field(default=None, compare=False)  # (msb, lsb) ASTs
    is_reg: bool = field(default=False, compare=False)


@dataclass
class ParamDecl:
    name: str
    value_expr: object = field(compare=False)
    value: int | None = None
    is_local: bool = False


@dataclass
class NetDecl:
    kind: str  # 'wire' or 'reg'
    name: str
    width: int
    signed: bool = False
    range_exprs: tuple | None = field(default=None, compare=False)
    span: tuple = field(default=(0, 0), compare=False)


@dataclass
class ContAssign:
    lhs: object
    rhs: object
    span: tuple = field(default=(0, 0), compare=False)


@dataclass
class AlwaysBlock:
    kind: str  # 'comb' or 'seq'
    edges: list  # [(edge, signal_name)] for 'seq'; [] for 'comb'
    body: object
    span: tuple = field(default=(0, 0), compare=False)


@dataclass
class Instance:
    target: str
    name: str
    param_overrides: list  # [(name|None, expr)]; name None = positional
    connections: list  # [(port|None, expr|None)]; port None = positional
    external: bool = False
    span: tuple = field(default=(0, 0), compare=False)


@dataclass
class OpaqueItem:
    text: str
    span: tuple = field(default=(0, 0), compare=False)


@dataclass
class ModuleDecl:
    name: str
    ports: list
    params: list
    items: list
    span: tuple = field(default=(0, 0), compare=False)


@dataclass
class SourceUnit:
    modules: list
    trailing_text: str = ""

    def module(self, name: str) -> ModuleDecl | None:
        for mod in self.modules:
            if mod.name == name:
                return mod
        return None
