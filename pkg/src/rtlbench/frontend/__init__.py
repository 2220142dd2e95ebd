"""Lexing, parsing, and source metrics for the synthesizable Verilog subset."""

from .nodes import (  # noqa: F401
    AlwaysBlock,
    Binary,
    Block,
    CaseItem,
    CaseStmt,
    Concat,
    ContAssign,
    Ident,
    IfStmt,
    Instance,
    ModuleDecl,
    NetDecl,
    Number,
    OpaqueItem,
    ParamDecl,
    PortDecl,
    ProcAssign,
    Repeat,
    Select,
    SourceUnit,
    Ternary,
    Unary,
)
from .parser import parse  # noqa: F401
from .metrics import (  # noqa: F401
    DEFAULT_COMPLEXITY_KEYWORDS,
    complexity_score,
    count_assertions,
    loc_count,
)
