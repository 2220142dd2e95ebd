"""Recursive-descent parser for the synthesizable subset.

Module skeletons (header, port list, endmodule) must be well-formed;
items inside a body that fall outside the subset are retained as opaque
text and only rejected later at elaboration.
"""
from __future__ import annotations

from ..errors import VerilogSyntaxError
from .lexer import Lexer, NumberValue, Token
from .nodes import (
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

GATE_PRIMITIVES = frozenset(["and", "nand", "or", "nor", "xor", "xnor", "not", "buf"])

_BLOCK_CLOSERS = {
    "begin": "end",
    "case": "endcase",
    "casez": "endcase",
    "casex": "endcase",
    "function": "endfunction",
    "task": "endtask",
    "generate": "endgenerate",
    "fork": "join",
    "specify": "endspecify",
}

# Binary operators by ascending precedence tier.
_BINOP_TIERS = [
    ["||"],
    ["&&"],
    ["|"],
    ["^", "~^", "^~"],
    ["&"],
    ["==", "!=", "===", "!=="],
    ["<", "<=", ">", ">="],
    ["<<", ">>", "<<<", ">>>"],
    ["+", "-"],
    ["*", "/", "%"],
]


class _Unsupported(Exception):
    """Internal signal: demote the current item to opaque text."""


class Parser:
    def __init__(self, source: str):
        self.source = source
        self.lexer = Lexer(source)
        self.tokens = self.lexer.tokens
        self.idx = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.idx + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.idx]
        if tok.kind != "eof":
            self.idx += 1
        return tok

    def at(self, kind: str, value=None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def accept(self, kind: str, value=None) -> Token | None:
        if self.at(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value=None, what: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, value):
            self._error(what or f"expected {value or kind}, found {tok.value!r}", tok)
        return self.advance()

    def _error(self, message: str, tok: Token):
        line, col = self.lexer.line_col(tok.pos)
        raise VerilogSyntaxError(message, pos=tok.pos, line=line, col=col)

    # -- entry point ----------------------------------------------------------

    def parse(self) -> SourceUnit:
        modules = []
        segments = []
        cursor = 0
        while not self.at("eof"):
            tok = self.peek()
            if tok.kind == "kw" and tok.value == "module":
                segments.append(self.source[cursor : tok.pos])
                modules.append(self.parse_module())
                cursor = self.tokens[self.idx - 1].end
            elif tok.kind == "kw" and tok.value == "endmodule":
                self._error("stray endmodule", tok)
            else:
                self._error(f"unexpected top-level token {tok.value!r}", tok)
        segments.append(self.source[cursor:])
        names = set()
        for mod in modules:
            if mod.name in names:
                raise VerilogSyntaxError(f"duplicate module name {mod.name}")
            names.add(mod.name)
        unit = SourceUnit(modules=modules, trailing_text="".join(segments).strip())
        self._link_instances(unit)
        return unit

    def _link_instances(self, unit: SourceUnit) -> None:
        names = {m.name for m in unit.modules}
        for mod in unit.modules:
            for item in mod.items:
                if isinstance(item, Instance):
                    item.external = item.target not in names and item.target not in GATE_PRIMITIVES

    # -- module ----------------------------------------------------------------

    def parse_module(self) -> ModuleDecl:
        start = self.expect("kw", "module").pos
        name = self.expect("id", what="expected module name").value
        params: list[ParamDecl] = []
        ports: list[PortDecl] = []
        port_order: list[str] = []
        if self.accept("#"):
            params = self.parse_param_list()
        if self.accept("("):
            ports, port_order = self.parse_port_list()
        self.expect(";", what="malformed port list: expected ';'")
        items = self.parse_items(ports, port_order)
        end_tok = self.expect("kw", "endmodule")
        mod = ModuleDecl(name=name, ports=ports, params=params, items=items, span=(start, end_tok.end))
        resolve_module_widths(mod)
        return mod

    def parse_param_list(self) -> list[ParamDecl]:
        self.expect("(", what="malformed parameter list")
        params: list[ParamDecl] = []
        if self.accept(")"):
            return params
        while True:
            self.accept("kw", "parameter")
            self.accept("kw", "integer") or self.accept("kw", "signed")
            if self.at("["):
                self._parse_range()
            pname = self.expect("id", what="expected parameter name").value
            self.expect("=", what="malformed parameter list: expected '='")
            params.append(ParamDecl(name=pname, value_expr=self.parse_expr()))
            if not self.accept(","):
                break
        self.expect(")", what="malformed parameter list: expected ')'")
        return params

    def parse_port_list(self) -> tuple[list[PortDecl], list[str]]:
        """Handle both ANSI headers and bare non-ANSI name lists."""
        ports: list[PortDecl] = []
        order: list[str] = []
        if self.accept(")"):
            return ports, order
        direction = None
        while True:
            tok = self.peek()
            if tok.kind == "kw" and tok.value in ("input", "output", "inout"):
                self.advance()
                direction = {"input": "in", "output": "out", "inout": "inout"}[tok.value]
                is_reg = bool(self.accept("kw", "wire") is None and self.accept("kw", "reg"))
                signed = bool(self.accept("kw", "signed"))
                rng = self._parse_range() if self.at("[") else None
                pname = self.expect("id", what="malformed port list: expected port name").value
                ports.append(
                    PortDecl(pname, direction, 1, signed, range_exprs=rng, is_reg=is_reg)
                )
                order.append(pname)
            elif tok.kind == "id":
                self.advance()
                if direction is not None:
                    prev = ports[-1]
                    ports.append(
                        PortDecl(tok.value, direction, 1, prev.signed,
                                 range_exprs=prev.range_exprs, is_reg=prev.is_reg)
                    )
                order.append(tok.value)
            else:
                self._error("malformed port list", tok)
            if not self.accept(","):
                break
        self.expect(")", what="malformed port list: expected ')'")
        return ports, order

    def _parse_range(self) -> tuple:
        self.expect("[")
        msb = self.parse_expr()
        self.expect(":", what="expected ':' in range")
        lsb = self.parse_expr()
        self.expect("]", what="expected ']' in range")
        return (msb, lsb)

    # -- module items -------------------------------------------------------

    def parse_items(self, ports: list[PortDecl], port_order: list[str]) -> list:
        items = []
        declared = {p.name: p for p in ports}
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                self._error("unbalanced module/endmodule: unexpected end of file", tok)
            if tok.kind == "kw" and tok.value == "endmodule":
                return items
            if tok.kind == "kw" and tok.value == "module":
                self._error("unbalanced module/endmodule: nested module", tok)
            start_idx = self.idx
            try:
                item = self._parse_one_item(declared, port_order, ports)
            except _Unsupported:
                self.idx = start_idx
                item = self._skip_opaque_item()
            except VerilogSyntaxError:
                self.idx = start_idx
                item = self._skip_opaque_item()
            if isinstance(item, list):
                items.extend(item)
            elif item is not None:
                items.append(item)

    def _parse_one_item(self, declared, port_order, ports):
        tok = self.peek()
        if self.accept(";"):
            return None
        if tok.kind == "kw":
            kw = tok.value
            if kw in ("input", "output", "inout"):
                self._parse_nonansi_port_decl(declared, port_order, ports)
                return None
            if kw in ("wire", "reg"):
                return self._parse_net_decl()
            if kw in ("parameter", "localparam"):
                return self._parse_param_decl(kw == "localparam")
            if kw == "assign":
                return self._parse_cont_assign()
            if kw == "always":
                return self._parse_always()
            if kw == "or":  # gate primitive; 'or' doubles as a keyword
                return self._parse_gate_instance()
            raise _Unsupported(kw)
        if tok.kind == "id":
            if tok.value in GATE_PRIMITIVES:
                return self._parse_gate_instance()
            return self._parse_instance()
        raise _Unsupported(str(tok.value))

    def _skip_opaque_item(self) -> OpaqueItem:
        start_tok = self.peek()
        stack: list[str] = []
        last = None
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                self._error("unbalanced module/endmodule: unexpected end of file", tok)
            if tok.kind == "kw" and tok.value == "endmodule":
                if stack:
                    self._error("unbalanced block before endmodule", tok)
                break
            self.advance()
            last = tok
            if tok.kind == "kw":
                if tok.value in _BLOCK_CLOSERS:
                    stack.append(_BLOCK_CLOSERS[tok.value])
                elif stack and tok.value == stack[-1]:
                    stack.pop()
            if not stack and (tok.kind == ";" or (tok.kind == "kw" and tok.value in _BLOCK_CLOSERS.values())):
                nxt = self.peek()
                if nxt.kind == "kw" and nxt.value == "else":
                    continue
                break
        end = last.end if last is not None else start_tok.pos
        return OpaqueItem(text=self.source[start_tok.pos : end], span=(start_tok.pos, end))

    def _parse_nonansi_port_decl(self, declared, port_order, ports) -> None:
        tok = self.advance()
        direction = {"input": "in", "output": "out", "inout": "inout"}[tok.value]
        is_reg = bool(self.accept("kw", "wire") is None and self.accept("kw", "reg"))
        signed = bool(self.accept("kw", "signed"))
        rng = self._parse_range() if self.at("[") else None
        while True:
            name = self.expect("id", what="expected port name").value
            if name in declared:
                port = declared[name]
                port.direction = direction
                port.signed = signed
                port.range_exprs = rng
                port.is_reg = port.is_reg or is_reg
            else:
                port = PortDecl(name, direction, 1, signed, range_exprs=rng, is_reg=is_reg)
                declared[name] = port
                ports.append(port)
                port_order.append(name)
            if not self.accept(","):
                break
        self.expect(";", what="expected ';' after port declaration")

    def _parse_net_decl(self):
        start = self.peek().pos
        kind = self.advance().value
        signed = bool(self.accept("kw", "signed"))
        rng = self._parse_range() if self.at("[") else None
        decls = []
        while True:
            name = self.expect("id", what="expected net name").value
            if self.at("["):  # memory declaration: reg [7:0] mem [0:255]
                raise _Unsupported("memory array")
            init = None
            if self.accept("="):
                # wire with initializer is an implicit continuous assign
                init = self.parse_expr()
            end = self.tokens[self.idx - 1].end
            decls.append((name, init, (start, end)))
            if not self.accept(","):
                break
        self.expect(";", what="expected ';' after net declaration")
        out = []
        for name, init, span in decls:
            out.append(NetDecl(kind, name, 1, signed, range_exprs=rng, span=span))
            if init is not None:
                if kind != "wire":
                    raise _Unsupported("reg initializer")
                out.append(ContAssign(Ident(name), init, span=span))
        return out if len(out) > 1 else out[0]

    def _parse_param_decl(self, is_local: bool):
        self.advance()
        self.accept("kw", "integer") or self.accept("kw", "signed")
        if self.at("["):
            self._parse_range()
        decls = []
        while True:
            name = self.expect("id", what="expected parameter name").value
            self.expect("=", what="expected '=' in parameter")
            decls.append(ParamDecl(name=name, value_expr=self.parse_expr(), is_local=is_local))
            if not self.accept(","):
                break
        self.expect(";", what="expected ';' after parameter")
        return decls if len(decls) > 1 else decls[0]

    def _parse_cont_assign(self):
        start = self.peek().pos
        self.advance()
        if self.at("#"):
            raise _Unsupported("assign delay")
        assigns = []
        while True:
            lhs = self.parse_lvalue()
            self.expect("=", what="expected '=' in assign")
            rhs = self.parse_expr()
            end = self.tokens[self.idx - 1].end
            assigns.append(ContAssign(lhs, rhs, span=(start, end)))
            if not self.accept(","):
                break
        self.expect(";", what="expected ';' after assign")
        return assigns if len(assigns) > 1 else assigns[0]

    def _parse_always(self):
        start = self.peek().pos
        self.advance()
        self.expect("@", what="expected '@' after always")
        edges = []
        plain = []
        is_star = False
        if self.accept("*"):
            is_star = True
        else:
            self.expect("(", what="expected sensitivity list")
            if self.accept("*"):
                is_star = True
                self.expect(")")
            else:
                while True:
                    if self.at("kw", "posedge") or self.at("kw", "negedge"):
                        edge = self.advance().value
                        sig = self.expect("id", what="expected signal after edge").value
                        edges.append(("pos" if edge == "posedge" else "neg", sig))
                    else:
                        plain.append(self.expect("id", what="expected signal in sensitivity list").value)
                    if self.accept("kw", "or") or self.accept(","):
                        continue
                    break
                self.expect(")", what="expected ')' after sensitivity list")
        if edges and plain:
            raise _Unsupported("mixed edge and level sensitivity")
        body = self.parse_stmt()
        end = self.tokens[self.idx - 1].end
        kind = "seq" if edges else "comb"
        return AlwaysBlock(kind=kind, edges=edges, body=body, span=(start, end))

    def _parse_gate_instance(self):
        start = self.peek().pos
        gate = self.advance().value
        name = ""
        if self.at("id"):
            name = self.advance().value
        self.expect("(", what="expected '(' in gate instantiation")
        conns = []
        while True:
            conns.append((None, self.parse_expr()))
            if not self.accept(","):
                break
        self.expect(")", what="expected ')' in gate instantiation")
        self.expect(";", what="expected ';' after gate instantiation")
        end = self.tokens[self.idx - 1].end
        return Instance(target=gate, name=name, param_overrides=[], connections=conns,
                        span=(start, end))

    def _parse_instance(self):
        start = self.peek().pos
        target = self.advance().value
        overrides = []
        if self.accept("#"):
            self.expect("(", what="expected '(' in parameter override")
            if not self.at(")"):
                while True:
                    if self.accept("."):
                        pname = self.expect("id").value
                        self.expect("(")
                        overrides.append((pname, self.parse_expr()))
                        self.expect(")")
                    else:
                        overrides.append((None, self.parse_expr()))
                    if not self.accept(","):
                        break
            self.expect(")", what="expected ')' in parameter override")
        name = self.expect("id", what="expected instance name").value
        if self.at("["):
            raise _Unsupported("instance array")
        self.expect("(", what="expected '(' in instantiation")
        conns = []
        if not self.at(")"):
            while True:
                if self.accept("."):
                    pname = self.expect("id").value
                    self.expect("(")
                    expr = None if self.at(")") else self.parse_expr()
                    self.expect(")")
                    conns.append((pname, expr))
                else:
                    conns.append((None, self.parse_expr()))
                if not self.accept(","):
                    break
        self.expect(")", what="expected ')' in instantiation")
        self.expect(";", what="expected ';' after instantiation")
        end = self.tokens[self.idx - 1].end
        return Instance(target=target, name=name, param_overrides=overrides,
                        connections=conns, span=(start, end))

    # -- statements ------------------------------------------------------------

    def parse_stmt(self):
        tok = self.peek()
        if tok.kind == "kw" and tok.value == "begin":
            self.advance()
            if self.accept(":"):
                self.expect("id")
            stmts = []
            while not self.at("kw", "end"):
                if self.at("eof"):
                    self._error("unexpected end of file in block", self.peek())
                stmts.append(self.parse_stmt())
            self.advance()
            return Block(stmts)
        if tok.kind == "kw" and tok.value == "if":
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_stmt()
            other = None
            if self.accept("kw", "else"):
                other = self.parse_stmt()
            return IfStmt(cond, then, other)
        if tok.kind == "kw" and tok.value in ("case", "casez"):
            return self._parse_case(tok.value)
        if tok.kind == "kw":
            raise _Unsupported(tok.value)
        if tok.kind == ";":
            self.advance()
            return Block([])
        if tok.kind in ("id", "{"):
            lhs = self.parse_lvalue()
            if self.accept("<="):
                blocking = False
            elif self.accept("="):
                blocking = True
            else:
                raise _Unsupported("statement")
            if self.at("#"):
                raise _Unsupported("assignment delay")
            rhs = self.parse_expr()
            self.expect(";", what="expected ';' after assignment")
            return ProcAssign(lhs, rhs, blocking)
        raise _Unsupported(str(tok.value))

    def _parse_case(self, kind: str):
        self.advance()
        self.expect("(")
        subject = self.parse_expr()
        self.expect(")")
        items = []
        while not self.at("kw", "endcase"):
            if self.at("eof"):
                self._error("unexpected end of file in case", self.peek())
            if self.accept("kw", "default"):
                self.accept(":")
                items.append(CaseItem(None, self.parse_stmt()))
                continue
            patterns = [self.parse_expr()]
            while self.accept(","):
                patterns.append(self.parse_expr())
            self.expect(":", what="expected ':' after case pattern")
            items.append(CaseItem(patterns, self.parse_stmt()))
        self.advance()
        return CaseStmt(kind, subject, items)

    # -- expressions ----------------------------------------------------------

    def parse_lvalue(self):
        if self.at("{"):
            self.advance()
            parts = [self.parse_lvalue()]
            while self.accept(","):
                parts.append(self.parse_lvalue())
            self.expect("}", what="expected '}' in concatenation")
            return Concat(parts)
        name = self.expect("id", what="expected signal name").value
        node = Ident(name)
        if self.at("["):
            node = self._parse_select(node)
        return node

    def _parse_select(self, base: Ident):
        self.expect("[")
        msb = self.parse_expr()
        indexed = None
        lsb = None
        if self.accept(":"):
            lsb = self.parse_expr()
        elif self.at("+") and self.peek(1).kind == ":":
            self.advance(), self.advance()
            indexed = "+:"
            lsb = self.parse_expr()
        elif self.at("-") and self.peek(1).kind == ":":
            self.advance(), self.advance()
            indexed = "-:"
            lsb = self.parse_expr()
        self.expect("]", what="expected ']' in select")
        return Select(base, msb, lsb, indexed=indexed)

    def parse_expr(self):
        return self._parse_ternary()

    def _parse_ternary(self):
        cond = self._parse_binary(0)
        if self.accept("?"):
            then = self._parse_ternary()
            self.expect(":", what="expected ':' in conditional expression")
            other = self._parse_ternary()
            return Ternary(cond, then, other)
        return cond

    def _parse_binary(self, tier: int):
        if tier >= len(_BINOP_TIERS):
            return self._parse_unary()
        left = self._parse_binary(tier + 1)
        ops = _BINOP_TIERS[tier]
        while True:
            tok = self.peek()
            if tok.kind in ops:
                # '<=' is an operator only in expression context; statement
                # level consumed it before reaching here.
                self.advance()
                right = self._parse_binary(tier + 1)
                left = Binary(tok.kind, left, right)
            else:
                return left

    def _parse_unary(self):
        tok = self.peek()
        if tok.kind in ("~", "!", "-", "+", "&", "|", "^", "~&", "~|", "~^", "^~"):
            self.advance()
            operand = self._parse_unary()
            if tok.kind == "+":
                return operand
            op = "~^" if tok.kind == "^~" else tok.kind
            return Unary(op, operand)
        return self._parse_primary()

    def _parse_primary(self):
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            nv: NumberValue = tok.value
            return Number(nv.width, nv.base, nv.digits, nv.value, nv.has_xz)
        if tok.kind == "id":
            self.advance()
            node = Ident(tok.value)
            if self.at("["):
                node = self._parse_select(node)
                if self.at("["):
                    raise _Unsupported("nested select")
            return node
        if tok.kind == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")", what="expected ')'")
            return expr
        if tok.kind == "{":
            self.advance()
            first = self.parse_expr()
            if self.at("{"):
                # replication: {N{expr}}
                self.advance()
                part = self.parse_expr()
                self.expect("}", what="expected '}' in replication")
                self.expect("}", what="expected '}' closing replication")
                return Repeat(first, part)
            parts = [first]
            while self.accept(","):
                parts.append(self.parse_expr())
            self.expect("}", what="expected '}' in concatenation")
            return Concat(parts)
        raise _Unsupported(str(tok.value))


def parse(source: str) -> SourceUnit:
    """Parse preprocessed text into a source unit with byte-exact spans."""
    return Parser(source).parse()


# -- constant folding ---------------------------------------------------------


def const_eval(expr, env: dict[str, int]) -> int | None:
    """Evaluate a compile-time-constant expression; None when not constant."""
    if isinstance(expr, Number):
        return expr.value
    if isinstance(expr, Ident):
        return env.get(expr.name)
    if isinstance(expr, Unary):
        v = const_eval(expr.operand, env)
        if v is None:
            return None
        if expr.op == "-":
            return -v
        if expr.op == "!":
            return 0 if v else 1
        return None  # bitwise unaries need a width; not treated as constants
    if isinstance(expr, Binary):
        a = const_eval(expr.left, env)
        b = const_eval(expr.right, env)
        if a is None or b is None:
            return None
        try:
            return {
                "+": lambda: a + b,
                "-": lambda: a - b,
                "*": lambda: a * b,
                "/": lambda: a // b if b else None,
                "%": lambda: a % b if b else None,
                "<<": lambda: a << b,
                ">>": lambda: a >> b,
                "==": lambda: int(a == b),
                "!=": lambda: int(a != b),
                "<": lambda: int(a < b),
                "<=": lambda: int(a <= b),
                ">": lambda: int(a > b),
                ">=": lambda: int(a >= b),
                "&&": lambda: int(bool(a) and bool(b)),
                "||": lambda: int(bool(a) or bool(b)),
                "&": lambda: a & b,
                "|": lambda: a | b,
                "^": lambda: a ^ b,
            }[expr.op]()
        except KeyError:
            return None
    if isinstance(expr, Ternary):
        c = const_eval(expr.cond, env)
        if c is None:
            return None
        return const_eval(expr.then if c else expr.other, env)
    return None


def _width_from_range(rng: tuple | None, env: dict[str, int]) -> int | None:
    if rng is None:
        return 1
    msb = const_eval(rng[0], env)
    lsb = const_eval(rng[1], env)
    if msb is None or lsb is None:
        return None
    return abs(msb - lsb) + 1


def resolve_module_widths(mod: ModuleDecl) -> dict[str, int]:
    """Fold parameter defaults and fill port/net widths; returns the env."""
    env: dict[str, int] = {}
    for p in mod.params:
        p.value = const_eval(p.value_expr, env)
        if p.value is not None:
            env[p.name] = p.value
    for item in mod.items:
        if isinstance(item, ParamDecl):
            item.value = const_eval(item.value_expr, env)
            if item.value is not None:
                env[item.name] = item.value
    for port in mod.ports:
        port.width = _width_from_range(port.range_exprs, env)
    for item in mod.items:
        if isinstance(item, NetDecl):
            item.width = _width_from_range(item.range_exprs, env)
    return env
