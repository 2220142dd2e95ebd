"""Slow reference interpreter working directly on the AST with integers.

This is an independent implementation of the subset semantics (no gates,
no bit-blasting): signals hold masked integers, combinational logic
settles by fixed-point iteration, and clocked blocks commit non-blocking
writes once per cycle.  It exists to cross-check the elaborated netlists.
"""
from __future__ import annotations

from ..errors import SimulationError
from ..frontend.nodes import (
    AlwaysBlock,
    Binary,
    Block,
    CaseStmt,
    Concat,
    ContAssign,
    Ident,
    IfStmt,
    Instance,
    ModuleDecl,
    NetDecl,
    Number,
    ParamDecl,
    ProcAssign,
    Repeat,
    Select,
    SourceUnit,
    Ternary,
    Unary,
)
from ..frontend.parser import GATE_PRIMITIVES, const_eval


def _mask(width: int) -> int:
    return (1 << width) - 1


class _IScope:
    def __init__(self, module: ModuleDecl, env: dict[str, int]):
        self.module = module
        self.env = env
        self.widths: dict[str, int] = {}
        self.values: dict[str, int] = {}
        self.assigns: list[ContAssign] = []
        self.comb_blocks: list[AlwaysBlock] = []
        self.seq_blocks: list[tuple] = []  # (block, reset_name, negated, reset_edge)
        self.gates: list[Instance] = []
        self.instances: list[tuple] = []  # (Instance, child scope, {port: expr})
        self.out_conns: list[tuple] = []  # (child, port_name, lhs expr)
        self.reg_init: dict[str, int] = {}


class RefSim:
    def __init__(self, unit: SourceUnit, top: str, param_overrides: dict[str, int] | None = None):
        self.unit = unit
        self.modules = {m.name: m for m in unit.modules}
        if top not in self.modules:
            raise SimulationError(f"top module {top!r} not found")
        self.top = self._build(self.modules[top], dict(param_overrides or {}))
        self.scopes: list[_IScope] = []
        self._flatten(self.top)
        self._reset()

    # -- construction -------------------------------------------------------

    def _module_env(self, mod: ModuleDecl, overrides: dict[str, int]) -> dict[str, int]:
        env: dict[str, int] = {}
        body = [i for i in mod.items if isinstance(i, ParamDecl)]
        for p in mod.params + [q for q in body if not q.is_local]:
            value = overrides.get(p.name, const_eval(p.value_expr, env))
            if value is None:
                raise SimulationError(f"parameter {p.name} not constant")
            env[p.name] = value
        for p in body:
            if p.is_local:
                value = const_eval(p.value_expr, env)
                if value is None:
                    raise SimulationError(f"localparam {p.name} not constant")
                env[p.name] = value
        return env

    def _range_width(self, rng, env) -> int:
        if rng is None:
            return 1
        msb = const_eval(rng[0], env)
        lsb = const_eval(rng[1], env)
        if msb is None or lsb is None:
            raise SimulationError("non-constant range")
        return abs(msb - lsb) + 1

    def _build(self, mod: ModuleDecl, overrides: dict[str, int]) -> _IScope:
        env = self._module_env(mod, overrides)
        scope = _IScope(mod, env)
        for port in mod.ports:
            scope.widths[port.name] = self._range_width(port.range_exprs, env)
        for item in mod.items:
            if isinstance(item, NetDecl):
                if item.range_exprs is not None or item.name not in scope.widths:
                    scope.widths[item.name] = self._range_width(item.range_exprs, env)
            elif isinstance(item, ContAssign):
                scope.assigns.append(item)
            elif isinstance(item, AlwaysBlock):
                if item.kind == "comb":
                    scope.comb_blocks.append(item)
                else:
                    scope.seq_blocks.append(self._analyze_seq(item, env))
            elif isinstance(item, Instance):
                if item.target in GATE_PRIMITIVES:
                    scope.gates.append(item)
                    continue
                child_mod = self.modules.get(item.target)
                if child_mod is None:
                    raise SimulationError(f"unresolved module {item.target}")
                child_overrides: dict[str, int] = {}
                public = [p for p in child_mod.params if not p.is_local] + [
                    p for p in child_mod.items if isinstance(p, ParamDecl) and not p.is_local
                ]
                for pos, (pname, expr) in enumerate(item.param_overrides):
                    value = const_eval(expr, env)
                    if value is None:
                        raise SimulationError("non-constant parameter override")
                    child_overrides[pname if pname else public[pos].name] = value
                child = self._build(child_mod, child_overrides)
                conns: dict[str, object] = {}
                if item.connections and item.connections[0][0] is None:
                    for port, (_, expr) in zip(child_mod.ports, item.connections):
                        conns[port.name] = expr
                else:
                    for pname, expr in item.connections:
                        conns[pname] = expr
                scope.instances.append((item, child, conns))
                for port in child_mod.ports:
                    if port.direction == "out" and conns.get(port.name) is not None:
                        scope.out_conns.append((child, port.name, conns[port.name]))
        return scope

    def _analyze_seq(self, block: AlwaysBlock, env) -> tuple:
        reset_name = None
        negated = False
        reset_edge = None
        if len(block.edges) == 2:
            stmt = block.body
            while isinstance(stmt, Block) and len(stmt.stmts) == 1:
                stmt = stmt.stmts[0]
            cond = stmt.cond if isinstance(stmt, IfStmt) else None
            if isinstance(cond, Ident):
                reset_name = cond.name
            elif isinstance(cond, Unary) and cond.op in ("!", "~") and isinstance(cond.operand, Ident):
                reset_name, negated = cond.operand.name, True
            reset_edge = next((e for e, s in block.edges if s == reset_name), None)
        return (block, reset_name, negated, reset_edge)

    def _flatten(self, scope: _IScope) -> None:
        self.scopes.append(scope)
        for _, child, _ in scope.instances:
            self._flatten(child)

    # -- reset -------------------------------------------------------------------

    def _reset(self) -> None:
        for scope in self.scopes:
            for name in scope.widths:
                scope.values[name] = 0
            for block, reset_name, negated, reset_edge in scope.seq_blocks:
                inits = self._reset_values(scope, block, reset_name, negated, reset_edge)
                for name, value in inits.items():
                    scope.values[name] = value & _mask(scope.widths[name])
                    scope.reg_init[name] = scope.values[name]

    def _reset_values(self, scope, block, reset_name, negated, reset_edge) -> dict[str, int]:
        if reset_name is None:
            return {}
        stmt = block.body
        while isinstance(stmt, Block) and len(stmt.stmts) == 1:
            stmt = stmt.stmts[0]
        active = 1 if reset_edge == "pos" else 0
        cond_true = (active == 0) if negated else (active == 1)
        branch = stmt.then if cond_true else stmt.other
        values = {}
        if branch is None:
            return values
        for assign in self._walk_assigns(branch):
            if isinstance(assign.lhs, Ident):
                value = const_eval(assign.rhs, scope.env)
                if value is not None:
                    values[assign.lhs.name] = value
        return values

    @staticmethod
    def _walk_assigns(stmt):
        if isinstance(stmt, ProcAssign):
            yield stmt
        elif isinstance(stmt, Block):
            for sub in stmt.stmts:
                yield from RefSim._walk_assigns(sub)
        elif isinstance(stmt, IfStmt):
            yield from RefSim._walk_assigns(stmt.then)
            if stmt.other is not None:
                yield from RefSim._walk_assigns(stmt.other)
        elif isinstance(stmt, CaseStmt):
            for item in stmt.items:
                yield from RefSim._walk_assigns(item.body)

    # -- expression evaluation -----------------------------------------------------

    def _self_width(self, scope: _IScope, expr) -> int:
        if isinstance(expr, Number):
            return expr.width or 32
        if isinstance(expr, Ident):
            if expr.name not in scope.widths:
                raise SimulationError(f"undeclared signal {expr.name}")
            return scope.widths[expr.name]
        if isinstance(expr, Select):
            if expr.lsb is None:
                return 1
            msb = const_eval(expr.msb, scope.env)
            lsb = const_eval(expr.lsb, scope.env)
            return abs(msb - lsb) + 1
        if isinstance(expr, Unary):
            if expr.op in ("~", "-"):
                return self._self_width(scope, expr.operand)
            return 1
        if isinstance(expr, Binary):
            if expr.op in ("==", "!=", "<", "<=", ">", ">=", "&&", "||"):
                return 1
            if expr.op in ("<<", ">>"):
                return self._self_width(scope, expr.left)
            return max(self._self_width(scope, expr.left), self._self_width(scope, expr.right))
        if isinstance(expr, Ternary):
            return max(self._self_width(scope, expr.then), self._self_width(scope, expr.other))
        if isinstance(expr, Concat):
            return sum(self._self_width(scope, p) for p in expr.parts)
        if isinstance(expr, Repeat):
            return const_eval(expr.count, scope.env) * self._self_width(scope, expr.part)
        raise SimulationError(f"unsupported expression {type(expr).__name__}")

    def _eval(self, scope: _IScope, expr, ctx: int | None) -> int:
        if isinstance(expr, Number):
            width = max(expr.width or (ctx or 32), ctx or 0)
            if expr.value is None:
                raise SimulationError("x/z literal in expression")
            return expr.value & _mask(width)
        if isinstance(expr, Ident):
            return scope.values[expr.name]
        if isinstance(expr, Select):
            base = scope.values[expr.base.name]
            base_w = scope.widths[expr.base.name]
            if expr.lsb is None:
                idx = const_eval(expr.msb, scope.env)
                if idx is None:
                    idx = self._eval(scope, expr.msb, None)
                elif idx < 0 or idx >= base_w:
                    raise SimulationError(f"bit-select [{idx}] out of range")
                return (base >> idx) & 1
            msb = const_eval(expr.msb, scope.env)
            lsb = const_eval(expr.lsb, scope.env)
            lo, hi = min(msb, lsb), max(msb, lsb)
            return (base >> lo) & _mask(hi - lo + 1)
        if isinstance(expr, Unary):
            op = expr.op
            if op == "~":
                w = max(self._self_width(scope, expr.operand), ctx or 0)
                return (~self._eval(scope, expr.operand, w)) & _mask(w)
            if op == "-":
                w = max(self._self_width(scope, expr.operand), ctx or 1)
                return (-self._eval(scope, expr.operand, w)) & _mask(w)
            v = self._eval(scope, expr.operand, None)
            w = self._self_width(scope, expr.operand)
            if op == "!":
                return 0 if v else 1
            if op == "&":
                return 1 if v == _mask(w) else 0
            if op == "~&":
                return 0 if v == _mask(w) else 1
            if op == "|":
                return 1 if v else 0
            if op == "~|":
                return 0 if v else 1
            if op in ("^", "~^"):
                parity = bin(v).count("1") & 1
                return parity ^ (1 if op == "~^" else 0)
            raise SimulationError(f"unsupported unary {op}")
        if isinstance(expr, Binary):
            op = expr.op
            if op in ("&&", "||"):
                a = self._eval(scope, expr.left, None)
                b = self._eval(scope, expr.right, None)
                return int(bool(a) and bool(b)) if op == "&&" else int(bool(a) or bool(b))
            if op in ("==", "!=", "<", "<=", ">", ">="):
                w = max(self._self_width(scope, expr.left), self._self_width(scope, expr.right))
                a = self._eval(scope, expr.left, w)
                b = self._eval(scope, expr.right, w)
                return int(
                    {"==": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
                )
            if op in ("<<", ">>"):
                w = max(self._self_width(scope, expr.left), ctx or 0)
                a = self._eval(scope, expr.left, w)
                s = self._eval(scope, expr.right, None)
                if op == "<<":
                    return (a << s) & _mask(w) if s < 1 << 20 else 0
                return a >> s if s < 1 << 20 else 0
            w = max(
                self._self_width(scope, expr.left),
                self._self_width(scope, expr.right),
                ctx or 0,
            )
            a = self._eval(scope, expr.left, w)
            b = self._eval(scope, expr.right, w)
            if op == "+":
                return (a + b) & _mask(w)
            if op == "-":
                return (a - b) & _mask(w)
            if op == "*":
                return (a * b) & _mask(w)
            if op == "&":
                return a & b
            if op == "|":
                return a | b
            if op == "^":
                return a ^ b
            raise SimulationError(f"unsupported operator {op}")
        if isinstance(expr, Ternary):
            w = max(
                self._self_width(scope, expr.then),
                self._self_width(scope, expr.other),
                ctx or 0,
            )
            cond = self._eval(scope, expr.cond, None)
            return self._eval(scope, expr.then if cond else expr.other, w) & _mask(w)
        if isinstance(expr, Concat):
            acc = 0
            for part in expr.parts:
                pw = self._self_width(scope, part)
                acc = (acc << pw) | (self._eval(scope, part, pw) & _mask(pw))
            return acc
        if isinstance(expr, Repeat):
            count = const_eval(expr.count, scope.env)
            pw = self._self_width(scope, expr.part)
            piece = self._eval(scope, expr.part, pw) & _mask(pw)
            acc = 0
            for _ in range(count):
                acc = (acc << pw) | piece
            return acc
        raise SimulationError(f"unsupported expression {type(expr).__name__}")

    # -- lvalue writes ----------------------------------------------------------------

    def _lhs_parts(self, scope: _IScope, lhs) -> list[tuple[str, int, int]]:
        if isinstance(lhs, Concat):
            parts = []
            for sub in reversed(lhs.parts):
                parts.extend(self._lhs_parts(scope, sub))
            return parts
        if isinstance(lhs, Ident):
            return [(lhs.name, 0, scope.widths[lhs.name] - 1)]
        if isinstance(lhs, Select):
            msb = const_eval(lhs.msb, scope.env)
            if lhs.lsb is None:
                return [(lhs.base.name, msb, msb)]
            lsb = const_eval(lhs.lsb, scope.env)
            return [(lhs.base.name, min(msb, lsb), max(msb, lsb))]
        raise SimulationError("unsupported assignment target")

    def _write_parts(self, scope: _IScope, parts, value: int) -> None:
        """Distribute value bits over (signal, lo, hi) parts, LSB part first."""
        offset = 0
        for name, lo, hi in parts:
            span = hi - lo + 1
            bits = (value >> offset) & _mask(span)
            old = scope.values[name]
            scope.values[name] = (old & ~(_mask(span) << lo)) | (bits << lo)
            offset += span

    # -- statement execution (blocking, for combinational blocks) ----------------------

    def _exec_comb_stmt(self, scope: _IScope, stmt) -> None:
        if isinstance(stmt, Block):
            for sub in stmt.stmts:
                self._exec_comb_stmt(scope, sub)
        elif isinstance(stmt, ProcAssign):
            parts = self._lhs_parts(scope, stmt.lhs)
            total = sum(hi - lo + 1 for _, lo, hi in parts)
            value = self._eval(scope, stmt.rhs, total) & _mask(total)
            self._write_parts(scope, parts, value)
        elif isinstance(stmt, IfStmt):
            if self._eval(scope, stmt.cond, None):
                self._exec_comb_stmt(scope, stmt.then)
            elif stmt.other is not None:
                self._exec_comb_stmt(scope, stmt.other)
        elif isinstance(stmt, CaseStmt):
            self._exec_case(scope, stmt, self._exec_comb_stmt)
        else:
            raise SimulationError(f"unsupported statement {type(stmt).__name__}")

    def _exec_case(self, scope: _IScope, stmt: CaseStmt, executor) -> None:
        width = self._self_width(scope, stmt.subject)
        for item in stmt.items:
            if item.patterns:
                for pat in item.patterns:
                    if isinstance(pat, Number) and pat.width:
                        width = max(width, pat.width)
        subject = self._eval(scope, stmt.subject, width) & _mask(width)
        default_item = None
        for item in stmt.items:
            if item.patterns is None:
                default_item = item
                continue
            for pat in item.patterns:
                if self._pattern_matches(scope, stmt.kind, subject, pat, width):
                    executor(scope, item.body)
                    return
        if default_item is not None:
            executor(scope, default_item.body)

    def _pattern_matches(self, scope, kind: str, subject: int, pat, width: int) -> bool:
        if isinstance(pat, Number) and pat.has_xz:
            if kind != "casez":
                raise SimulationError("x/z digits in plain case pattern")
            care = 0
            value = 0
            if pat.base == "b":
                for i, ch in enumerate(reversed(pat.digits)):
                    if ch in "zZ?":
                        continue
                    care |= 1 << i
                    value |= (int(ch) & 1) << i
            elif pat.base == "h":
                for i, ch in enumerate(reversed(pat.digits)):
                    if ch in "zZ?":
                        continue
                    care |= 0xF << (4 * i)
                    value |= int(ch, 16) << (4 * i)
            else:
                raise SimulationError("unsupported casez pattern base")
            return (subject & care) == (value & care)
        return (self._eval(scope, pat, width) & _mask(width)) == subject

    # -- non-blocking execution (clocked blocks) -----------------------------------------

    def _exec_seq_stmt(self, scope: _IScope, stmt, pending: list) -> None:
        if isinstance(stmt, Block):
            for sub in stmt.stmts:
                self._exec_seq_stmt(scope, sub, pending)
        elif isinstance(stmt, ProcAssign):
            parts = self._lhs_parts(scope, stmt.lhs)
            total = sum(hi - lo + 1 for _, lo, hi in parts)
            value = self._eval(scope, stmt.rhs, total) & _mask(total)
            pending.append((scope, parts, value))
        elif isinstance(stmt, IfStmt):
            if self._eval(scope, stmt.cond, None):
                self._exec_seq_stmt(scope, stmt.then, pending)
            elif stmt.other is not None:
                self._exec_seq_stmt(scope, stmt.other, pending)
        elif isinstance(stmt, CaseStmt):
            self._exec_case(scope, stmt, lambda sc, body: self._exec_seq_stmt(sc, body, pending))
        else:
            raise SimulationError(f"unsupported statement {type(stmt).__name__}")

    # -- gates -------------------------------------------------------------------------

    def _eval_gate(self, scope: _IScope, item: Instance) -> None:
        out_expr = item.connections[0][1]
        parts = self._lhs_parts(scope, out_expr)
        total = sum(hi - lo + 1 for _, lo, hi in parts)
        ins = [self._eval(scope, e, total) & _mask(total) for _, e in item.connections[1:]]
        gate = item.target
        if gate == "buf":
            value = ins[0]
        elif gate == "not":
            value = (~ins[0]) & _mask(total)
        elif gate in ("and", "nand"):
            value = _mask(total)
            for v in ins:
                value &= v
            if gate == "nand":
                value = (~value) & _mask(total)
        elif gate in ("or", "nor"):
            value = 0
            for v in ins:
                value |= v
            if gate == "nor":
                value = (~value) & _mask(total)
        else:
            value = 0
            for v in ins:
                value ^= v
            if gate == "xnor":
                value = (~value) & _mask(total)
        self._write_parts(scope, parts, value)

    # -- cycle driver -------------------------------------------------------------------

    def _settle(self) -> None:
        limit = 4 + sum(len(s.widths) for s in self.scopes)
        for _ in range(limit):
            before = [dict(s.values) for s in self.scopes]
            for scope in self.scopes:
                for assign in scope.assigns:
                    parts = self._lhs_parts(scope, assign.lhs)
                    total = sum(hi - lo + 1 for _, lo, hi in parts)
                    value = self._eval(scope, assign.rhs, total) & _mask(total)
                    self._write_parts(scope, parts, value)
                for gate in scope.gates:
                    self._eval_gate(scope, gate)
                for block in scope.comb_blocks:
                    self._exec_comb_stmt(scope, block.body)
                for item, child, conns in scope.instances:
                    for port in child.module.ports:
                        expr = conns.get(port.name)
                        if port.direction == "in" and expr is not None:
                            width = child.widths[port.name]
                            child.values[port.name] = self._eval(scope, expr, width) & _mask(width)
                for child, port_name, lhs in scope.out_conns:
                    parts = self._lhs_parts(scope, lhs)
                    total = sum(hi - lo + 1 for _, lo, hi in parts)
                    self._write_parts(scope, parts, child.values[port_name] & _mask(total))
            if [dict(s.values) for s in self.scopes] == before:
                return
        raise SimulationError("combinational logic did not settle (loop?)")

    def run(self, stimulus: list[dict[str, int]]) -> list[dict[str, int]]:
        """Per cycle: apply inputs, settle, sample outputs, tick registers."""
        trace = []
        out_ports = [p for p in self.top.module.ports if p.direction == "out"]
        in_ports = {p.name for p in self.top.module.ports if p.direction == "in"}
        for cycle in stimulus:
            for name, value in cycle.items():
                if name not in in_ports:
                    raise SimulationError(f"unknown input {name}")
                self.top.values[name] = value & _mask(self.top.widths[name])
            self._settle()
            trace.append({p.name: self.top.values[p.name] for p in out_ports})
            pending: list = []
            for scope in self.scopes:
                for block, _, _, _ in scope.seq_blocks:
                    self._exec_seq_stmt(scope, block.body, pending)
            for scope, parts, value in pending:
                self._write_parts(scope, parts, value)
        return trace
