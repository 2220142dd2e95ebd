"""Flatten a parsed module hierarchy into a bit-level netlist.

Vectors are bit-blasted LSB-first; operators lower to AND/NOT structure
(ripple-carry adders, subtract-based comparators, mux ladders for
variable shifts, shift-add multipliers).  Two-valued logic only: any
construct that could produce X/Z is an elaboration error.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ElaborationError
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
from ..frontend.parser import GATE_PRIMITIVES, const_eval
from .aig import CONST0, CONST1, Netlist, Port

MAX_MULTIPLY_WIDTH = 16
UNSIGNED_32 = 32

_UNASSIGNED = None  # sentinel for bits not yet assigned inside a block


def _bit_name(base: str, width: int, index: int) -> str:
    return base if width == 1 else f"{base}[{index}]"


@dataclass
class _DriverRecord:
    """A single driving construct covering one or more (signal, range) parts."""

    kind: str  # 'assign', 'inst-out', 'gate'
    parts: list  # [(signal name, lo, hi)] LSB offsets, listed LSB-part-first
    total_width: int
    payload: object
    result: list | None = None
    resolving: bool = False


@dataclass
class _CombRecord:
    block: AlwaysBlock
    targets: list[str]
    results: dict = field(default_factory=dict)
    resolving: bool = False


@dataclass
class _SeqRecord:
    block: AlwaysBlock
    clock_name: str
    clock_edge: str
    reset_name: str | None
    reset_negated: bool
    targets: list[str]
    reset_values: dict  # signal -> int


class _Signal:
    __slots__ = ("name", "width", "kind", "direction", "values", "drivers", "resolving")

    def __init__(self, name: str, width: int, kind: str, direction: str | None = None):
        self.name = name
        self.width = width
        self.kind = kind  # 'wire' or 'reg'
        self.direction = direction  # 'in'/'out' for ports
        self.values: list | None = None
        self.drivers: list = []  # [(lo, hi, record)]
        self.resolving = False


class _Scope:
    def __init__(self, module: ModuleDecl, prefix: str, env: dict[str, int]):
        self.module = module
        self.prefix = prefix
        self.env = env
        self.signals: dict[str, _Signal] = {}
        self.comb_records: list[_CombRecord] = []
        self.seq_records: list[_SeqRecord] = []
        self.children: list[_Scope] = []
        self.comb_target_record: dict[str, _CombRecord] = {}
        self.input_bindings: dict[str, tuple["_Scope", object]] = {}

    def path(self, name: str) -> str:
        return self.prefix + name

    def signal(self, name: str) -> _Signal:
        sig = self.signals.get(name)
        if sig is None:
            raise ElaborationError(f"undeclared signal {self.path(name)}")
        return sig


class Elaborator:
    def __init__(self, unit: SourceUnit, top: str, param_overrides: dict[str, int] | None):
        self.unit = unit
        self.netlist = Netlist(top)
        self.top_name = top
        self.param_overrides = dict(param_overrides or {})
        self.modules = {m.name: m for m in unit.modules}

    # -- errors ----------------------------------------------------------------

    def err(self, scope: _Scope | None, message: str) -> ElaborationError:
        where = f" in {scope.module.name} ({scope.prefix or 'top'})" if scope else ""
        return ElaborationError(message + where)

    # -- entry ----------------------------------------------------------------

    def run(self) -> Netlist:
        top_mod = self.modules.get(self.top_name)
        if top_mod is None:
            raise ElaborationError(f"top module {self.top_name!r} not found")
        env = self._module_env(top_mod, self.param_overrides)
        scope = self._build_scope(top_mod, "", env, [top_mod.name])
        self._bind_top_ports(scope)
        self._create_registers(scope)
        self._finalize(scope)
        self.netlist.check()
        return self.netlist

    # -- scope construction ------------------------------------------------------

    def _module_env(self, mod: ModuleDecl, overrides: dict[str, int]) -> dict[str, int]:
        env: dict[str, int] = {}
        body_params = [i for i in mod.items if isinstance(i, ParamDecl)]
        public = mod.params + [p for p in body_params if not p.is_local]
        for p in public:
            value = const_eval(p.value_expr, env)
            if p.name in overrides:
                value = overrides[p.name]
            if value is None:
                raise ElaborationError(
                    f"parameter {p.name} of {mod.name} is not a constant"
                )
            env[p.name] = value
        for p in body_params:
            if p.is_local:
                value = const_eval(p.value_expr, env)
                if value is None:
                    raise ElaborationError(
                        f"localparam {p.name} of {mod.name} is not a constant"
                    )
                env[p.name] = value
        return env

    def _width_of_range(self, scope_env: dict[str, int], rng, what: str) -> int:
        if rng is None:
            return 1
        msb = const_eval(rng[0], scope_env)
        lsb = const_eval(rng[1], scope_env)
        if msb is None or lsb is None:
            raise ElaborationError(f"non-constant range on {what}")
        return abs(msb - lsb) + 1

    def _build_scope(
        self, mod: ModuleDecl, prefix: str, env: dict[str, int], stack: list[str]
    ) -> _Scope:
        if len(stack) > 64:
            raise ElaborationError("instantiation depth exceeds 64")
        scope = _Scope(mod, prefix, env)

        for port in mod.ports:
            if port.direction == "inout":
                raise self.err(scope, f"inout port {port.name} unsupported")
            width = self._width_of_range(env, port.range_exprs, f"port {port.name}")
            sig = _Signal(port.name, width, "reg" if port.is_reg else "wire", port.direction)
            scope.signals[port.name] = sig

        for item in mod.items:
            if isinstance(item, NetDecl):
                width = self._width_of_range(env, item.range_exprs, f"net {item.name}")
                existing = scope.signals.get(item.name)
                if existing is not None:
                    existing.width = width if item.range_exprs else existing.width
                    if item.kind == "reg":
                        existing.kind = "reg"
                else:
                    scope.signals[item.name] = _Signal(item.name, width, item.kind)
            elif isinstance(item, OpaqueItem):
                head = " ".join(item.text.split())[:60]
                raise self.err(scope, f"unsupported construct: {head!r}")

        for item in mod.items:
            if isinstance(item, ContAssign):
                self._register_assign(scope, item)
            elif isinstance(item, AlwaysBlock):
                if item.kind == "comb":
                    self._register_comb(scope, item)
                else:
                    self._register_seq(scope, item)
            elif isinstance(item, Instance):
                self._register_instance(scope, item, stack)
        return scope

    # -- driver registration ------------------------------------------------------

    def _lhs_parts(self, scope: _Scope, lhs, for_block: bool = False) -> list[tuple[str, int, int]]:
        """Flatten an lvalue into (signal, lo, hi) parts, LSB part first."""
        if isinstance(lhs, Concat):
            parts: list[tuple[str, int, int]] = []
            for sub in reversed(lhs.parts):  # {msb, ..., lsb}: last part is LSB
                parts.extend(self._lhs_parts(scope, sub, for_block))
            return parts
        if isinstance(lhs, Ident):
            sig = scope.signal(lhs.name)
            return [(lhs.name, 0, sig.width - 1)]
        if isinstance(lhs, Select):
            if lhs.indexed is not None:
                raise self.err(scope, f"indexed part-select on {lhs.base.name} unsupported")
            sig = scope.signal(lhs.base.name)
            msb = const_eval(lhs.msb, scope.env)
            if msb is None:
                raise self.err(scope, f"variable index write to {lhs.base.name} unsupported")
            if lhs.lsb is None:
                lo = hi = msb
            else:
                lsb = const_eval(lhs.lsb, scope.env)
                if lsb is None:
                    raise self.err(scope, f"non-constant part-select write to {lhs.base.name}")
                lo, hi = min(msb, lsb), max(msb, lsb)
            if lo < 0 or hi >= sig.width:
                raise self.err(scope, f"select [{hi}:{lo}] out of range on {lhs.base.name}")
            return [(lhs.base.name, lo, hi)]
        raise self.err(scope, "unsupported assignment target")

    def _claim_bits(self, scope: _Scope, parts, record) -> None:
        for name, lo, hi in parts:
            sig = scope.signal(name)
            for plo, phi, _ in sig.drivers:
                if lo <= phi and plo <= hi:
                    raise self.err(scope, f"multiple drivers for {name}[{hi}:{lo}]")
            sig.drivers.append((lo, hi, record))

    def _register_assign(self, scope: _Scope, item: ContAssign) -> None:
        parts = self._lhs_parts(scope, item.lhs)
        total = sum(hi - lo + 1 for _, lo, hi in parts)
        record = _DriverRecord("assign", parts, total, item.rhs)
        self._claim_bits(scope, parts, record)

    def _register_comb(self, scope: _Scope, block: AlwaysBlock) -> None:
        targets = sorted(self._collect_targets(scope, block.body))
        if not targets:
            return
        record = _CombRecord(block=block, targets=targets)
        scope.comb_records.append(record)
        for name in targets:
            sig = scope.signal(name)
            if sig.kind != "reg":
                raise self.err(scope, f"procedural assignment to wire {name}")
            self._claim_bits(scope, [(name, 0, sig.width - 1)], record)
            scope.comb_target_record[name] = record

    def _register_seq(self, scope: _Scope, block: AlwaysBlock) -> None:
        edges = block.edges
        if len(edges) > 2:
            raise self.err(scope, "more than two edge triggers unsupported")
        reset_name = None
        reset_negated = False
        clock_edge, clock_name = edges[0]
        if len(edges) == 2:
            cond_sig, negated = self._reset_condition(block.body)
            if cond_sig is None:
                raise self.err(scope, "dual-edge block without a recognizable reset conditional")
            matches = [e for e in edges if e[1] == cond_sig]
            if not matches:
                raise self.err(scope, f"reset conditional {cond_sig} does not match an edge")
            reset_name = cond_sig
            reset_negated = negated
            others = [e for e in edges if e[1] != cond_sig]
            if len(others) != 1:
                raise self.err(scope, "cannot identify clock among edge triggers")
            clock_edge, clock_name = others[0]
        targets = sorted(self._collect_targets(scope, block.body))
        if not targets:
            return
        reset_edge = next((e for e, s in edges if s == reset_name), None)
        reset_values = self._extract_reset_values(
            scope, block, reset_name, reset_negated, reset_edge
        )
        record = _SeqRecord(
            block=block,
            clock_name=clock_name,
            clock_edge=clock_edge,
            reset_name=reset_name,
            reset_negated=reset_negated,
            targets=targets,
            reset_values=reset_values,
        )
        scope.seq_records.append(record)
        for name in targets:
            sig = scope.signal(name)
            if sig.kind != "reg":
                raise self.err(scope, f"procedural assignment to wire {name}")
            self._claim_bits(scope, [(name, 0, sig.width - 1)], record)

    @staticmethod
    def _reset_condition(body) -> tuple[str | None, bool]:
        stmt = body
        while isinstance(stmt, Block) and len(stmt.stmts) == 1:
            stmt = stmt.stmts[0]
        if not isinstance(stmt, IfStmt):
            return None, False
        cond = stmt.cond
        if isinstance(cond, Ident):
            return cond.name, False
        if isinstance(cond, Unary) and cond.op in ("!", "~") and isinstance(cond.operand, Ident):
            return cond.operand.name, True
        return None, False

    def _extract_reset_values(
        self,
        scope: _Scope,
        block: AlwaysBlock,
        reset_name: str | None,
        negated: bool,
        reset_edge: str | None,
    ) -> dict[str, int]:
        """Constant values assigned on the async reset-active branch; default 0.

        The reset is active at 1 for a posedge trigger and at 0 for negedge;
        whether the then- or else-branch is the reset branch follows from the
        polarity of the conditional.
        """
        values: dict[str, int] = {}
        if reset_name is None:
            return values
        stmt = block.body
        while isinstance(stmt, Block) and len(stmt.stmts) == 1:
            stmt = stmt.stmts[0]
        active = 1 if reset_edge == "pos" else 0
        cond_true_at_active = (active == 0) if negated else (active == 1)
        branch = stmt.then if cond_true_at_active else stmt.other
        if branch is None:
            return values
        for assign in self._iter_assigns(branch):
            value = const_eval(assign.rhs, scope.env)
            if value is None:
                raise self.err(scope, "async reset branch must assign constants")
            if isinstance(assign.lhs, Ident):
                values[assign.lhs.name] = value
        return values

    @staticmethod
    def _iter_assigns(stmt):
        if isinstance(stmt, ProcAssign):
            yield stmt
        elif isinstance(stmt, Block):
            for sub in stmt.stmts:
                yield from Elaborator._iter_assigns(sub)
        elif isinstance(stmt, IfStmt):
            yield from Elaborator._iter_assigns(stmt.then)
            if stmt.other is not None:
                yield from Elaborator._iter_assigns(stmt.other)
        elif isinstance(stmt, CaseStmt):
            for item in stmt.items:
                yield from Elaborator._iter_assigns(item.body)

    def _collect_targets(self, scope: _Scope, stmt) -> set[str]:
        names: set[str] = set()
        for assign in self._iter_assigns(stmt):
            for name, _, _ in self._lhs_parts(scope, assign.lhs, for_block=True):
                names.add(name)
        return names

    def _register_instance(self, scope: _Scope, item: Instance, stack: list[str]) -> None:
        if item.target in GATE_PRIMITIVES:
            self._register_gate(scope, item)
            return
        child_mod = self.modules.get(item.target)
        if child_mod is None:
            raise self.err(scope, f"unresolved module {item.target} (external instance)")
        if item.target in stack:
            raise self.err(scope, f"recursive instantiation of {item.target}")
        overrides: dict[str, int] = {}
        public_params = [p for p in child_mod.params if not p.is_local] + [
            p for p in child_mod.items if isinstance(p, ParamDecl) and not p.is_local
        ]
        for pos, (pname, expr) in enumerate(item.param_overrides):
            value = const_eval(expr, scope.env)
            if value is None:
                raise self.err(scope, f"non-constant parameter override on {item.name}")
            if pname is None:
                if pos >= len(public_params):
                    raise self.err(scope, f"too many parameter overrides on {item.name}")
                overrides[public_params[pos].name] = value
            else:
                overrides[pname] = value
        env = self._module_env(child_mod, overrides)
        child_prefix = scope.prefix + (item.name or item.target) + "."
        child = self._build_scope(child_mod, child_prefix, env, stack + [child_mod.name])
        scope.children.append(child)

        # map connections onto the child's port order
        conns: dict[str, object] = {}
        if item.connections and item.connections[0][0] is None:
            if len(item.connections) > len(child_mod.ports):
                raise self.err(scope, f"too many connections on {item.name}")
            for port, (_, expr) in zip(child_mod.ports, item.connections):
                conns[port.name] = expr
        else:
            port_names = {p.name for p in child_mod.ports}
            for pname, expr in item.connections:
                if pname not in port_names:
                    raise self.err(scope, f"no port {pname} on {item.target}")
                conns[pname] = expr

        for port in child_mod.ports:
            expr = conns.get(port.name)
            child_sig = child.signal(port.name)
            if port.direction == "in":
                if expr is not None:
                    child.input_bindings[port.name] = (scope, expr)
            elif port.direction == "out":
                if expr is None:
                    continue  # dangling output
                parts = self._lhs_parts(scope, expr)
                total = sum(hi - lo + 1 for _, lo, hi in parts)
                record = _DriverRecord("inst-out", parts, total, (child, port.name))
                self._claim_bits(scope, parts, record)
            else:
                raise self.err(scope, f"inout port {port.name} unsupported")

    def _register_gate(self, scope: _Scope, item: Instance) -> None:
        if any(pname is not None for pname, _ in item.connections):
            raise self.err(scope, f"gate primitive {item.target} needs positional pins")
        if len(item.connections) < 2:
            raise self.err(scope, f"gate primitive {item.target} needs at least two pins")
        out_expr = item.connections[0][1]
        in_exprs = [e for _, e in item.connections[1:]]
        if item.target in ("not", "buf") and len(in_exprs) != 1:
            raise self.err(scope, f"{item.target} gate takes exactly one input")
        parts = self._lhs_parts(scope, out_expr)
        total = sum(hi - lo + 1 for _, lo, hi in parts)
        record = _DriverRecord("gate", parts, total, (item.target, in_exprs))
        self._claim_bits(scope, parts, record)

    # -- register creation ---------------------------------------------------------

    def _create_registers(self, scope: _Scope) -> None:
        for record in scope.seq_records:
            clock_lits = self._resolve_signal(scope, record.clock_name)
            if len(clock_lits) != 1:
                raise self.err(scope, f"clock {record.clock_name} must be 1 bit wide")
            clock_lit = clock_lits[0]
            edge = record.clock_edge
            if clock_lit & 1:
                clock_lit ^= 1
                edge = "pos" if edge == "neg" else "neg"
            node = clock_lit >> 1
            if self.netlist.node_kind(node) != "input":
                raise self.err(scope, f"clock {record.clock_name} must trace to a top-level input")
            clock_name = self.netlist.nodes[node][1]
            if self.netlist.clock is None:
                self.netlist.clock = (clock_name, edge)
            elif self.netlist.clock != (clock_name, edge):
                raise self.err(
                    scope,
                    f"multiple clock domains: {self.netlist.clock} vs {(clock_name, edge)}",
                )
            if record.reset_name is not None:
                self.netlist.meta["reset_normalized"] = True
            for name in record.targets:
                sig = scope.signal(name)
                if sig.values is not None:
                    raise self.err(scope, f"{name} already driven")
                reset_value = record.reset_values.get(name, 0)
                lits = []
                for i in range(sig.width):
                    bit = (reset_value >> i) & 1
                    lits.append(
                        self.netlist.add_register(
                            _bit_name(scope.path(name), sig.width, i), clock_name, bit
                        )
                    )
                sig.values = lits
        for child in scope.children:
            self._create_registers(child)

    # -- top ports -------------------------------------------------------------------

    def _bind_top_ports(self, scope: _Scope) -> None:
        for port in scope.module.ports:
            sig = scope.signal(port.name)
            self.netlist.ports.append(Port(port.name, port.direction, sig.width))
            if port.direction == "in":
                if sig.values is not None:
                    raise self.err(scope, f"input port {port.name} is driven internally")
                sig.values = [
                    self.netlist.add_input(_bit_name(port.name, sig.width, i))
                    for i in range(sig.width)
                ]

    def _finalize(self, scope: _Scope) -> None:
        for port in scope.module.ports:
            if port.direction == "out":
                sig = scope.signal(port.name)
                lits = self._resolve_signal(scope, port.name)
                for i in range(sig.width):
                    self.netlist.add_output(_bit_name(port.name, sig.width, i), lits[i])
        self._resolve_all_seq(scope)

    def _resolve_all_seq(self, scope: _Scope) -> None:
        for record in scope.seq_records:
            self._exec_seq(scope, record)
        for child in scope.children:
            self._resolve_all_seq(child)

    # -- signal resolution --------------------------------------------------------------

    def _resolve_signal(self, scope: _Scope, name: str) -> list[int]:
        sig = scope.signal(name)
        if sig.values is not None:
            return sig.values
        if sig.resolving:
            raise self.err(scope, f"combinational loop through {name}")
        sig.resolving = True
        try:
            values: list = [_UNASSIGNED] * sig.width
            if sig.direction == "in" and not sig.drivers:
                binding = scope.input_bindings.get(name)
                if binding is None:
                    raise self.err(scope, f"input port {name} unconnected but read")
                parent, expr = binding
                vec = self._fit(self._eval(parent, expr, None, sig.width), sig.width)
                sig.values = vec
                return vec
            if not sig.drivers:
                comb = scope.comb_target_record.get(name)
                if comb is not None:
                    self._exec_comb(scope, comb)
                    return sig.values
                raise self.err(scope, f"undriven signal {name} is read")
            for lo, hi, record in sig.drivers:
                vec = self._record_value(scope, record, name)
                if isinstance(record, (_CombRecord, _SeqRecord)):
                    return sig.values  # record fills the whole signal
                offset = 0
                for pname, plo, phi in record.parts:
                    span = phi - plo + 1
                    if pname == name:
                        for i in range(span):
                            values[plo + i] = vec[offset + i]
                    offset += span
            for i, bit in enumerate(values):
                if bit is _UNASSIGNED:
                    raise self.err(scope, f"bit {i} of {name} undriven but read")
            sig.values = values
            return values
        finally:
            sig.resolving = False

    def _record_value(self, scope: _Scope, record, name: str):
        if isinstance(record, _CombRecord):
            self._exec_comb(scope, record)
            return None
        if isinstance(record, _SeqRecord):
            raise self.err(scope, f"register {name} has no state (internal error)")
        if record.result is not None:
            return record.result
        if record.resolving:
            raise self.err(scope, f"combinational loop through {name}")
        record.resolving = True
        try:
            if record.kind == "assign":
                vec = self._fit(
                    self._eval(scope, record.payload, None, record.total_width),
                    record.total_width,
                )
            elif record.kind == "inst-out":
                child, port_name = record.payload
                vec = self._fit(self._resolve_signal(child, port_name), record.total_width)
            else:  # gate
                vec = self._eval_gate(scope, record)
            record.result = vec
            return vec
        finally:
            record.resolving = False

    def _eval_gate(self, scope: _Scope, record: _DriverRecord) -> list[int]:
        gate, in_exprs = record.payload
        width = record.total_width
        vecs = [self._fit(self._eval(scope, e, None, width), width) for e in in_exprs]
        out = []
        for i in range(width):
            bits = [v[i] for v in vecs]
            if gate == "buf":
                lit = bits[0]
            elif gate == "not":
                lit = bits[0] ^ 1
            elif gate in ("and", "nand"):
                lit = self.netlist.g_and_all(bits)
                lit = lit ^ 1 if gate == "nand" else lit
            elif gate in ("or", "nor"):
                lit = self.netlist.g_or_all(bits)
                lit = lit ^ 1 if gate == "nor" else lit
            else:  # xor / xnor
                lit = bits[0]
                for b in bits[1:]:
                    lit = self.netlist.g_xor(lit, b)
                lit = lit ^ 1 if gate == "xnor" else lit
            out.append(lit)
        return out

    # -- block execution ------------------------------------------------------------------

    def _exec_comb(self, scope: _Scope, record: _CombRecord) -> None:
        if record.results:
            return
        if record.resolving:
            raise self.err(scope, "combinational loop through always block")
        record.resolving = True
        try:
            env: dict[str, list] = {}
            self._exec_stmt(scope, record.block.body, env, record.targets, blocking=True)
            for name in record.targets:
                sig = scope.signal(name)
                vec = env.get(name)
                if vec is None or any(b is _UNASSIGNED for b in vec):
                    raise self.err(
                        scope, f"latch inferred: {name} not assigned on every path"
                    )
                record.results[name] = vec
                sig.values = vec
        finally:
            record.resolving = False

    def _exec_seq(self, scope: _Scope, record: _SeqRecord) -> None:
        env: dict[str, list] = {}
        self._exec_stmt(scope, record.block.body, env, record.targets, blocking=False)
        for name in record.targets:
            sig = scope.signal(name)
            current = sig.values
            vec = env.get(name, [_UNASSIGNED] * sig.width)
            for i in range(sig.width):
                next_lit = vec[i] if vec[i] is not _UNASSIGNED else current[i]
                self.netlist.set_register_next(current[i], next_lit)

    def _exec_stmt(self, scope, stmt, env, targets, blocking: bool) -> None:
        if isinstance(stmt, Block):
            for sub in stmt.stmts:
                self._exec_stmt(scope, sub, env, targets, blocking)
            return
        if isinstance(stmt, ProcAssign):
            if stmt.blocking != blocking:
                kind = "blocking" if stmt.blocking else "non-blocking"
                where = "clocked" if not blocking else "combinational"
                raise self.err(scope, f"{kind} assignment in {where} block")
            parts = self._lhs_parts(scope, stmt.lhs, for_block=True)
            total = sum(hi - lo + 1 for _, lo, hi in parts)
            overlay = env if blocking else None
            vec = self._fit(self._eval(scope, stmt.rhs, overlay, total), total)
            offset = 0
            for name, lo, hi in parts:
                sig = scope.signal(name)
                current = env.get(name)
                if current is None:
                    current = [_UNASSIGNED] * sig.width
                    env[name] = current
                for i in range(hi - lo + 1):
                    current[lo + i] = vec[offset + i]
                offset += hi - lo + 1
            return
        if isinstance(stmt, IfStmt):
            overlay = env if blocking else None
            cond = self._reduce_bool(scope, stmt.cond, overlay)
            env_then = {k: list(v) for k, v in env.items()}
            self._exec_stmt(scope, stmt.then, env_then, targets, blocking)
            env_else = {k: list(v) for k, v in env.items()}
            if stmt.other is not None:
                self._exec_stmt(scope, stmt.other, env_else, targets, blocking)
            self._merge_envs(scope, env, cond, env_then, env_else)
            return
        if isinstance(stmt, CaseStmt):
            self._exec_case(scope, stmt, env, targets, blocking)
            return
        raise self.err(scope, f"unsupported statement {type(stmt).__name__}")

    def _merge_envs(self, scope, env, cond, env_then, env_else) -> None:
        for name in sorted(set(env_then) | set(env_else)):
            width = scope.signal(name).width
            base = env.get(name, [_UNASSIGNED] * width)
            t = env_then.get(name, base)
            e = env_else.get(name, base)
            merged = []
            for i in range(width):
                tb, eb = t[i], e[i]
                if tb is _UNASSIGNED or eb is _UNASSIGNED:
                    merged.append(tb if tb is eb else _UNASSIGNED)
                elif tb == eb:
                    merged.append(tb)
                else:
                    merged.append(self.netlist.g_mux(cond, tb, eb))
            env[name] = merged

    def _exec_case(self, scope, stmt: CaseStmt, env, targets, blocking: bool) -> None:
        overlay = env if blocking else None
        subject_width = self._self_width(scope, stmt.subject)
        for item in stmt.items:
            if item.patterns:
                for pat in item.patterns:
                    if isinstance(pat, Number) and pat.width:
                        subject_width = max(subject_width, pat.width)
        subject = self._eval(scope, stmt.subject, overlay, subject_width)
        subject = self._fit(subject, subject_width)

        branches = []  # (cond lit | None for default, env)
        default_env = None
        const_patterns: set[int] = set()
        wildcards = False
        for item in stmt.items:
            branch_env = {k: list(v) for k, v in env.items()}
            self._exec_stmt(scope, item.body, branch_env, targets, blocking)
            if item.patterns is None:
                default_env = branch_env
                continue
            conds = []
            for pat in item.patterns:
                conds.append(self._match_pattern(scope, stmt, subject, pat, overlay))
                if isinstance(pat, Number) and not pat.has_xz and pat.value is not None:
                    const_patterns.add(pat.value & ((1 << subject_width) - 1))
                else:
                    wildcards = True
            branches.append((self.netlist.g_or_all(conds), branch_env))

        if default_env is not None:
            acc = default_env
        elif not wildcards and len(const_patterns) == (1 << subject_width) and branches:
            # complete constant coverage: the fallthrough is unreachable
            acc = branches[-1][1]
        else:
            acc = {k: list(v) for k, v in env.items()}
        for cond, branch_env in reversed(branches):
            merged = {}
            for name in sorted(set(branch_env) | set(acc)):
                width = scope.signal(name).width
                base = env.get(name, [_UNASSIGNED] * width)
                t = branch_env.get(name, base)
                e = acc.get(name, base)
                out = []
                for i in range(width):
                    tb, eb = t[i], e[i]
                    if tb is _UNASSIGNED or eb is _UNASSIGNED:
                        out.append(tb if tb is eb else _UNASSIGNED)
                    elif tb == eb:
                        out.append(tb)
                    else:
                        out.append(self.netlist.g_mux(cond, tb, eb))
                merged[name] = out
            acc = merged
        env.clear()
        env.update(acc)

    def _match_pattern(self, scope, stmt: CaseStmt, subject: list[int], pat, overlay) -> int:
        width = len(subject)
        if isinstance(pat, Number) and (pat.has_xz or stmt.kind == "casez"):
            if pat.has_xz and stmt.kind != "casez":
                raise self.err(scope, "x/z digits in a plain case pattern")
            bits = self._pattern_bits(scope, pat, width)
            eqs = []
            for i, b in enumerate(bits):
                if b is None:
                    continue
                eqs.append(self.netlist.g_xnor(subject[i], CONST1 if b else CONST0))
            return self.netlist.g_and_all(eqs)
        vec = self._fit(self._eval(scope, pat, overlay, width), width)
        eqs = [self.netlist.g_xnor(subject[i], vec[i]) for i in range(width)]
        return self.netlist.g_and_all(eqs)

    def _pattern_bits(self, scope, pat: Number, width: int) -> list:
        """LSB-first pattern bits; None marks a casez don't-care position."""
        if pat.base == "b":
            digits = pat.digits
            bits: list = []
            for ch in reversed(digits):
                if ch in "zZ?":
                    bits.append(None)
                elif ch in "xX":
                    raise self.err(scope, "x digit in casez pattern")
                else:
                    bits.append(int(ch))
        elif pat.base == "h" and pat.has_xz:
            bits = []
            for ch in reversed(pat.digits):
                if ch in "zZ?":
                    bits.extend([None] * 4)
                elif ch in "xX":
                    raise self.err(scope, "x digit in casez pattern")
                else:
                    v = int(ch, 16)
                    bits.extend([(v >> k) & 1 for k in range(4)])
        else:
            value = pat.value
            if value is None:
                raise self.err(scope, "unsupported pattern")
            bits = [(value >> k) & 1 for k in range(max(width, pat.width or 0))]
        while len(bits) < width:
            bits.append(0)
        return bits[:width]

    # -- expression evaluation ----------------------------------------------------------

    def _fit(self, vec: list[int], width: int) -> list[int]:
        if len(vec) >= width:
            return vec[:width]
        return vec + [CONST0] * (width - len(vec))

    def _self_width(self, scope: _Scope, expr) -> int:
        if isinstance(expr, Number):
            return expr.width or UNSIGNED_32
        if isinstance(expr, Ident):
            return scope.signal(expr.name).width
        if isinstance(expr, Select):
            if expr.indexed is not None:
                raise self.err(scope, "indexed part-select unsupported")
            if expr.lsb is None:
                return 1
            msb = const_eval(expr.msb, scope.env)
            lsb = const_eval(expr.lsb, scope.env)
            if msb is None or lsb is None:
                raise self.err(scope, f"non-constant part-select on {expr.base.name}")
            return abs(msb - lsb) + 1
        if isinstance(expr, Unary):
            if expr.op in ("~", "-"):
                return self._self_width(scope, expr.operand)
            return 1  # reductions and logical not
        if isinstance(expr, Binary):
            op = expr.op
            if op in ("==", "!=", "<", "<=", ">", ">=", "&&", "||"):
                return 1
            if op in ("<<", ">>"):
                return self._self_width(scope, expr.left)
            return max(self._self_width(scope, expr.left), self._self_width(scope, expr.right))
        if isinstance(expr, Ternary):
            return max(self._self_width(scope, expr.then), self._self_width(scope, expr.other))
        if isinstance(expr, Concat):
            return sum(self._self_width(scope, p) for p in expr.parts)
        if isinstance(expr, Repeat):
            count = const_eval(expr.count, scope.env)
            if count is None:
                raise self.err(scope, "non-constant replication count")
            return count * self._self_width(scope, expr.part)
        raise self.err(scope, f"unsupported expression {type(expr).__name__}")

    def _reduce_bool(self, scope: _Scope, expr, overlay) -> int:
        vec = self._eval(scope, expr, overlay, None)
        return self.netlist.g_or_all(vec)

    def _read_ident(self, scope: _Scope, name: str, overlay) -> list[int]:
        if overlay is not None and name in overlay:
            vec = overlay[name]
            if any(b is _UNASSIGNED for b in vec):
                raise self.err(
                    scope, f"{name} read before assignment in combinational block"
                )
            return list(vec)
        if overlay is not None and name in scope.comb_target_record:
            record = scope.comb_target_record[name]
            if record.resolving and name not in overlay:
                raise self.err(
                    scope, f"{name} read before assignment in combinational block"
                )
        return self._resolve_signal(scope, name)

    def _eval(self, scope: _Scope, expr, overlay, ctx_width: int | None) -> list[int]:
        nl = self.netlist
        if isinstance(expr, Number):
            if expr.has_xz:
                raise self.err(scope, "x/z literal outside casez pattern")
            self_w = expr.width or (ctx_width or UNSIGNED_32)
            width = max(self_w, ctx_width or 0)
            value = expr.value & ((1 << width) - 1) if width else 0
            return [CONST1 if (value >> i) & 1 else CONST0 for i in range(width)]
        if isinstance(expr, Ident):
            vec = self._read_ident(scope, expr.name, overlay)
            if ctx_width is not None and ctx_width > len(vec):
                return self._fit(vec, ctx_width)
            return list(vec)
        if isinstance(expr, Select):
            base_vec = self._read_ident(scope, expr.base.name, overlay)
            if expr.indexed is not None:
                raise self.err(scope, "indexed part-select unsupported")
            if expr.lsb is None:
                idx = const_eval(expr.msb, scope.env)
                if idx is not None:
                    if idx < 0 or idx >= len(base_vec):
                        raise self.err(
                            scope, f"bit-select [{idx}] out of range on {expr.base.name}"
                        )
                    return [base_vec[idx]]
                idx_vec = self._eval(scope, expr.msb, overlay, None)
                shifted = self._shift_variable(base_vec, idx_vec, "right")
                return [shifted[0]]
            msb = const_eval(expr.msb, scope.env)
            lsb = const_eval(expr.lsb, scope.env)
            if msb is None or lsb is None:
                raise self.err(scope, f"non-constant part-select on {expr.base.name}")
            lo, hi = min(msb, lsb), max(msb, lsb)
            if lo < 0 or hi >= len(base_vec):
                raise self.err(
                    scope, f"part-select [{hi}:{lo}] out of range on {expr.base.name}"
                )
            return base_vec[lo : hi + 1]
        if isinstance(expr, Unary):
            op = expr.op
            if op == "~":
                width = max(self._self_width(scope, expr.operand), ctx_width or 0)
                vec = self._fit(self._eval(scope, expr.operand, overlay, width), width)
                return [b ^ 1 for b in vec]
            if op == "-":
                width = max(self._self_width(scope, expr.operand), ctx_width or 1)
                vec = self._fit(self._eval(scope, expr.operand, overlay, width), width)
                inverted = [b ^ 1 for b in vec]
                summed, _ = self._ripple_add(inverted, [CONST0] * width, CONST1)
                return summed
            vec = self._eval(scope, expr.operand, overlay, None)
            if op == "!":
                return [nl.g_or_all(vec) ^ 1]
            if op == "&":
                return [nl.g_and_all(vec)]
            if op == "~&":
                return [nl.g_and_all(vec) ^ 1]
            if op == "|":
                return [nl.g_or_all(vec)]
            if op == "~|":
                return [nl.g_or_all(vec) ^ 1]
            if op in ("^", "~^"):
                acc = CONST0
                for b in vec:
                    acc = nl.g_xor(acc, b)
                return [acc ^ 1 if op == "~^" else acc]
            raise self.err(scope, f"unsupported unary operator {op}")
        if isinstance(expr, Binary):
            return self._eval_binary(scope, expr, overlay, ctx_width)
        if isinstance(expr, Ternary):
            cond = self._reduce_bool(scope, expr.cond, overlay)
            width = max(
                self._self_width(scope, expr.then),
                self._self_width(scope, expr.other),
                ctx_width or 0,
            )
            then_vec = self._fit(self._eval(scope, expr.then, overlay, width), width)
            else_vec = self._fit(self._eval(scope, expr.other, overlay, width), width)
            return [nl.g_mux(cond, then_vec[i], else_vec[i]) for i in range(width)]
        if isinstance(expr, Concat):
            out: list[int] = []
            for part in reversed(expr.parts):  # last listed part is the LSB group
                part_w = self._self_width(scope, part)
                out.extend(self._fit(self._eval(scope, part, overlay, part_w), part_w))
            return out
        if isinstance(expr, Repeat):
            count = const_eval(expr.count, scope.env)
            if count is None or count < 0:
                raise self.err(scope, "bad replication count")
            part_w = self._self_width(scope, expr.part)
            part_vec = self._fit(self._eval(scope, expr.part, overlay, part_w), part_w)
            return list(part_vec) * count
        raise self.err(scope, f"unsupported expression {type(expr).__name__}")

    def _eval_binary(self, scope: _Scope, expr: Binary, overlay, ctx_width) -> list[int]:
        nl = self.netlist
        op = expr.op
        if op in ("&&", "||"):
            a = nl.g_or_all(self._eval(scope, expr.left, overlay, None))
            b = nl.g_or_all(self._eval(scope, expr.right, overlay, None))
            return [nl.g_and(a, b) if op == "&&" else nl.g_or(a, b)]
        if op in ("==", "!=", "<", "<=", ">", ">="):
            width = max(
                self._self_width(scope, expr.left), self._self_width(scope, expr.right)
            )
            a = self._fit(self._eval(scope, expr.left, overlay, width), width)
            b = self._fit(self._eval(scope, expr.right, overlay, width), width)
            if op in ("==", "!="):
                eqs = [nl.g_xnor(a[i], b[i]) for i in range(width)]
                eq = nl.g_and_all(eqs)
                return [eq ^ 1 if op == "!=" else eq]
            # unsigned compare via subtraction: carry of a + ~b + 1 means a >= b
            if op in ("<", ">="):
                _, carry = self._ripple_add(a, [x ^ 1 for x in b], CONST1)
                return [carry ^ 1 if op == "<" else carry]
            _, carry = self._ripple_add(b, [x ^ 1 for x in a], CONST1)
            return [carry ^ 1 if op == ">" else carry]
        if op in ("<<", ">>"):
            width = max(self._self_width(scope, expr.left), ctx_width or 0)
            vec = self._fit(self._eval(scope, expr.left, overlay, width), width)
            shamt = const_eval(expr.right, scope.env)
            if shamt is not None:
                if shamt < 0:
                    raise self.err(scope, "negative shift")
                if op == "<<":
                    return ([CONST0] * min(shamt, width) + vec)[:width]
                return vec[shamt:] + [CONST0] * min(shamt, width)
            shamt_vec = self._eval(scope, expr.right, overlay, None)
            return self._shift_variable(vec, shamt_vec, "left" if op == "<<" else "right")
        if op in ("+", "-"):
            width = max(
                self._self_width(scope, expr.left),
                self._self_width(scope, expr.right),
                ctx_width or 0,
            )
            a = self._fit(self._eval(scope, expr.left, overlay, width), width)
            b = self._fit(self._eval(scope, expr.right, overlay, width), width)
            if op == "+":
                summed, _ = self._ripple_add(a, b, CONST0)
            else:
                summed, _ = self._ripple_add(a, [x ^ 1 for x in b], CONST1)
            return summed
        if op in ("&", "|", "^"):
            width = max(
                self._self_width(scope, expr.left),
                self._self_width(scope, expr.right),
                ctx_width or 0,
            )
            a = self._fit(self._eval(scope, expr.left, overlay, width), width)
            b = self._fit(self._eval(scope, expr.right, overlay, width), width)
            fn = {"&": nl.g_and, "|": nl.g_or, "^": nl.g_xor}[op]
            return [fn(a[i], b[i]) for i in range(width)]
        if op == "*":
            wl = self._self_width(scope, expr.left)
            wr = self._self_width(scope, expr.right)
            if wl > MAX_MULTIPLY_WIDTH or wr > MAX_MULTIPLY_WIDTH:
                raise self.err(
                    scope, f"multiply operands wider than {MAX_MULTIPLY_WIDTH} bits"
                )
            width = max(wl, wr, ctx_width or 0)
            a = self._fit(self._eval(scope, expr.left, overlay, wl), width)
            b = self._fit(self._eval(scope, expr.right, overlay, wr), width)
            acc = [CONST0] * width
            for i in range(min(wr, width)):
                addend = [CONST0] * i + [nl.g_and(a[j], b[i]) for j in range(width - i)]
                acc, _ = self._ripple_add(acc, addend, CONST0)
            return acc
        raise self.err(scope, f"unsupported operator {op}")

    def _ripple_add(self, a: list[int], b: list[int], carry: int) -> tuple[list[int], int]:
        nl = self.netlist
        out = []
        for i in range(len(a)):
            axb = nl.g_xor(a[i], b[i])
            out.append(nl.g_xor(axb, carry))
            carry = nl.g_or(nl.g_and(a[i], b[i]), nl.g_and(carry, axb))
        return out, carry

    def _shift_variable(self, vec: list[int], shamt: list[int], direction: str) -> list[int]:
        nl = self.netlist
        width = len(vec)
        ladder_bits = max(1, (width - 1).bit_length())
        current = list(vec)
        for j in range(min(ladder_bits, len(shamt))):
            step = 1 << j
            if direction == "left":
                shifted = [CONST0] * min(step, width) + current[: max(0, width - step)]
            else:
                shifted = current[step:] + [CONST0] * min(step, width)
            current = [nl.g_mux(shamt[j], shifted[i], current[i]) for i in range(width)]
        overflow = nl.g_or_all(shamt[ladder_bits:]) if len(shamt) > ladder_bits else CONST0
        return [nl.g_mux(overflow, CONST0, bit) for bit in current]


def elaborate(unit: SourceUnit, top: str, param_overrides: dict[str, int] | None = None) -> Netlist:
    """Flatten `top` and everything it instantiates into an AIG netlist."""
    return Elaborator(unit, top, param_overrides).run()
