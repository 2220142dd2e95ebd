"""AND-inverter graph with registers.

Literal encoding: ``lit = node_index * 2 + inverted``.  Node 0 is the
constant-0 source, so literal 0 is constant false and literal 1 constant
true.  AND nodes are structurally hashed with operand normalization, so
identical cones collapse to identical node indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SimulationError

CONST0 = 0
CONST1 = 1

# node payload tags
_T_CONST = 0
_T_INPUT = 1
_T_REG = 2
_T_AND = 3


def lit_node(lit: int) -> int:
    return lit >> 1

def lit_inverted(lit: int) -> bool:
    return bool(lit & 1)

def lit_inv(lit: int) -> int:
    return lit ^ 1

def lit_is_const(lit: int) -> bool:
    return lit <= 1


@dataclass
class Register:
    name: str
    node: int             # state node index
    next_lit: int | None  # next-state literal (filled after creation)
    clock: str            # clock input name
    reset_value: int      # concrete 0/1


@dataclass
class Port:
    name: str
    direction: str  # 'in' or 'out'
    width: int


class Netlist:
    def __init__(self, name: str = ""):
        self.name = name
        self.nodes: list[tuple] = [(_T_CONST,)]
        self.inputs: list[str] = []          # bit names, ordered
        self.input_nodes: dict[str, int] = {}
        self.outputs: list[tuple[str, int]] = []  # (bit name, literal)
        self.registers: list[Register] = []
        self.reg_of_node: dict[int, int] = {}     # node index -> register index
        self.ports: list[Port] = []
        self.clock: tuple[str, str] | None = None  # (input bit name, 'pos'|'neg')
        self.meta: dict = {}
        self._strash: dict[tuple[int, int], int] = {}

    # -- construction -------------------------------------------------------

    def add_input(self, name: str) -> int:
        if name in self.input_nodes:
            raise SimulationError(f"duplicate input bit {name}")
        idx = len(self.nodes)
        self.nodes.append((_T_INPUT, name))
        self.inputs.append(name)
        self.input_nodes[name] = idx
        return idx * 2

    def add_register(self, name: str, clock: str, reset_value: int) -> int:
        idx = len(self.nodes)
        self.nodes.append((_T_REG, name))
        self.registers.append(Register(name, idx, None, clock, reset_value & 1))
        self.reg_of_node[idx] = len(self.registers) - 1
        return idx * 2

    def set_register_next(self, state_lit: int, next_lit: int) -> None:
        self.registers[self.reg_of_node[lit_node(state_lit)]].next_lit = next_lit

    def add_output(self, name: str, lit: int) -> None:
        self.outputs.append((name, lit))

    def g_and(self, a: int, b: int) -> int:
        if a < b:
            a, b = b, a
        if b == CONST0:
            return CONST0
        if b == CONST1:
            return a
        if a == b:
            return a
        if a == (b ^ 1):
            return CONST0
        key = (a, b)
        cached = self._strash.get(key)
        if cached is not None:
            return cached
        idx = len(self.nodes)
        self.nodes.append((_T_AND, a, b))
        lit = idx * 2
        self._strash[key] = lit
        return lit

    def g_not(self, a: int) -> int:
        return a ^ 1

    def g_or(self, a: int, b: int) -> int:
        return self.g_and(a ^ 1, b ^ 1) ^ 1

    def g_xor(self, a: int, b: int) -> int:
        return self.g_or(self.g_and(a, b ^ 1), self.g_and(a ^ 1, b))

    def g_xnor(self, a: int, b: int) -> int:
        return self.g_xor(a, b) ^ 1

    def g_mux(self, sel: int, when1: int, when0: int) -> int:
        if when1 == when0:
            return when1
        return self.g_or(self.g_and(sel, when1), self.g_and(sel ^ 1, when0))

    def g_and_all(self, lits: list[int]) -> int:
        acc = CONST1
        for lit in lits:
            acc = self.g_and(acc, lit)
        return acc

    def g_or_all(self, lits: list[int]) -> int:
        acc = CONST0
        for lit in lits:
            acc = self.g_or(acc, lit)
        return acc

    # -- introspection --------------------------------------------------------

    def node_kind(self, idx: int) -> str:
        return ("const", "input", "reg", "and")[self.nodes[idx][0]]

    def and_count(self) -> int:
        return sum(1 for n in self.nodes if n[0] == _T_AND)

    def is_combinational(self) -> bool:
        return not self.registers

    def check(self) -> None:
        """Validate structural invariants (operands defined before use)."""
        for idx, node in enumerate(self.nodes):
            if node[0] == _T_AND:
                for operand in node[1:]:
                    if lit_node(operand) >= idx:
                        raise SimulationError(
                            f"node {idx} references undefined operand {operand}"
                        )
        for reg in self.registers:
            if reg.next_lit is None:
                raise SimulationError(f"register {reg.name} has no next-state literal")
            if lit_node(reg.next_lit) >= len(self.nodes):
                raise SimulationError(f"register {reg.name} next-state out of range")
        for name, lit in self.outputs:
            if lit_node(lit) >= len(self.nodes):
                raise SimulationError(f"output {name} literal out of range")

    def cone_and_count(self, lit: int) -> int:
        """AND nodes in the sequential cone of influence of a literal."""
        seen: set[int] = set()
        stack = [lit_node(lit)]
        ands = 0
        while stack:
            idx = stack.pop()
            if idx in seen:
                continue
            seen.add(idx)
            node = self.nodes[idx]
            if node[0] == _T_AND:
                ands += 1
                stack.append(lit_node(node[1]))
                stack.append(lit_node(node[2]))
            elif node[0] == _T_REG:
                reg = self.registers[self.reg_of_node[idx]]
                if reg.next_lit is not None:
                    stack.append(lit_node(reg.next_lit))
        return ands

    def dump(self) -> str:
        """Textual debug form: one node per line."""
        lines = [f"netlist {self.name}"]
        for name in self.inputs:
            lines.append(f"input {self.input_nodes[name]} name={name}")
        for idx, node in enumerate(self.nodes):
            if node[0] == _T_AND:
                lines.append(f"{idx} = AND({node[1]}, {node[2]})")
        for reg in self.registers:
            lines.append(
                f"reg {reg.node} next={reg.next_lit} reset={reg.reset_value} "
                f"clock={reg.clock} name={reg.name}"
            )
        for name, lit in self.outputs:
            lines.append(f"output {lit} name={name}")
        return "\n".join(lines) + "\n"
