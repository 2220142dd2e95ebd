"""CNF construction: Tseitin encoding of netlists and time-frame unrolling."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..netlist.aig import Netlist, lit_node

TRUE_VAR = 1  # variable 1 is constrained true in every formula we build


@dataclass
class Cnf:
    num_vars: int
    clauses: list[list[int]]


class CnfBuilder:
    def __init__(self):
        self.num_vars = 1
        self.clauses: list[list[int]] = [[TRUE_VAR]]

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add_clause(self, clause: list[int]) -> None:
        self.clauses.append(clause)

    def add_and(self, out: int, a: int, b: int) -> None:
        """out <-> a & b over signed CNF literals."""
        self.clauses.append([-out, a])
        self.clauses.append([-out, b])
        self.clauses.append([out, -a, -b])

    def cnf(self) -> Cnf:
        return Cnf(self.num_vars, self.clauses)


@dataclass
class Frame:
    """CNF literals for one unrolled cycle of a netlist."""

    node_lit: list[int]  # signed CNF literal per netlist node index
    input_vars: dict[str, int] = field(default_factory=dict)

    def lit(self, netlist_lit: int) -> int:
        base = self.node_lit[lit_node(netlist_lit)]
        return -base if netlist_lit & 1 else base


def encode_frame(
    nl: Netlist, builder: CnfBuilder, state_lits: dict[int, int]
) -> Frame:
    """Encode one cycle.  ``state_lits`` maps register node index to the CNF
    literal holding that register's value this cycle."""
    node_lit = [0] * len(nl.nodes)
    frame = Frame(node_lit=node_lit)
    for idx, node in enumerate(nl.nodes):
        tag = node[0]
        if tag == 0:  # const0
            node_lit[idx] = -TRUE_VAR
        elif tag == 1:  # input
            var = builder.new_var()
            node_lit[idx] = var
            frame.input_vars[node[1]] = var
        elif tag == 2:  # register
            node_lit[idx] = state_lits[idx]
        else:  # AND
            var = builder.new_var()
            builder.add_and(var, frame.lit(node[1]), frame.lit(node[2]))
            node_lit[idx] = var
    return frame


def initial_state_reset(nl: Netlist) -> dict[int, int]:
    """Register CNF literals fixed at their reset values."""
    return {
        reg.node: (TRUE_VAR if reg.reset_value else -TRUE_VAR) for reg in nl.registers
    }


def initial_state_free(nl: Netlist, builder: CnfBuilder) -> dict[int, int]:
    """Fresh unconstrained variables for every register (symbolic start)."""
    return {reg.node: builder.new_var() for reg in nl.registers}


def next_state(nl: Netlist, frame: Frame) -> dict[int, int]:
    """State literals for the following cycle from this frame's next-state."""
    return {reg.node: frame.lit(reg.next_lit) for reg in nl.registers}


def unroll(
    nl: Netlist,
    builder: CnfBuilder,
    cycles: int,
    init: str = "reset",
) -> list[Frame]:
    """Time-frame expansion for `cycles` consecutive clock ticks."""
    if init == "reset":
        state = initial_state_reset(nl)
    else:
        state = initial_state_free(nl, builder)
    frames = []
    for _ in range(cycles):
        frame = encode_frame(nl, builder, state)
        frames.append(frame)
        state = next_state(nl, frame)
    return frames
