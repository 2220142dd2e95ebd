"""Cycle-accurate netlist evaluation for oracle checks and trace replay."""
from __future__ import annotations

from ..errors import SimulationError
from .aig import Netlist, lit_node


def _eval_nodes(nl: Netlist, input_values: dict[str, int], state: list[int]) -> list[int]:
    """Node values in creation order (creation order is topological)."""
    values = [0] * len(nl.nodes)
    for idx, node in enumerate(nl.nodes):
        tag = node[0]
        if tag == 0:  # const0
            values[idx] = 0
        elif tag == 1:  # input
            name = node[1]
            if name not in input_values:
                raise SimulationError(f"missing input value for {name}")
            bit = input_values[name]
            if bit not in (0, 1):
                raise SimulationError(f"input {name} must be 0 or 1, got {bit!r}")
            values[idx] = bit
        elif tag == 2:  # register
            values[idx] = state[nl.reg_of_node[idx]]
        else:  # AND
            a = values[lit_node(node[1])] ^ (node[1] & 1)
            b = values[lit_node(node[2])] ^ (node[2] & 1)
            values[idx] = a & b
    return values


def _lit_value(values: list[int], lit: int) -> int:
    return values[lit_node(lit)] ^ (lit & 1)


def simulate_step(
    nl: Netlist, input_values: dict[str, int], state: list[int]
) -> tuple[dict[str, int], list[int]]:
    """One clock cycle: outputs for the current state, then the next state."""
    values = _eval_nodes(nl, input_values, state)
    outputs = {name: _lit_value(values, lit) for name, lit in nl.outputs}
    next_state = [_lit_value(values, reg.next_lit) for reg in nl.registers]
    return outputs, next_state


def reset_state(nl: Netlist) -> list[int]:
    return [reg.reset_value for reg in nl.registers]


def simulate(nl: Netlist, stimulus: list[dict[str, int]]) -> list[dict[str, int]]:
    """Run from reset: per cycle, combinational settle then registers latch."""
    if not stimulus:
        raise SimulationError("stimulus must cover at least one cycle")
    state = reset_state(nl)
    trace = []
    for cycle in stimulus:
        outputs, state = simulate_step(nl, cycle, state)
        trace.append(outputs)
    return trace
