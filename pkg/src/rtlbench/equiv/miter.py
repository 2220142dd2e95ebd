"""Miter construction: two netlists, shared inputs, XNOR-compared outputs."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InterfaceMismatchError
from ..netlist.aig import Netlist, lit_node


@dataclass
class MiterOutput:
    name: str          # output bit name
    golden_lit: int    # literal in the combined AIG
    candidate_lit: int
    xnor_lit: int
    weight: int        # AND-count of this bit's cone in the standalone golden


@dataclass
class Miter:
    aig: Netlist
    golden: Netlist
    candidate: Netlist
    outputs: list[MiterOutput]
    eq_all: int
    golden_regs: dict[str, int] = field(default_factory=dict)     # name -> aig reg node
    candidate_regs: dict[str, int] = field(default_factory=dict)
    matched_regs: list[tuple[int, int]] = field(default_factory=list)  # (g node, c node)
    unmatched: list[str] = field(default_factory=list)

    @property
    def is_combinational(self) -> bool:
        return not self.golden.registers and not self.candidate.registers

    @property
    def all_registers_matched(self) -> bool:
        return len(self.matched_regs) == len(self.golden.registers) == len(
            self.candidate.registers
        )


def check_interfaces(golden: Netlist, candidate: Netlist) -> None:
    """Ports must agree by name, direction, and width; order may differ."""
    g_ports = {p.name: p for p in golden.ports}
    c_ports = {p.name: p for p in candidate.ports}
    problems = []
    for name, gp in g_ports.items():
        cp = c_ports.get(name)
        if cp is None:
            problems.append(f"missing port {name}")
        elif cp.direction != gp.direction:
            problems.append(f"port {name}: direction {cp.direction} != {gp.direction}")
        elif cp.width != gp.width:
            problems.append(f"port {name}: width {cp.width} != {gp.width}")
    for name in c_ports:
        if name not in g_ports:
            problems.append(f"extra port {name}")
    if problems:
        raise InterfaceMismatchError("; ".join(sorted(problems)))


def _copy_into(src: Netlist, dst: Netlist, tag: str) -> tuple[list[int], dict[str, int]]:
    """Replay src nodes into dst; inputs map by name, registers get fresh
    state nodes (prefixed), AND gates re-hash (identical cones collapse)."""
    lit_map = [0] * len(src.nodes)

    def mapped(lit: int) -> int:
        return lit_map[lit_node(lit)] ^ (lit & 1)

    reg_nodes: dict[str, int] = {}
    for idx, node in enumerate(src.nodes):
        kind = node[0]
        if kind == 0:
            lit_map[idx] = 0
        elif kind == 1:
            name = node[1]
            if name in dst.input_nodes:
                lit_map[idx] = dst.input_nodes[name] * 2
            else:
                lit_map[idx] = dst.add_input(name)
        elif kind == 2:
            reg = src.registers[src.reg_of_node[idx]]
            lit = dst.add_register(f"{tag}:{reg.name}", reg.clock, reg.reset_value)
            lit_map[idx] = lit
            reg_nodes[reg.name] = lit_node(lit)
        else:
            lit_map[idx] = dst.g_and(mapped(node[1]), mapped(node[2]))
    for reg in src.registers:
        dst.set_register_next(lit_map[reg.node], mapped(reg.next_lit))
    return lit_map, reg_nodes


def build_miter(golden: Netlist, candidate: Netlist) -> Miter:
    """Combined AIG where eq_all is true iff every output bit agrees."""
    check_interfaces(golden, candidate)
    combined = Netlist(f"miter({golden.name})")
    g_map, g_regs = _copy_into(golden, combined, "g")
    c_map, c_regs = _copy_into(candidate, combined, "c")

    weights = {name: max(1, golden.cone_and_count(lit)) for name, lit in golden.outputs}
    c_outputs = dict(candidate.outputs)
    outputs = []
    xnors = []
    for name, g_lit in golden.outputs:
        c_lit = c_outputs.get(name)
        if c_lit is None:
            raise InterfaceMismatchError(f"candidate lacks output bit {name}")
        g_in_aig = g_map[lit_node(g_lit)] ^ (g_lit & 1)
        c_in_aig = c_map[lit_node(c_lit)] ^ (c_lit & 1)
        xnor = combined.g_xnor(g_in_aig, c_in_aig)
        outputs.append(
            MiterOutput(
                name=name,
                golden_lit=g_in_aig,
                candidate_lit=c_in_aig,
                xnor_lit=xnor,
                weight=weights[name],
            )
        )
        xnors.append(xnor)
    eq_all = combined.g_and_all(xnors)
    combined.add_output("eq_all", eq_all)

    matched = []
    unmatched = []
    for name, g_node in g_regs.items():
        c_node = c_regs.get(name)
        g_reg = combined.registers[combined.reg_of_node[g_node]]
        if c_node is not None:
            c_reg = combined.registers[combined.reg_of_node[c_node]]
            if g_reg.reset_value == c_reg.reset_value:
                matched.append((g_node, c_node))
            else:
                unmatched.append(name)
        else:
            unmatched.append(name)
    for name in c_regs:
        if name not in g_regs:
            unmatched.append(name)

    return Miter(
        aig=combined,
        golden=golden,
        candidate=candidate,
        outputs=outputs,
        eq_all=eq_all,
        golden_regs=g_regs,
        candidate_regs=c_regs,
        matched_regs=matched,
        unmatched=sorted(unmatched),
    )
