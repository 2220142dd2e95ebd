"""Equivalence verdicts, partition coverage, self-verification, evaluation.

Sequential equivalence is decided by bounded model checking from reset
(bug finding) plus two proof attempts: a register-correspondence step
(sound whenever matched registers share reset values) and plain
k-induction over output equality.  Anything unproven is `unknown`.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from ..errors import ElaborationError, InterfaceMismatchError, RtlBenchError, VerilogSyntaxError
from ..frontend.nodes import SourceUnit
from ..frontend.parser import parse
from ..netlist.aig import Netlist
from ..netlist.elaborate import elaborate
from ..netlist.simulate import simulate
from ..taskgen import Task, reconstruct_design
from .cnf import CnfBuilder, encode_frame, initial_state_reset, next_state, unroll
from .miter import Miter, build_miter
from .sat import DEFAULT_CONFLICT_BUDGET, SatResult, sat_solve

DEFAULT_K = 30

EQUIVALENT = "equivalent"
NOT_EQUIVALENT = "not_equivalent"
UNKNOWN = "unknown"


class Verdict:
    EQUIVALENT = EQUIVALENT
    NOT_EQUIVALENT = NOT_EQUIVALENT
    UNKNOWN = UNKNOWN


@dataclass
class BitVerdict:
    name: str
    verdict: str
    weight: int


@dataclass
class Counterexample:
    inputs: list[dict[str, int]]
    golden_outputs: list[dict[str, int]]
    candidate_outputs: list[dict[str, int]]
    mismatch_cycle: int
    mismatch_bits: list[str]

    def to_dict(self) -> dict:
        return {
            "inputs": self.inputs,
            "golden_outputs": self.golden_outputs,
            "candidate_outputs": self.candidate_outputs,
            "mismatch_cycle": self.mismatch_cycle,
            "mismatch_bits": self.mismatch_bits,
        }

    def render(self) -> str:
        """Per-cycle assignment table."""
        names = sorted(self.inputs[0]) if self.inputs else []
        lines = ["cycle | " + " ".join(names) + " | mismatches"]
        for t, cycle in enumerate(self.inputs):
            marks = " ".join(self.mismatch_bits) if t == self.mismatch_cycle else ""
            lines.append(
                f"{t:5d} | " + " ".join(str(cycle[n]) for n in names) + " | " + marks
            )
        return "\n".join(lines)


@dataclass
class CheckOutcome:
    verdict: str
    bits: list[BitVerdict]
    counterexample: Counterexample | None = None
    queries: int = 0


@dataclass
class EvalResult:
    task_id: str
    stx: str  # 'pass' or the failure reason
    eqv: str  # equivalent / not_equivalent / unknown / error
    eqv_reason: str | None
    partitions: list[BitVerdict]
    coverage: float
    coverage_unweighted: float
    counterexample: Counterexample | None
    runtime_ms: float
    sat_queries: int

    @property
    def stx_pass(self) -> bool:
        return self.stx == "pass"

    def to_json(self) -> str:
        return json.dumps(
            {
                "task_id": self.task_id,
                "stx": self.stx,
                "eqv": self.eqv,
                "eqv_reason": self.eqv_reason,
                "partitions": [
                    {"name": b.name, "verdict": b.verdict, "weight": b.weight}
                    for b in self.partitions
                ],
                "coverage": round(self.coverage, 4),
                "coverage_unweighted": round(self.coverage_unweighted, 4),
                "counterexample": self.counterexample.to_dict() if self.counterexample else None,
                "runtime_ms": round(self.runtime_ms, 3),
                "sat_queries": self.sat_queries,
            },
            sort_keys=True,
        )


# -- counterexample replay ------------------------------------------------------


def _trace_from_model(miter: Miter, frames, model) -> Counterexample:
    """Extract per-frame inputs from a SAT model and replay both netlists."""
    stimulus = []
    for frame in frames:
        cycle = {}
        for name in miter.aig.inputs:
            var = frame.input_vars.get(name)
            cycle[name] = 1 if (var is not None and model[var]) else 0
        stimulus.append(cycle)
    golden_out = simulate(miter.golden, stimulus)
    candidate_out = simulate(miter.candidate, stimulus)
    for t in range(len(stimulus)):
        bad = sorted(
            name for name in golden_out[t] if golden_out[t][name] != candidate_out[t].get(name)
        )
        if bad:
            return Counterexample(
                inputs=stimulus[: t + 1],
                golden_outputs=golden_out[: t + 1],
                candidate_outputs=candidate_out[: t + 1],
                mismatch_cycle=t,
                mismatch_bits=bad,
            )
    raise RtlBenchError("SAT counterexample did not replay to an output mismatch")


# -- combinational check ----------------------------------------------------------


def check_combinational(
    miter: Miter, conflict_budget: int = DEFAULT_CONFLICT_BUDGET
) -> CheckOutcome:
    """Per-output-bit SAT: UNSAT of 'this XNOR can be 0' proves the bit.

    For sequential miters, matched registers become shared free cut-point
    inputs; unmatched registers are free per copy.
    """
    builder = CnfBuilder()
    state = {}
    for g_node, c_node in miter.matched_regs:
        var = builder.new_var()
        state[g_node] = var
        state[c_node] = var
    for regs in (miter.golden_regs, miter.candidate_regs):
        for node in regs.values():
            if node not in state:
                state[node] = builder.new_var()
    frame = encode_frame(miter.aig, builder, state)
    cnf = builder.cnf()

    bits = []
    counterexample = None
    queries = 0
    for out in miter.outputs:
        queries += 1
        res = sat_solve(cnf, assumptions=[-frame.lit(out.xnor_lit)], conflict_budget=conflict_budget)
        if res.is_unsat:
            bits.append(BitVerdict(out.name, EQUIVALENT, out.weight))
        elif res.is_sat:
            bits.append(BitVerdict(out.name, NOT_EQUIVALENT, out.weight))
            if counterexample is None and miter.is_combinational:
                counterexample = _trace_from_model(miter, [frame], res.model)
        else:
            bits.append(BitVerdict(out.name, UNKNOWN, out.weight))
    if all(b.verdict == EQUIVALENT for b in bits):
        verdict = EQUIVALENT
    elif any(b.verdict == NOT_EQUIVALENT for b in bits):
        verdict = NOT_EQUIVALENT
    else:
        verdict = UNKNOWN
    return CheckOutcome(verdict, bits, counterexample, queries)


# -- sequential machinery ------------------------------------------------------------


def _bmc(
    miter: Miter, target_lit: int, k: int, conflict_budget: int
) -> tuple[SatResult, list]:
    """SAT iff the target equality literal can be 0 within k cycles of reset."""
    builder = CnfBuilder()
    frames = unroll(miter.aig, builder, k, init="reset")
    builder.add_clause([-frame.lit(target_lit) for frame in frames])
    return sat_solve(builder.cnf(), conflict_budget=conflict_budget), frames


def _strong_step(miter: Miter, target_lit: int, conflict_budget: int) -> SatResult:
    """Register-correspondence induction step.

    Assume matched registers equal (shared variables) and the target
    equality true at cycle t; UNSAT of 'something breaks at t+1' proves
    the property inductive.  Sound because matched registers share reset
    values, so the property holds at cycle 0.
    """
    builder = CnfBuilder()
    state0 = {}
    for g_node, c_node in miter.matched_regs:
        var = builder.new_var()
        state0[g_node] = var
        state0[c_node] = var
    for regs in (miter.golden_regs, miter.candidate_regs):
        for node in regs.values():
            if node not in state0:
                state0[node] = builder.new_var()
    frame0 = encode_frame(miter.aig, builder, state0)
    builder.add_clause([frame0.lit(target_lit)])  # property holds at t
    state1 = next_state(miter.aig, frame0)
    frame1 = encode_frame(miter.aig, builder, state1)
    # violation at t+1: target falsified, or some matched pair diverges
    violation = [-frame1.lit(target_lit)]
    for g_node, c_node in miter.matched_regs:
        g_lit, c_lit = state1[g_node], state1[c_node]
        diff = builder.new_var()
        # diff <-> g xor c
        builder.add_clause([-diff, g_lit, c_lit])
        builder.add_clause([-diff, -g_lit, -c_lit])
        builder.add_clause([diff, -g_lit, c_lit])
        builder.add_clause([diff, g_lit, -c_lit])
        violation.append(diff)
    builder.add_clause(violation)
    return sat_solve(builder.cnf(), conflict_budget=conflict_budget)


def _output_kstep(miter: Miter, target_lit: int, k: int, conflict_budget: int) -> SatResult:
    """Plain k-induction: equality for k cycles from any state forces cycle k."""
    builder = CnfBuilder()
    frames = unroll(miter.aig, builder, k + 1, init="free")
    assumptions = [frames[t].lit(target_lit) for t in range(k)]
    assumptions.append(-frames[k].lit(target_lit))
    return sat_solve(builder.cnf(), assumptions=assumptions, conflict_budget=conflict_budget)


def _registers_start_equal(miter: Miter) -> bool:
    return all(
        miter.aig.registers[miter.aig.reg_of_node[g]].reset_value
        == miter.aig.registers[miter.aig.reg_of_node[c]].reset_value
        for g, c in miter.matched_regs
    )


def _sequential_bit(
    miter: Miter, target_lit: int, k: int, conflict_budget: int
) -> tuple[str, Counterexample | None, int]:
    res, frames = _bmc(miter, target_lit, k, conflict_budget)
    queries = 1
    if res.is_sat:
        return NOT_EQUIVALENT, _trace_from_model(miter, frames, res.model), queries
    if res.status == "unknown":
        return UNKNOWN, None, queries
    if miter.matched_regs and _registers_start_equal(miter):
        queries += 1
        if _strong_step(miter, target_lit, conflict_budget).is_unsat:
            return EQUIVALENT, None, queries
    queries += 1
    if _output_kstep(miter, target_lit, k, conflict_budget).is_unsat:
        return EQUIVALENT, None, queries
    return UNKNOWN, None, queries


def check_inductive(
    miter: Miter, k: int = DEFAULT_K, conflict_budget: int = DEFAULT_CONFLICT_BUDGET
) -> CheckOutcome:
    """Base case from reset over k cycles, then inductive proof attempts."""
    verdict, trace, queries = _sequential_bit(miter, miter.eq_all, k, conflict_budget)
    bits: list[BitVerdict] = []
    if verdict == EQUIVALENT:
        bits = [BitVerdict(o.name, EQUIVALENT, o.weight) for o in miter.outputs]
        return CheckOutcome(EQUIVALENT, bits, None, queries)
    for out in miter.outputs:
        bit_verdict, _, q = _sequential_bit(miter, out.xnor_lit, k, conflict_budget)
        queries += q
        bits.append(BitVerdict(out.name, bit_verdict, out.weight))
    if verdict == UNKNOWN and any(b.verdict == NOT_EQUIVALENT for b in bits):
        # a per-bit refutation outranks an inconclusive overall answer
        for out, bit in zip(miter.outputs, bits):
            if bit.verdict == NOT_EQUIVALENT:
                res, frames = _bmc(miter, out.xnor_lit, k, conflict_budget)
                if res.is_sat:
                    trace = _trace_from_model(miter, frames, res.model)
                    verdict = NOT_EQUIVALENT
                    break
    return CheckOutcome(verdict, bits, trace, queries)


# -- partition coverage -----------------------------------------------------------


def partition_coverage(verdicts: list[str], weights: list[float]) -> float:
    """Weighted percentage of partitions proved equivalent (unknown counts
    as not equivalent)."""
    total = sum(weights)
    if total <= 0:
        raise RtlBenchError("partition weights must be positive")
    passed = sum(w for v, w in zip(verdicts, weights) if v == EQUIVALENT)
    return 100.0 * passed / total


# -- task evaluation ---------------------------------------------------------------


def _context_modules(task: Task) -> SourceUnit:
    full = parse(reconstruct_design(task))
    return full


def _build_candidate_unit(task: Task, golden_unit: SourceUnit, candidate_source: str) -> SourceUnit:
    candidate_unit = parse(candidate_source)
    if candidate_unit.module(task.target_module) is None:
        raise VerilogSyntaxError(f"candidate lacks module {task.target_module}")
    context = [m for m in golden_unit.modules if m.name != task.target_module]
    names = {m.name for m in context}
    for mod in candidate_unit.modules:
        if mod.name in names:
            raise VerilogSyntaxError(f"candidate redefines context module {mod.name}")
    merged = SourceUnit(modules=context + candidate_unit.modules)
    return merged


def evaluate_candidate(
    task: Task,
    candidate_source: str,
    k: int = DEFAULT_K,
    conflict_budget: int = DEFAULT_CONFLICT_BUDGET,
) -> EvalResult:
    """Syntax gate, miter, equivalence check, and partition coverage."""
    started = time.perf_counter()

    def finish(stx, eqv, reason, bits, trace, queries):
        weights = [b.weight for b in bits]
        coverage = partition_coverage([b.verdict for b in bits], weights) if bits else 0.0
        unweighted = (
            partition_coverage([b.verdict for b in bits], [1.0] * len(bits)) if bits else 0.0
        )
        if eqv == EQUIVALENT:
            coverage = 100.0
            unweighted = 100.0
        return EvalResult(
            task_id=task.task_id,
            stx=stx,
            eqv=eqv,
            eqv_reason=reason,
            partitions=bits,
            coverage=coverage,
            coverage_unweighted=unweighted,
            counterexample=trace,
            runtime_ms=(time.perf_counter() - started) * 1000.0,
            sat_queries=queries,
        )

    try:
        golden_unit = _context_modules(task)
        golden_netlist = elaborate(golden_unit, task.target_module)
    except RtlBenchError as exc:
        return finish("pass", "error", f"golden elaboration failed: {exc}", [], None, 0)

    try:
        candidate_unit = _build_candidate_unit(task, golden_unit, candidate_source)
        candidate_netlist = elaborate(candidate_unit, task.target_module)
        miter = build_miter(golden_netlist, candidate_netlist)
    except (VerilogSyntaxError, ElaborationError, InterfaceMismatchError) as exc:
        return finish(f"fail: {exc}", "error", str(exc), [], None, 0)

    if miter.is_combinational:
        outcome = check_combinational(miter, conflict_budget)
    else:
        outcome = check_inductive(miter, k, conflict_budget)
    return finish(
        "pass", outcome.verdict, None, outcome.bits, outcome.counterexample, outcome.queries
    )


def self_verify(
    task: Task, k: int = DEFAULT_K, conflict_budget: int = DEFAULT_CONFLICT_BUDGET
) -> tuple[bool, str | None]:
    """Evaluate the golden source against itself; pass iff fully equivalent."""
    result = evaluate_candidate(task, task.golden_source, k=k, conflict_budget=conflict_budget)
    if result.stx_pass and result.eqv == EQUIVALENT:
        return True, None
    reason = result.eqv_reason or result.stx if not result.stx_pass else result.eqv
    return False, reason or result.eqv
