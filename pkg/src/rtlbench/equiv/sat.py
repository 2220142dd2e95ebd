"""CDCL SAT solver: watched literals, first-UIP learning, VSIDS, restarts.

Complete on every finite instance; a configurable conflict budget turns
oversized queries into an explicit unknown verdict instead of hanging.
"""
from __future__ import annotations

from dataclasses import dataclass
from heapq import heappop, heappush

from .cnf import Cnf

DEFAULT_CONFLICT_BUDGET = 200_000


@dataclass
class SatResult:
    status: str  # 'sat', 'unsat', 'unknown'
    model: list[bool] | None = None  # 1-indexed by variable when sat

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


def _luby(i: int) -> int:
    k = 1
    while (1 << (k + 1)) <= i + 1:
        k += 1
    if (1 << (k + 1)) - 1 == i + 1:
        return 1 << k
    while True:
        if i + 1 == (1 << k):
            return 1 << (k - 1)
        i = i + 1 - (1 << (k - 1)) - 1
        k -= 1
        while (1 << k) > i + 1:
            k -= 1
        if (1 << (k + 1)) - 1 == i + 1:
            return 1 << k


class Solver:
    def __init__(self, num_vars: int, conflict_budget: int = DEFAULT_CONFLICT_BUDGET):
        self.nvars = num_vars
        self.budget = conflict_budget
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.assign = [0] * (num_vars + 1)  # 0 unassigned, 1 true, -1 false
        self.level = [0] * (num_vars + 1)
        self.reason = [-1] * (num_vars + 1)
        self.phase = [False] * (num_vars + 1)
        self.activity = [0.0] * (num_vars + 1)
        self.var_inc = 1.0
        self.heap: list[tuple[float, int]] = []
        self.trail: list[int] = []
        self.qhead = 0
        self.dlevel = 0
        self.ok = True
        for v in range(1, num_vars + 1):
            heappush(self.heap, (0.0, v))

    # -- basic operations ----------------------------------------------------

    def value(self, lit: int) -> int:
        v = self.assign[lit if lit > 0 else -lit]
        return v if lit > 0 else -v

    def _watch(self, lit: int, ci: int) -> None:
        self.watches.setdefault(lit, []).append(ci)

    def add_clause(self, lits: list[int]) -> None:
        if not self.ok:
            return
        seen = set()
        clause = []
        for lit in lits:
            if -lit in seen:
                return  # tautology
            if lit not in seen:
                seen.add(lit)
                clause.append(lit)
        if not clause:
            self.ok = False
            return
        if len(clause) == 1:
            lit = clause[0]
            if self.value(lit) == -1:
                self.ok = False
            elif self.value(lit) == 0:
                self._enqueue(lit, -1)
            return
        ci = len(self.clauses)
        self.clauses.append(clause)
        self._watch(clause[0], ci)
        self._watch(clause[1], ci)

    def _enqueue(self, lit: int, reason: int) -> None:
        var = lit if lit > 0 else -lit
        self.assign[var] = 1 if lit > 0 else -1
        self.level[var] = self.dlevel
        self.reason[var] = reason
        self.phase[var] = lit > 0
        self.trail.append(lit)

    def _propagate(self) -> int:
        """Exhaust the queue; return a conflicting clause index or -1."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            neg = -lit
            ws = self.watches.get(neg)
            if not ws:
                continue
            kept = []
            i = 0
            n = len(ws)
            conflict = -1
            while i < n:
                ci = ws[i]
                i += 1
                clause = self.clauses[ci]
                if clause[0] == neg:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self.value(first) == 1:
                    kept.append(ci)
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self.value(clause[k]) != -1:
                        clause[1], clause[k] = clause[k], clause[1]
                        self._watch(clause[1], ci)
                        moved = True
                        break
                if moved:
                    continue
                kept.append(ci)
                if self.value(first) == -1:
                    # conflict: keep remaining watches intact
                    kept.extend(ws[i:n])
                    conflict = ci
                    break
                self._enqueue(first, ci)
            self.watches[neg] = kept
            if conflict != -1:
                return conflict
        return -1

    # -- conflict analysis -----------------------------------------------------

    def _bump(self, var: int) -> None:
        self.activity[var] += self.var_inc
        if self.activity[var] > 1e100:
            for v in range(1, self.nvars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100
        heappush(self.heap, (-self.activity[var], var))

    def _analyze(self, conflict: int) -> tuple[list[int], int]:
        learned: list[int] = []
        seen = [False] * (self.nvars + 1)
        counter = 0
        lit = 0
        index = len(self.trail) - 1
        clause = self.clauses[conflict]
        while True:
            for q in clause:
                var = q if q > 0 else -q
                if not seen[var] and self.level[var] > 0:
                    seen[var] = True
                    self._bump(var)
                    if self.level[var] >= self.dlevel:
                        counter += 1
                    else:
                        learned.append(q)
            while True:
                lit = self.trail[index]
                index -= 1
                var = lit if lit > 0 else -lit
                if seen[var]:
                    break
            counter -= 1
            var = lit if lit > 0 else -lit
            if counter == 0:
                learned.insert(0, -lit)
                break
            clause = self.clauses[self.reason[var]]
        if len(learned) == 1:
            return learned, 0
        # keep a literal from the backtrack level in watch position 1
        best = 1
        for k in range(2, len(learned)):
            if self.level[abs(learned[k])] > self.level[abs(learned[best])]:
                best = k
        learned[1], learned[best] = learned[best], learned[1]
        return learned, self.level[abs(learned[1])]

    def _backtrack(self, target: int) -> None:
        while self.trail:
            lit = self.trail[-1]
            var = lit if lit > 0 else -lit
            if self.level[var] <= target:
                break
            self.assign[var] = 0
            self.reason[var] = -1
            heappush(self.heap, (-self.activity[var], var))
            self.trail.pop()
        self.qhead = len(self.trail)
        self.dlevel = target

    def _decide(self) -> int:
        while self.heap:
            _, var = heappop(self.heap)
            if self.assign[var] == 0:
                return var
        for var in range(1, self.nvars + 1):
            if self.assign[var] == 0:
                return var
        return 0

    # -- main loop ---------------------------------------------------------------

    def solve(self) -> SatResult:
        if not self.ok:
            return SatResult("unsat")
        conflict_count = 0
        restart_idx = 0
        restart_limit = 64 * _luby(0)
        conflicts_since_restart = 0
        while True:
            conflict = self._propagate()
            if conflict != -1:
                conflict_count += 1
                conflicts_since_restart += 1
                if conflict_count > self.budget:
                    return SatResult("unknown")
                if self.dlevel == 0:
                    return SatResult("unsat")
                learned, back = self._analyze(conflict)
                self._backtrack(back)
                if len(learned) == 1:
                    self._enqueue(learned[0], -1)
                else:
                    ci = len(self.clauses)
                    self.clauses.append(learned)
                    self._watch(learned[0], ci)
                    self._watch(learned[1], ci)
                    self._enqueue(learned[0], ci)
                self.var_inc /= 0.95
                continue
            if conflicts_since_restart >= restart_limit:
                restart_idx += 1
                restart_limit = 64 * _luby(restart_idx)
                conflicts_since_restart = 0
                self._backtrack(0)
                continue
            var = self._decide()
            if var == 0:
                model = [False] * (self.nvars + 1)
                for v in range(1, self.nvars + 1):
                    model[v] = self.assign[v] == 1
                return SatResult("sat", model)
            self.dlevel += 1
            lit = var if self.phase[var] else -var
            self._enqueue(lit, -1)


def sat_solve(
    f: Cnf,
    assumptions: list[int] | None = None,
    conflict_budget: int = DEFAULT_CONFLICT_BUDGET,
) -> SatResult:
    """One-shot solve; assumptions are injected as unit clauses."""
    solver = Solver(f.num_vars, conflict_budget)
    for clause in f.clauses:
        solver.add_clause(clause)
        if not solver.ok:
            return SatResult("unsat")
    for lit in assumptions or []:
        solver.add_clause([lit])
        if not solver.ok:
            return SatResult("unsat")
    return solver.solve()
