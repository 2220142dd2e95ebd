"""Min-K membership metric over per-token log-probability dumps."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import RtlBenchError

DEFAULT_K_GRID = (10.0, 15.0, 20.0, 25.0, 30.0)
DEFAULT_MAX_TOKENS = 2000


@dataclass
class LogprobRecord:
    task_id: str
    model_id: str
    tokens: list[str]
    logprobs: list[float]

    def validate(self) -> None:
        if len(self.tokens) != len(self.logprobs):
            raise RtlBenchError(
                f"{self.task_id}: token/logprob length mismatch "
                f"({len(self.tokens)} vs {len(self.logprobs)})"
            )
        if not all(math.isfinite(lp) for lp in self.logprobs):
            raise RtlBenchError(f"{self.task_id}: non-finite logprob")


def min_k(rec: LogprobRecord, k_percent: float) -> float:
    """Mean log-probability of the least likely K% of tokens."""
    if not rec.logprobs:
        raise RtlBenchError(f"{rec.task_id}: empty token list")
    if not 0 < k_percent <= 100:
        raise RtlBenchError(f"K must be in (0, 100], got {k_percent}")
    ordered = sorted(rec.logprobs)
    count = math.ceil(k_percent / 100.0 * len(ordered))
    chosen = ordered[:count]
    return sum(chosen) / len(chosen)


def min_k_curve(
    records: list[LogprobRecord], k_grid: list[float] | tuple[float, ...] = DEFAULT_K_GRID
) -> dict:
    """Per-K mean of exp(min_k) across records, plus trapezoid AUC
    normalized by the grid span."""
    if not records:
        raise RtlBenchError("no records for min-k curve")
    grid = list(k_grid)
    if grid != sorted(grid):
        raise RtlBenchError("K grid must be sorted ascending")
    curve = []
    for k in grid:
        values = [math.exp(min_k(rec, k)) for rec in records]
        curve.append(sum(values) / len(values))
    if len(grid) > 1:
        area = 0.0
        for i in range(len(grid) - 1):
            area += (curve[i] + curve[i + 1]) / 2.0 * (grid[i + 1] - grid[i])
        auc = area / (grid[-1] - grid[0])
    else:
        auc = curve[0]
    return {"k_grid": grid, "curve": curve, "auc": auc, "samples": len(records)}


def token_count(text_or_tokens) -> int:
    """Dump token list when present, else a whitespace word-count proxy."""
    if isinstance(text_or_tokens, list):
        return len(text_or_tokens)
    return len(text_or_tokens.split())


def filter_by_length(tasks: list, max_tokens: int = DEFAULT_MAX_TOKENS) -> list:
    """Drop tasks whose golden module exceeds the token budget."""
    kept = []
    for task in tasks:
        if token_count(task.golden_source) <= max_tokens:
            kept.append(task)
    return kept


def read_logprobs_jsonl(path: Path) -> list[LogprobRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            rec = LogprobRecord(
                task_id=data["task_id"],
                model_id=data.get("model_id", ""),
                tokens=list(data.get("tokens", [])),
                logprobs=[float(x) for x in data["logprobs"]],
            )
            rec.validate()
            records.append(rec)
    return records
