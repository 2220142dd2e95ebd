"""Turn a merged design with n modules into n module-completion tasks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import ShuttleId
from .errors import TaskError
from .frontend.nodes import (
    Binary,
    Concat,
    Ident,
    ModuleDecl,
    Number,
    PortDecl,
    Repeat,
    Select,
    SourceUnit,
    Ternary,
    Unary,
)
from .preprocess import MergedDesign

MASK_MARKER = "// <<< IMPLEMENT THIS MODULE >>>"
PROMPT_TEMPLATE_VERSION = "v1"


@dataclass
class Task:
    task_id: str
    shuttle: ShuttleId
    project_id: str
    target_module: str
    interface: dict
    context_source: str
    golden_source: str
    prompt: str
    masked_block: str = field(repr=False, default="")


# -- expression rendering (for masked headers) ---------------------------------


def render_expr(expr) -> str:
    if isinstance(expr, Number):
        if expr.width is not None:
            return f"{expr.width}'{expr.base}{expr.digits}"
        if expr.base != "d":
            return f"'{expr.base}{expr.digits}"
        return expr.digits
    if isinstance(expr, Ident):
        return expr.name
    if isinstance(expr, Unary):
        return f"({expr.op}{render_expr(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({render_expr(expr.left)} {expr.op} {render_expr(expr.right)})"
    if isinstance(expr, Ternary):
        return f"({render_expr(expr.cond)} ? {render_expr(expr.then)} : {render_expr(expr.other)})"
    if isinstance(expr, Concat):
        return "{" + ", ".join(render_expr(p) for p in expr.parts) + "}"
    if isinstance(expr, Repeat):
        return "{" + render_expr(expr.count) + "{" + render_expr(expr.part) + "}}"
    if isinstance(expr, Select):
        if expr.lsb is None:
            return f"{expr.base.name}[{render_expr(expr.msb)}]"
        sep = expr.indexed or ":"
        return f"{expr.base.name}[{render_expr(expr.msb)}{sep}{render_expr(expr.lsb)}]"
    raise TaskError(f"cannot render expression {expr!r}")


def _render_port(port: PortDecl) -> str:
    direction = {"in": "input", "out": "output", "inout": "inout"}[port.direction]
    parts = [direction]
    if port.signed:
        parts.append("signed")
    if port.range_exprs is not None:
        parts.append(f"[{render_expr(port.range_exprs[0])}:{render_expr(port.range_exprs[1])}]")
    parts.append(port.name)
    return " ".join(parts)


def render_masked_module(mod: ModuleDecl) -> str:
    """Header plus mask marker plus endmodule, parseable on its own."""
    lines = [f"module {mod.name}"]
    if mod.params:
        lines[-1] += " #("
        for i, p in enumerate(mod.params):
            comma = "," if i + 1 < len(mod.params) else ""
            lines.append(f"    parameter {p.name} = {render_expr(p.value_expr)}{comma}")
        lines.append(")")
    if mod.ports:
        lines[-1] += " ("
        for i, port in enumerate(mod.ports):
            comma = "," if i + 1 < len(mod.ports) else ""
            lines.append(f"    {_render_port(port)}{comma}")
        lines.append(");")
    else:
        lines[-1] += ";"
    lines.append(f"    {MASK_MARKER}")
    lines.append("endmodule")
    return "\n".join(lines)


def _interface_of(mod: ModuleDecl) -> dict:
    return {
        "ports": [
            {
                "name": p.name,
                "direction": p.direction,
                "width": p.width if p.width is not None else 1,
                "signed": p.signed,
            }
            for p in mod.ports
        ],
        "params": [{"name": p.name, "value": p.value} for p in mod.params],
    }


def _load_template() -> str:
    ref = resources.files("rtlbench").joinpath(f"templates/prompt_{PROMPT_TEMPLATE_VERSION}.txt")
    return ref.read_text(encoding="utf-8")


def render_prompt(task: Task) -> str:
    template = _load_template()
    return template.format(target_module=task.target_module, context_source=task.context_source)


def build_tasks(design: MergedDesign, unit: SourceUnit) -> list[Task]:
    """Exactly one task per module: mask its body, keep the rest verbatim."""
    tasks = []
    source = design.source
    for mod in unit.modules:
        start, end = mod.span
        golden = source[start:end]
        masked = render_masked_module(mod)
        context = source[:start] + masked + source[end:]
        task = Task(
            task_id=f"{design.shuttle.name}/{design.project_id}/{mod.name}",
            shuttle=design.shuttle,
            project_id=design.project_id,
            target_module=mod.name,
            interface=_interface_of(mod),
            context_source=context,
            golden_source=golden,
            prompt="",
            masked_block=masked,
        )
        task.prompt = render_prompt(task)
        tasks.append(task)
    return tasks


def reconstruct_design(task: Task) -> str:
    """Undo the masking: context with the golden module back in place."""
    masked = task.masked_block
    if not masked or masked not in task.context_source:
        raise TaskError(f"{task.task_id}: masked block not found in context")
    return task.context_source.replace(masked, task.golden_source, 1)


def splice_candidate(task: Task, candidate_source: str) -> str:
    """Context text with the masked block replaced by the candidate's text."""
    masked = task.masked_block
    if not masked or masked not in task.context_source:
        raise TaskError(f"{task.task_id}: masked block not found in context")
    return task.context_source.replace(masked, candidate_source, 1)


# -- serialization --------------------------------------------------------------


def task_to_dict(task: Task) -> dict:
    return {
        "task_id": task.task_id,
        "shuttle": {"name": task.shuttle.name, "ordinal": task.shuttle.ordinal},
        "project_id": task.project_id,
        "target_module": task.target_module,
        "interface": task.interface,
        "context_source": task.context_source,
        "golden_source": task.golden_source,
        "prompt": task.prompt,
        "masked_block": task.masked_block,
        "prompt_template": PROMPT_TEMPLATE_VERSION,
    }


def task_from_dict(data: dict) -> Task:
    return Task(
        task_id=data["task_id"],
        shuttle=ShuttleId(data["shuttle"]["name"], data["shuttle"]["ordinal"]),
        project_id=data["project_id"],
        target_module=data["target_module"],
        interface=data["interface"],
        context_source=data["context_source"],
        golden_source=data["golden_source"],
        prompt=data["prompt"],
        masked_block=data.get("masked_block", ""),
    )


def write_tasks_jsonl(tasks: list[Task], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(json.dumps(task_to_dict(task), sort_keys=True) + "\n")


def read_tasks_jsonl(path: Path) -> list[Task]:
    tasks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                tasks.append(task_from_dict(json.loads(line)))
    return tasks
