"""Include and macro expansion producing one self-contained design text.

All manifest-listed sources are concatenated in manifest order, then
`include / `define / conditional directives are resolved.  Comments are
preserved; directive lines that were consumed produce no output line.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import ProjectRecord, ShuttleId, resolve_source
from .errors import PreprocessError

MAX_INCLUDE_DEPTH = 16
MAX_REWRITES_PER_SITE = 64

_DIRECTIVE_RE = re.compile(r"^\s*`([A-Za-z_][A-Za-z0-9_]*)\s*(.*)$", re.S)
_IDENT = r"[A-Za-z_][A-Za-z0-9_$]*"
_DEFINE_RE = re.compile(rf"^({_IDENT})(\(([^)]*)\))?[ \t]*(.*)$", re.S)
_USE_RE = re.compile(rf"`({_IDENT})")

# Directives that are consumed by the expander (never emitted).
_CONSUMED = {"include", "define", "undef", "ifdef", "ifndef", "elsif", "else", "endif"}


@dataclass
class Macro:
    name: str
    params: list[str] | None  # None = object-like
    body: str


@dataclass
class OriginLine:
    text: str
    src_file: str
    src_line: int


@dataclass
class MergedDesign:
    project_id: str
    shuttle: ShuttleId
    source: str
    origin_map: list[tuple[int, str, int]]


@dataclass
class _CondFrame:
    active: bool          # this branch is selected
    taken: bool           # some earlier branch of this ifdef already matched
    parent_active: bool   # enclosing region active


class _Expander:
    def __init__(self, search_dirs: list[Path]):
        self.search_dirs = search_dirs
        self.macros: dict[str, Macro] = {}
        self.out: list[OriginLine] = []
        self.cond_stack: list[_CondFrame] = []
        self.in_block_comment = False

    # -- comment tracking -------------------------------------------------

    def _code_mask(self, line: str) -> list[bool]:
        """True for characters that are code (not comment, not string)."""
        mask = [True] * len(line)
        i = 0
        in_string = False
        while i < len(line):
            ch = line[i]
            if self.in_block_comment:
                mask[i] = False
                if line.startswith("*/", i):
                    mask[i + 1] = False
                    self.in_block_comment = False
                    i += 2
                    continue
                i += 1
                continue
            if in_string:
                mask[i] = False
                if ch == "\\" and i + 1 < len(line):
                    mask[i + 1] = False
                    i += 2
                    continue
                if ch == '"':
                    in_string = False
                i += 1
                continue
            if ch == '"':
                mask[i] = False
                in_string = True
                i += 1
                continue
            if line.startswith("//", i):
                for j in range(i, len(line)):
                    mask[j] = False
                break
            if line.startswith("/*", i):
                mask[i] = mask[i + 1] = False
                self.in_block_comment = True
                i += 2
                continue
            i += 1
        return mask

    # -- macro expansion ---------------------------------------------------

    def _find_use(self, line: str, start: int) -> re.Match | None:
        saved = self.in_block_comment
        mask = self._code_mask(line)
        self.in_block_comment = saved
        for m in _USE_RE.finditer(line, start):
            if mask[m.start()] and m.group(1) in self.macros:
                return m
        return None

    def _parse_args(self, line: str, pos: int) -> tuple[list[str], int]:
        if pos >= len(line) or line[pos] != "(":
            raise PreprocessError("function-like macro use without arguments")
        depth = 0
        args: list[str] = []
        current: list[str] = []
        i = pos
        while i < len(line):
            ch = line[i]
            if ch == "(":
                depth += 1
                if depth > 1:
                    current.append(ch)
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    args.append("".join(current).strip())
                    return args, i + 1
                current.append(ch)
            elif ch == "," and depth == 1:
                args.append("".join(current).strip())
                current = []
            else:
                current.append(ch)
            i += 1
        raise PreprocessError("unterminated macro argument list")

    def _substitute_params(self, body: str, params: list[str], args: list[str]) -> str:
        if len(args) != len(params):
            raise PreprocessError(
                f"macro expects {len(params)} arguments, got {len(args)}"
            )
        table = dict(zip(params, args))

        def repl(m: re.Match) -> str:
            return table.get(m.group(0), m.group(0))

        return re.sub(_IDENT, repl, body)

    def expand_line(self, line: str) -> str:
        pos = 0
        while True:
            m = self._find_use(line, pos)
            if m is None:
                return line
            site_budget = MAX_REWRITES_PER_SITE
            site_start = m.start()
            while m is not None and m.start() == site_start:
                if site_budget == 0:
                    raise PreprocessError(
                        f"macro expansion exceeded {MAX_REWRITES_PER_SITE} rewrites "
                        f"(recursive `define of {m.group(1)}?)"
                    )
                site_budget -= 1
                macro = self.macros[m.group(1)]
                if macro.params is None:
                    replacement = macro.body
                    end = m.end()
                else:
                    args, end = self._parse_args(line, m.end())
                    replacement = self._substitute_params(macro.body, macro.params, args)
                line = line[: m.start()] + replacement + line[end:]
                m = self._find_use(line, site_start)
            pos = m.start() if m is not None else len(line)

    # -- conditional state -------------------------------------------------

    def _active(self) -> bool:
        return all(f.active and f.parent_active for f in self.cond_stack)

    # -- main driver ---------------------------------------------------------

    def process_file(self, path: Path, display_name: str, depth: int = 0) -> None:
        if depth > MAX_INCLUDE_DEPTH:
            raise PreprocessError(f"include depth exceeds {MAX_INCLUDE_DEPTH}: {path}")
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            raise PreprocessError(f"cannot read source {path}: {exc}") from exc
        self.process_text(text, display_name, file_dir=path.parent, depth=depth)

    def process_text(self, text: str, display_name: str, file_dir: Path | None, depth: int = 0) -> None:
        lines = text.splitlines()
        i = 0
        while i < len(lines):
            line = lines[i]
            lineno = i + 1
            i += 1
            # Directive lines join continuation lines before interpretation.
            directive = None
            if not self.in_block_comment:
                dm = _DIRECTIVE_RE.match(line)
                if dm:
                    directive = dm.group(1)
            if directive in ("define",) and line.rstrip().endswith("\\"):
                joined = [line.rstrip()[:-1]]
                while i < len(lines) and lines[i].rstrip().endswith("\\"):
                    joined.append(lines[i].rstrip()[:-1])
                    i += 1
                if i < len(lines):
                    joined.append(lines[i])
                    i += 1
                line = " ".join(joined)
                dm = _DIRECTIVE_RE.match(line)

            if directive is not None and directive in _CONSUMED:
                self._handle_directive(directive, dm.group(2), display_name, lineno, file_dir, depth)
                continue
            if not self._active():
                # Keep comment state coherent inside skipped regions.
                self._code_mask(line)
                continue
            expanded = self.expand_line(line)
            self._code_mask(expanded)  # advance block-comment state across lines
            self.out.append(OriginLine(expanded, display_name, lineno))

    def _handle_directive(
        self,
        name: str,
        rest: str,
        display_name: str,
        lineno: int,
        file_dir: Path | None,
        depth: int,
    ) -> None:
        rest = rest.strip()
        if name == "ifdef" or name == "ifndef":
            target = rest.split()[0] if rest else ""
            defined = target in self.macros
            want = defined if name == "ifdef" else not defined
            self.cond_stack.append(
                _CondFrame(active=want, taken=want, parent_active=self._active())
            )
            return
        if name == "elsif":
            if not self.cond_stack:
                raise PreprocessError(f"`elsif without `ifdef ({display_name}:{lineno})")
            frame = self.cond_stack[-1]
            target = rest.split()[0] if rest else ""
            match = (target in self.macros) and not frame.taken
            frame.active = match
            frame.taken = frame.taken or match
            return
        if name == "else":
            if not self.cond_stack:
                raise PreprocessError(f"`else without `ifdef ({display_name}:{lineno})")
            frame = self.cond_stack[-1]
            frame.active = not frame.taken
            frame.taken = True
            return
        if name == "endif":
            if not self.cond_stack:
                raise PreprocessError(f"`endif without `ifdef ({display_name}:{lineno})")
            self.cond_stack.pop()
            return
        if not self._active():
            return
        if name == "define":
            dm = _DEFINE_RE.match(rest)
            if not dm:
                raise PreprocessError(f"malformed `define ({display_name}:{lineno})")
            params = None
            if dm.group(2) is not None:
                params = [p.strip() for p in dm.group(3).split(",") if p.strip()]
            body = dm.group(4).strip()
            self.macros[dm.group(1)] = Macro(dm.group(1), params, body)
            return
        if name == "undef":
            self.macros.pop(rest.split()[0] if rest else "", None)
            return
        if name == "include":
            m = re.match(r'"([^"]+)"', rest)
            if not m:
                raise PreprocessError(f"malformed `include ({display_name}:{lineno})")
            target = m.group(1)
            for base in ([file_dir] if file_dir else []) + self.search_dirs:
                cand = base / target
                if cand.is_file():
                    self.process_file(cand, target, depth + 1)
                    return
            raise PreprocessError(f"include target not found: {target} ({display_name}:{lineno})")


def preprocess_sources(
    sources: list[tuple[str, str, Path | None]], search_dirs: list[Path] | None = None
) -> tuple[str, list[tuple[int, str, int]]]:
    """Expand a list of (display_name, text, file_dir) units into merged text."""
    expander = _Expander(search_dirs or [])
    for display_name, text, file_dir in sources:
        expander.process_text(text, display_name, file_dir)
    if expander.cond_stack:
        raise PreprocessError("unterminated conditional directive at end of input")
    merged = "".join(line.text + "\n" for line in expander.out)
    origin = [(n + 1, line.src_file, line.src_line) for n, line in enumerate(expander.out)]
    return merged, origin


def preprocess_text(text: str, display_name: str = "<text>") -> str:
    """Expand a single free-standing text (no include search path)."""
    merged, _ = preprocess_sources([(display_name, text, None)])
    return merged


def preprocess_project(record: ProjectRecord) -> MergedDesign:
    """Concatenate the manifest-listed sources in order and expand directives."""
    if record.manifest is None:
        raise PreprocessError(f"{record.project_id}: no manifest")
    pdir = record.project_dir
    units: list[tuple[str, str, Path | None]] = []
    for entry in record.manifest.source_files:
        path = resolve_source(pdir, entry)
        if path is None:
            raise PreprocessError(f"{record.project_id}: source not found: {entry}")
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            raise PreprocessError(f"{record.project_id}: cannot read {entry}: {exc}") from exc
        units.append((entry, text, path.parent))
    expander = _Expander(search_dirs=[pdir / "src"])
    for display_name, text, file_dir in units:
        expander.process_text(text, display_name, file_dir)
    if expander.cond_stack:
        raise PreprocessError(f"{record.project_id}: unterminated conditional directive")
    merged = "".join(line.text + "\n" for line in expander.out)
    origin = [(n + 1, line.src_file, line.src_line) for n, line in enumerate(expander.out)]
    return MergedDesign(
        project_id=record.project_id,
        shuttle=record.shuttle,
        source=merged,
        origin_map=origin,
    )


def write_merged(design: MergedDesign, out_dir: Path) -> tuple[Path, Path]:
    """Emit `<project_id>.merged.v` and its tab-separated origin-map sidecar."""
    out_dir.mkdir(parents=True, exist_ok=True)
    merged_path = out_dir / f"{design.project_id}.merged.v"
    map_path = out_dir / f"{design.project_id}.origin.tsv"
    merged_path.write_text(design.source, encoding="utf-8")
    map_path.write_text(
        "".join(f"{n}\t{f}\t{l}\n" for n, f, l in design.origin_map), encoding="utf-8"
    )
    return merged_path, map_path
