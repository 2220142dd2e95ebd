"""Project discovery and structural filtering of a corpus directory tree.

A corpus root holds one directory per project, each expected to carry
``src/`` with RTL sources, ``test/`` with at least one testbench, a
Makefile, and an ``info.yaml`` manifest naming the top module and its
source files.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import CorpusError, ManifestError

RTL_SUFFIXES = (".v", ".sv", ".vh", ".svh")
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*\Z")


@dataclass(frozen=True)
class ShuttleId:
    """A corpus release tag with its temporal order (lower ordinal = older)."""

    name: str
    ordinal: int

    def sort_key(self):
        return (self.ordinal, self.name)


@dataclass
class ProjectManifest:
    top_module: str
    source_files: list[str]
    extra: dict[str, str] = field(default_factory=dict)

    def is_valid(self) -> bool:
        return bool(IDENT_RE.match(self.top_module or "")) and bool(self.source_files)


@dataclass
class ProjectRecord:
    project_id: str
    shuttle: ShuttleId
    manifest: ProjectManifest | None
    src_files: list[str]
    test_files: list[str]
    makefile_present: bool
    project_dir: Path = field(compare=False, repr=False, default=None)
    scan_error: str | None = None


class RejectReason(Enum):
    SRC_DIR = "src-dir"
    TEST_DIR = "test-dir"
    MAKEFILE = "makefile"
    MANIFEST = "manifest"
    UNRESOLVED_SOURCE = "unresolved-source"


@dataclass(frozen=True)
class FilterResult:
    accepted: bool
    reason: RejectReason | None = None

    @staticmethod
    def accept() -> "FilterResult":
        return FilterResult(True, None)

    @staticmethod
    def reject(reason: RejectReason) -> "FilterResult":
        return FilterResult(False, reason)


# ---------------------------------------------------------------------------
# Manifest parsing: a flat subset of YAML.  Scalars, inline lists, bulleted
# string lists, and one level of sectioning (flattened) are enough for the
# manifests in the corpora we ingest; anything fancier is rejected.
# ---------------------------------------------------------------------------

_KEY_RE = re.compile(r"([A-Za-z0-9_.\-]+)\s*:(.*)$")


def _strip_comment(line: str) -> str:
    out = []
    in_single = in_double = False
    for ch in line:
        if ch == "'" and not in_double:
            in_single = not in_single
        elif ch == '"' and not in_single:
            in_double = not in_double
        elif ch == "#" and not in_single and not in_double:
            break
        out.append(ch)
    return "".join(out)


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
        return value[1:-1]
    return value


def _indent_of(line: str) -> int:
    return len(line) - len(line.lstrip(" "))


def parse_flat_yaml(text: str) -> dict[str, object]:
    """Parse the flat manifest subset into a {key: str | list[str]} map.

    Nested sections are flattened (their keys promoted to the top level);
    block scalars (``|``/``>``) are kept verbatim as a single string.
    """
    data: dict[str, object] = {}
    lines = text.splitlines()
    i = 0
    pending_list: str | None = None
    while i < len(lines):
        raw = lines[i]
        i += 1
        line = _strip_comment(raw)
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("- ") or stripped == "-":
            if pending_list is None:
                raise ManifestError(f"list item without a key: {raw!r}")
            item = _unquote(stripped[1:].strip())
            data[pending_list].append(item)
            continue
        m = _KEY_RE.match(stripped)
        if not m:
            raise ManifestError(f"unparsable manifest line: {raw!r}")
        key, value = m.group(1), m.group(2).strip()
        pending_list = None
        if value in ("|", ">", "|-", ">-"):
            base_indent = _indent_of(line)
            block: list[str] = []
            while i < len(lines):
                nxt = lines[i]
                if nxt.strip() and _indent_of(nxt) <= base_indent:
                    break
                block.append(nxt.strip())
                i += 1
            data[key] = "\n".join(block).strip()
        elif value == "":
            # Either a list opener or a section header; decided by the next
            # content line.  Sections are flattened, so the header vanishes.
            j = i
            while j < len(lines) and not _strip_comment(lines[j]).strip():
                j += 1
            if j < len(lines) and _strip_comment(lines[j]).strip().startswith("-"):
                data[key] = []
                pending_list = key
        elif value.startswith("[") and value.endswith("]"):
            inner = value[1:-1].strip()
            data[key] = [_unquote(p) for p in inner.split(",") if p.strip()] if inner else []
        else:
            data[key] = _unquote(value)
    return data


def parse_manifest(text: str) -> ProjectManifest:
    data = parse_flat_yaml(text)
    top = data.pop("top_module", "")
    sources = data.pop("source_files", [])
    if isinstance(sources, str):
        sources = [sources]
    extra = {}
    for key, value in data.items():
        extra[key] = ", ".join(value) if isinstance(value, list) else str(value)
    manifest = ProjectManifest(top_module=str(top), source_files=list(sources), extra=extra)
    if not manifest.is_valid():
        raise ManifestError(
            "manifest invalid: requires a nonempty top_module identifier and source_files"
        )
    return manifest


# ---------------------------------------------------------------------------
# Scanning and filtering
# ---------------------------------------------------------------------------


def _rtl_files(src_dir: Path) -> list[str]:
    if not src_dir.is_dir():
        return []
    return sorted(
        f"src/{p.name}" for p in src_dir.iterdir() if p.is_file() and p.suffix in RTL_SUFFIXES
    )


def _testbench_like(name: str) -> bool:
    low = name.lower()
    return (
        low.startswith("tb")
        or low.startswith("test")
        or low.endswith(".py")
        or low.endswith(".v")
        or low.endswith(".sv")
    )


def resolve_source(project_dir: Path, entry: str) -> Path | None:
    """Locate a manifest source entry under src/ first, then the project root."""
    for cand in (project_dir / "src" / entry, project_dir / entry):
        if cand.is_file():
            return cand
    return None


def scan_project(project_dir: Path, shuttle: ShuttleId) -> ProjectRecord:
    project_id = project_dir.name
    manifest = None
    scan_error = None
    manifest_path = project_dir / "info.yaml"
    try:
        if manifest_path.is_file():
            manifest = parse_manifest(manifest_path.read_text(encoding="utf-8", errors="replace"))
        else:
            scan_error = "manifest-missing"
    except (OSError, ManifestError) as exc:
        scan_error = f"manifest-unreadable: {exc}"

    try:
        if manifest is not None:
            src_files = []
            for entry in manifest.source_files:
                resolved = resolve_source(project_dir, entry)
                src_files.append(
                    str(resolved.relative_to(project_dir)) if resolved else f"src/{entry}"
                )
        else:
            src_files = _rtl_files(project_dir / "src")
        test_dir = project_dir / "test"
        test_files = (
            sorted(f"test/{p.name}" for p in test_dir.iterdir() if p.is_file())
            if test_dir.is_dir()
            else []
        )
        makefile_present = any(
            (project_dir / rel).is_file()
            for rel in ("Makefile", "makefile", "test/Makefile", "test/makefile")
        )
    except OSError as exc:
        scan_error = scan_error or f"unreadable: {exc}"
        src_files, test_files, makefile_present = [], [], False

    return ProjectRecord(
        project_id=project_id,
        shuttle=shuttle,
        manifest=manifest,
        src_files=src_files,
        test_files=test_files,
        makefile_present=makefile_present,
        project_dir=project_dir,
        scan_error=scan_error,
    )


def scan_corpus(root: Path | str, shuttle: ShuttleId) -> list[ProjectRecord]:
    """One record per immediate project directory, sorted by project_id."""
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"corpus root not readable: {root}")
    try:
        dirs = sorted((p for p in root.iterdir() if p.is_dir()), key=lambda p: p.name)
    except OSError as exc:
        raise CorpusError(f"corpus root not readable: {root}: {exc}") from exc
    return [scan_project(d, shuttle) for d in dirs]


def filter_project(record: ProjectRecord) -> FilterResult:
    """Apply the five structural conditions in their fixed rejection order."""
    pdir = record.project_dir
    if pdir is None or not _rtl_files(pdir / "src"):
        return FilterResult.reject(RejectReason.SRC_DIR)
    test_dir = pdir / "test"
    has_testbench = test_dir.is_dir() and any(
        p.is_file() and _testbench_like(p.name) for p in test_dir.iterdir()
    )
    if not has_testbench:
        return FilterResult.reject(RejectReason.TEST_DIR)
    if not record.makefile_present:
        return FilterResult.reject(RejectReason.MAKEFILE)
    if record.manifest is None or not record.manifest.is_valid():
        return FilterResult.reject(RejectReason.MANIFEST)
    for entry in record.manifest.source_files:
        if resolve_source(pdir, entry) is None:
            return FilterResult.reject(RejectReason.UNRESOLVED_SOURCE)
    return FilterResult.accept()


def record_to_json(record: ProjectRecord, verdict: FilterResult) -> str:
    payload = {
        "project_id": record.project_id,
        "shuttle": record.shuttle.name,
        "accepted": verdict.accepted,
        "reject_reason": verdict.reason.value if verdict.reason else None,
        "src_files": record.src_files,
        "test_files": record.test_files,
    }
    return json.dumps(payload, sort_keys=True)


def write_projects_jsonl(path: Path, rows: list[str]) -> None:
    path.write_text("".join(row + "\n" for row in rows), encoding="utf-8")
