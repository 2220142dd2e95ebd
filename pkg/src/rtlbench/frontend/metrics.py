"""Source-level statistics: LOC, keyword-complexity score, assertion counts."""
from __future__ import annotations

import re
from pathlib import Path

DEFAULT_COMPLEXITY_KEYWORDS = ("always", "assign", "generate", "wire", "reg")


def _blank_comments(text: str, line_comment: str = "//", block_comments: bool = True) -> str:
    """Replace comment and string contents with spaces, preserving newlines."""
    out = list(text)
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            for k in range(i, min(j + 1, n)):
                if out[k] != "\n":
                    out[k] = " "
            i = j + 1
        elif ch == "'" and line_comment == "#":
            # python-style single-quoted strings in cocotb tests
            j = i + 1
            while j < n and text[j] != "'":
                j += 2 if text[j] == "\\" else 1
            for k in range(i, min(j + 1, n)):
                if out[k] != "\n":
                    out[k] = " "
            i = j + 1
        elif text.startswith(line_comment, i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            for k in range(i, j):
                out[k] = " "
            i = j
        elif block_comments and text.startswith("/*", i):
            j = text.find("*/", i + 2)
            j = n if j < 0 else j + 2
            for k in range(i, j):
                if out[k] != "\n":
                    out[k] = " "
            i = j
        else:
            i += 1
    return "".join(out)


def loc_count(module_source: str) -> int:
    """Lines that are neither blank nor comment-only."""
    blanked = _blank_comments(module_source)
    return sum(1 for line in blanked.splitlines() if line.strip())


def _count_word(text: str, word: str) -> int:
    return len(re.findall(rf"(?<![A-Za-z0-9_$]){re.escape(word)}(?![A-Za-z0-9_$])", text))


def complexity_score(design_source: str, keywords=DEFAULT_COMPLEXITY_KEYWORDS) -> int:
    """Total standalone-token occurrences of the configured keyword set."""
    blanked = _blank_comments(design_source)
    return sum(_count_word(blanked, kw) for kw in keywords)


def count_assertions(test_files: list[Path | str]) -> int:
    """Standalone-token `assert` occurrences across a project's test files.

    Unreadable files are recorded as zero rather than raised.
    """
    total = 0
    for path in test_files:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError:
            continue
        if path.suffix == ".py":
            blanked = _blank_comments(text, line_comment="#", block_comments=False)
        else:
            blanked = _blank_comments(text)
        total += _count_word(blanked, "assert")
    return total
