"""Tokenizer for the Verilog subset, tracking byte offsets for spans."""
from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass

from ..errors import VerilogSyntaxError

KEYWORDS = frozenset(
    """module endmodule input output inout wire reg assign always posedge negedge
    or begin end if else case casez casex endcase default parameter localparam
    signed integer initial generate endgenerate genvar function endfunction task
    endtask for while repeat forever specify endspecify tri supply0 supply1
    real time event wand wor trireg deassign force release wait disable fork
    join defparam""".split()
)

# Longest match first.
_OPERATORS = [
    "<<<", ">>>", "===", "!==",
    "<=", ">=", "==", "!=", "<<", ">>", "&&", "||", "~^", "^~", "~&", "~|",
    "+", "-", "*", "/", "%", "<", ">", "!", "~", "&", "|", "^", "?", ":",
    "(", ")", "[", "]", "{", "}", ",", ";", "=", ".", "@", "#",
]

_NUMBER_RE = re.compile(
    r"(?:(\d[\d_]*)?\s*'\s*[sS]?([bBoOdDhH])\s*([0-9a-fA-FxXzZ_?]+))|(\d[\d_]*)"
)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_SYSID_RE = re.compile(r"\$[A-Za-z_][A-Za-z0-9_$]*")
_WHITESPACE_RE = re.compile(r"\s+")


@dataclass
class Token:
    kind: str  # 'id', 'kw', 'num', 'str', or the operator text
    value: object
    pos: int
    end: int


@dataclass
class NumberValue:
    width: int | None  # None = unsized
    base: str  # 'b', 'o', 'd', 'h', or 'd' for plain integers
    digits: str  # raw digit text, underscores removed
    value: int | None  # None when x/z digits are present
    has_xz: bool


def _parse_number(m: re.Match) -> NumberValue:
    if m.group(4) is not None:
        digits = m.group(4).replace("_", "")
        return NumberValue(None, "d", digits, int(digits), False)
    width = int(m.group(1).replace("_", "")) if m.group(1) else None
    base = m.group(2).lower()
    digits = m.group(3).replace("_", "").lower()
    has_xz = any(c in "xz?" for c in digits)
    value = None
    if not has_xz:
        radix = {"b": 2, "o": 8, "d": 10, "h": 16}[base]
        value = int(digits, radix)
    return NumberValue(width, base, digits, value, has_xz)


class Lexer:
    def __init__(self, source: str):
        self.source = source
        self.tokens = self._scan()
        self._line_starts = [0] + [i + 1 for i, c in enumerate(source) if c == "\n"]

    def line_col(self, pos: int) -> tuple[int, int]:
        line = bisect_right(self._line_starts, pos)
        return line, pos - self._line_starts[line - 1] + 1

    def _error(self, message: str, pos: int):
        line, col = None, None
        starts = [0] + [i + 1 for i, c in enumerate(self.source) if c == "\n"]
        line = bisect_right(starts, pos)
        col = pos - starts[line - 1] + 1
        raise VerilogSyntaxError(message, pos=pos, line=line, col=col)

    def _scan(self) -> list[Token]:
        src = self.source
        tokens: list[Token] = []
        i = 0
        n = len(src)
        while i < n:
            ch = src[i]
            if ch in " \t\r\n":
                i = _WHITESPACE_RE.match(src, i).end()
                continue
            if src.startswith("//", i):
                j = src.find("\n", i)
                i = n if j < 0 else j + 1
                continue
            if src.startswith("/*", i):
                j = src.find("*/", i + 2)
                if j < 0:
                    self._error("unterminated block comment", i)
                i = j + 2
                continue
            if ch == '"':
                j = i + 1
                while j < n and src[j] != '"':
                    j += 2 if src[j] == "\\" else 1
                if j >= n:
                    self._error("unterminated string", i)
                tokens.append(Token("str", src[i + 1 : j], i, j + 1))
                i = j + 1
                continue
            if ch == "`":
                # Residual compiler directives (`timescale, `default_nettype)
                # are skipped to end of line; expansion happened upstream.
                j = src.find("\n", i)
                i = n if j < 0 else j + 1
                continue
            m = _IDENT_RE.match(src, i)
            if m:
                word = m.group(0)
                kind = "kw" if word in KEYWORDS else "id"
                tokens.append(Token(kind, word, i, m.end()))
                i = m.end()
                continue
            m = _SYSID_RE.match(src, i)
            if m:
                tokens.append(Token("sysid", m.group(0), i, m.end()))
                i = m.end()
                continue
            m = _NUMBER_RE.match(src, i)
            if m:
                tokens.append(Token("num", _parse_number(m), i, m.end()))
                i = m.end()
                continue
            for op in _OPERATORS:
                if src.startswith(op, i):
                    tokens.append(Token(op, op, i, i + len(op)))
                    i += len(op)
                    break
            else:
                self._error(f"unexpected character {ch!r}", i)
        tokens.append(Token("eof", None, n, n))
        return tokens
