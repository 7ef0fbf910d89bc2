"""Line-oriented sectioned key/value text format shared by chain and scenario files.

Lexical rules:

* ``#`` starts a comment that runs to the end of the line.
* A section header starts in column 1. Chain files use ``<kind> <name>``
  (e.g. ``joint shoulder``); scenario files use ``[<name>]``.
* Every other non-blank line is an indented ``key = value`` pair belonging to
  the most recent header.
* Numbers are decimal with an optional exponent; vectors are space-separated
  numbers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


class FormatError(ValueError):
    """Syntax or value error annotated with a 1-based line and column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {column}" if column is not None else "") + ": "
        super().__init__(where + message)


@dataclass
class Entry:
    key: str
    value: str
    line: int
    column: int  # column of the value text

    def error(self, message: str) -> FormatError:
        return FormatError(f"{self.key}: {message}", self.line, self.column)

    def number(self) -> float:
        if not _NUMBER.match(self.value):
            raise self.error(f"expected a number, got {self.value!r}")
        return float(self.value)

    def vector(self, size: int | tuple[int, ...]) -> tuple[float, ...]:
        parts = self.value.split()
        sizes = (size,) if isinstance(size, int) else size
        if len(parts) not in sizes:
            expected = " or ".join(str(s) for s in sizes)
            raise self.error(f"expected {expected} numbers, got {len(parts)}")
        out = []
        for p in parts:
            if not _NUMBER.match(p):
                raise self.error(f"expected a number, got {p!r}")
            out.append(float(p))
        return tuple(out)

    def boolean(self) -> bool:
        v = self.value.lower()
        if v in ("true", "yes", "on", "1"):
            return True
        if v in ("false", "no", "off", "0"):
            return False
        raise self.error(f"expected a boolean, got {self.value!r}")


@dataclass
class Section:
    kind: str
    name: str
    line: int
    entries: list[Entry] = field(default_factory=list)

    def get(self, key: str) -> Entry | None:
        for e in self.entries:
            if e.key == key:
                return e
        return None

    def keys(self) -> list[str]:
        return [e.key for e in self.entries]


def _strip_comment(raw: str) -> str:
    i = raw.find("#")
    return raw if i < 0 else raw[:i]


def parse_sections(text: str, bracketed: bool = False) -> list[Section]:
    """Split a document into sections of key/value entries.

    Args:
        text: Document contents.
        bracketed: Expect ``[name]`` headers (scenario files) instead of
            ``kind name`` headers (chain files).

    Raises:
        FormatError: On any malformed line, annotated with its position.
    """
    sections: list[Section] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw).rstrip()
        if not body.strip():
            continue
        if not body[0].isspace():
            sections.append(_parse_header(body, lineno, bracketed))
            continue
        if not sections:
            col = len(body) - len(body.lstrip()) + 1
            raise FormatError("key/value pair before any section header", lineno, col)
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise FormatError("expected 'key = value'", lineno, col)
        key_part, value_part = body.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        if not _NAME.match(key):
            raise FormatError(f"invalid key {key!r}", lineno, key_col)
        value = value_part.strip()
        value_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if not value:
            raise FormatError(f"{key}: missing value", lineno, value_col)
        sec = sections[-1]
        if sec.get(key) is not None:
            raise FormatError(f"duplicate key {key!r} in {sec.kind} {sec.name}", lineno, key_col)
        sec.entries.append(Entry(key, value, lineno, value_col))
    return sections


def _parse_header(body: str, lineno: int, bracketed: bool) -> Section:
    if bracketed:
        m = re.match(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$", body)
        if not m:
            raise FormatError(f"expected a '[section]' header, got {body!r}", lineno, 1)
        return Section(m.group(1), m.group(1), lineno)
    parts = body.split()
    if len(parts) != 2:
        raise FormatError(f"expected '<kind> <name>' header, got {body!r}", lineno, 1)
    kind, name = parts
    if not _NAME.match(name):
        raise FormatError(f"invalid name {name!r}", lineno, len(kind) + 2)
    return Section(kind, name, lineno)


def format_number(x: float) -> str:
    """Shortest text that parses back to exactly ``x``."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    if x == 0.0:
        return "0"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_vector(v) -> str:
    return " ".join(format_number(x) for x in v)
