"""Rule-based ground truth for real CLF/ELF access logs.

Lines are scanned once, left to right, without backtracking.  The user agent
of an ELF line runs up to the final quote of the line, so stray quotes inside
it are tolerated.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

from .fields import AnnotatedRecord


class KnownFormat(enum.Enum):
    CLF = "clf"
    ELF = "elf"
    QUOTED_ELF = "quoted-elf"


class LogParseError(ValueError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"at character {index}: {reason}")
        self.index = index
        self.reason = reason


class _Scanner:
    def __init__(self, line: str, start: int = 0, stop: int | None = None):
        self.line = line
        self.pos = start
        self.stop = len(line) if stop is None else stop
        self.ann: list[str] = []

    def fail(self, reason: str, index: int | None = None):
        raise LogParseError(self.pos if index is None else index, reason)

    def separator(self) -> None:
        if self.pos >= self.stop or self.line[self.pos] != " ":
            self.fail("expected a field separator")
        self.ann.append("_")
        self.pos += 1

    def token(self, symbol: str, name: str, last: bool = False) -> str:
        end = self.stop if last else self.line.find(" ", self.pos, self.stop)
        if end < 0:
            self.fail(f"{name} field is not followed by a separator")
        if end == self.pos:
            self.fail(f"empty {name} field")
        if last and " " in self.line[self.pos:end]:
            self.fail(f"unexpected space in {name} field", self.line.index(" ", self.pos, end))
        text = self.line[self.pos:end]
        self.ann.append(symbol * len(text))
        self.pos = end
        return text

    def wrapped(self, symbol: str, name: str, left: str, right: str, to_end: bool = False) -> None:
        if self.pos >= self.stop or self.line[self.pos] != left:
            self.fail(f"{name} field should open with {left!r}")
        if to_end:
            end = self.stop - 1
            if end <= self.pos or self.line[end] != right:
                self.fail(f"{name} field should close with {right!r} at end of record", self.stop - 1)
        else:
            end = self.line.find(right, self.pos + 1, self.stop)
            if end < 0:
                self.fail(f"unterminated {name} field")
        self.ann.append(left + symbol * (end - self.pos - 1) + right)
        self.pos = end + 1


def _scan_common(sc: _Scanner, elf: bool) -> None:
    sc.token("h", "host")
    sc.separator()
    sc.token("l", "logname")
    sc.separator()
    sc.token("u", "user")
    sc.separator()
    sc.wrapped("t", "time", "[", "]")
    sc.separator()
    sc.wrapped("r", "request", '"', '"')
    sc.separator()
    start = sc.pos
    status = sc.token("s", "status")
    if len(status) != 3 or not all(c in "0123456789" for c in status):
        sc.fail("status must be three digits", start)
    sc.separator()
    start = sc.pos
    size = sc.token("b", "bytes", last=not elf)
    if size != "-" and not (size.isascii() and size.isdigit()):
        sc.fail("bytes must be '-' or a decimal number", start)
    if elf:
        sc.separator()
        sc.wrapped("R", "referrer", '"', '"')
        sc.separator()
        sc.wrapped("i", "user agent", '"', '"', to_end=True)
    if sc.pos != sc.stop:
        sc.fail("trailing characters after the last field")


def annotate_line(line: str, fmt: KnownFormat | str) -> AnnotatedRecord:
    """Annotate one CLF, ELF or quote-wrapped ELF line; raise LogParseError on mismatch."""
    fmt = KnownFormat(fmt)
    for bad in "\r\n":
        if bad in line:
            raise LogParseError(line.index(bad), "line contains a newline character")
    if fmt is KnownFormat.QUOTED_ELF:
        if len(line) < 2 or line[0] != '"' or line[-1] != '"':
            raise LogParseError(0 if not line.startswith('"') else len(line) - 1,
                                "quoted record must begin and end with '\"'")
        sc = _Scanner(line, 1, len(line) - 1)
        _scan_common(sc, elf=True)
        return AnnotatedRecord(line, '"' + "".join(sc.ann) + '"')
    sc = _Scanner(line)
    _scan_common(sc, elf=fmt is KnownFormat.ELF)
    return AnnotatedRecord(line, "".join(sc.ann))


@dataclass(frozen=True)
class Reject:
    line_number: int
    reason: str


def annotate_file(path: str | Path, fmt: KnownFormat | str) -> tuple[list[AnnotatedRecord], list[Reject]]:
    """Annotate every line of a log file; failing lines become rejects (1-based line numbers)."""
    with open(path, encoding="utf-8", errors="replace", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    records, rejects = [], []
    for number, line in enumerate(lines, 1):
        if line.endswith("\r"):
            line = line[:-1]
        try:
            records.append(annotate_line(line, fmt))
        except LogParseError as exc:
            rejects.append(Reject(number, str(exc)))
    return records, rejects


def write_rejects(rejects: list[Reject], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["line_number", "reason"])
        for rej in rejects:
            writer.writerow([rej.line_number, rej.reason])
