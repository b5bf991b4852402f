from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class SourcePos:
    """A location in a kernel-language source file (1-based line and column)."""

    file: str
    line: int
    column: int
    span: int = 0

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid source position {self.line}:{self.column}")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"

    def to_json(self):
        return {"file": self.file, "line": self.line, "column": self.column, "span": self.span}
