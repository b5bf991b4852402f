"""Kernel-language frontend: parsing, pretty printing and lowering to the IR."""

from .lower import lower
from .parser import parse_source
from .printer import to_source

__all__ = ["lower", "parse_source", "to_source"]
