"""Monomorphization and type checking."""

from .checker import (
    check_basis, check_expression, check_measure, check_program, check_translation,
)
from .monomorphize import BitsValue, FuncRef, IntValue, monomorphize

__all__ = [
    "BitsValue", "FuncRef", "IntValue", "check_basis", "check_expression", "check_measure",
    "check_program", "check_translation", "monomorphize",
]
