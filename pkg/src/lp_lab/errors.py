"""Exception types and enumeration caps shared across the package."""

from __future__ import annotations

import math
import os

WORK_CAP_ENV = "LP_LAB_WORK_CAP"


class LpLabError(Exception):
    """Base class for all package errors."""


class StructuralError(LpLabError, ValueError):
    """Inputs do not have the shape or structure an operation requires."""


class CapacityError(LpLabError):
    """An exhaustive enumeration would exceed its work cap."""

    def __init__(self, cap_name: str, cap: int, requested: int | float, hint: str = ""):
        self.cap_name = cap_name
        self.cap = cap
        self.requested = requested
        msg = f"{cap_name} cap exceeded: requested {requested}, cap {cap}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)


class NumericError(LpLabError, ArithmeticError):
    """A numerical routine failed to converge or bracket a root."""


class ParseError(LpLabError, ValueError):
    """Malformed graph file. ``line`` is 1-based."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def work_cap(default: int) -> int:
    """Return the enumeration cap, honouring the ``LP_LAB_WORK_CAP`` override.

    The override is a raw item count; results may be slow when it is raised.
    """
    raw = os.environ.get(WORK_CAP_ENV)
    if raw:
        return int(float(raw))
    return default


def log2_cap(default_bits: int) -> int:
    """Cap expressed as a number of bits (``m`` for 2**m subset enumerations)."""
    raw = os.environ.get(WORK_CAP_ENV)
    if raw:
        return max(1, int(math.log2(float(raw))))
    return default_bits


class InvariantError(LpLabError, AssertionError):
    """An internal postcondition that the theory guarantees was violated."""
