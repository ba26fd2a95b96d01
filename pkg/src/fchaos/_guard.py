"""Tensor size budgeting.

Every operation that is about to materialize a dense tensor calls
:func:`check_entries` first, so an over-budget request fails with a sizing
report instead of an allocation error deep inside numpy.  The budget is read
from the environment on every call, which lets long-running processes tighten
or relax it between experiments.
"""

import os

__all__ = [
    "TensorBudgetError",
    "check_entries",
    "current_budget",
    "note_entries",
    "peak_entries",
    "reset_peak",
    "DEFAULT_MAX_ENTRIES",
]

DEFAULT_MAX_ENTRIES = 2**26

_ENV_VAR = "FCHAOS_MAX_TENSOR_ENTRIES"

# Largest single tensor created since the last reset_peak().  Counts kernel
# value tensors at construction time, not transient einsum workspace.
_peak = 0


class TensorBudgetError(RuntimeError):
    """Raised before an operation would allocate past the entry budget."""


def _budget():
    raw = os.environ.get(_ENV_VAR)
    if raw is None:
        return DEFAULT_MAX_ENTRIES
    try:
        value = int(raw)
    except ValueError:
        raise TensorBudgetError(
            f"{_ENV_VAR}={raw!r} is not an integer"
        ) from None
    if value <= 0:
        raise TensorBudgetError(f"{_ENV_VAR} must be positive, got {value}")
    return value


def current_budget():
    """The entry budget in force right now (env override or default)."""
    return _budget()


def check_entries(entries, context=""):
    """Fail if a planned tensor of ``entries`` float64 cells is over budget."""
    limit = _budget()
    if entries > limit:
        where = f" in {context}" if context else ""
        raise TensorBudgetError(
            f"operation{where} would allocate {entries} tensor entries "
            f"({8 * entries / 2**20:.1f} MiB); budget is {limit} "
            f"(set {_ENV_VAR} to raise it)"
        )


def note_entries(entries):
    """Record a constructed tensor's size in the peak counter."""
    global _peak
    if entries > _peak:
        _peak = entries


def peak_entries():
    """Largest kernel tensor constructed since the last reset."""
    return _peak


def reset_peak():
    global _peak
    _peak = 0
