"""Experiment reports: a stable schema plus JSON and CSV rendering.

A report is a frozen record of one experiment run: the configuration it
echoed, the named values it computed, the freeness verdicts it reached,
and optionally a per-index trace table.  Renders are deterministic;
rerunning with the same configuration and seed reproduces every field
except ``runtime_ms``.

JSON is the default format and carries the whole report.  CSV is only
defined for reports that carry a trace table (column per name, row per
index) and is meant for spreadsheet inspection of sequence diagnostics.
"""

import csv
import io
import json
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional, Sequence, Tuple

from . import __version__

__all__ = [
    "Report",
    "verdict_entry",
    "failed_checks",
    "all_pass",
    "render_json",
    "render_csv",
    "save_report",
]


def _plain(x, path="value"):
    """Coerce to JSON-safe built-ins, unwrapping numpy scalars by duck typing."""
    if x is None or isinstance(x, str):
        return x
    if isinstance(x, bool):
        return bool(x)
    if isinstance(x, float):
        return float(x)
    if isinstance(x, int):
        return int(x)
    if isinstance(x, Mapping):
        return {str(k): _plain(v, f"{path}.{k}") for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v, f"{path}[{i}]") for i, v in enumerate(x)]
    item = getattr(x, "item", None)
    if callable(item):
        return _plain(x.item(), path)
    raise TypeError(f"{path} has unserializable type {type(x).__name__}")


def verdict_entry(name, verdict):
    """Flatten a freeness verdict into a named, JSON-safe mapping."""
    return {
        "name": str(name),
        "method": verdict.method,
        "is_free": bool(verdict.is_free),
        "witness": {k: float(v) for k, v in verdict.witness.items()},
        "tolerance": float(verdict.tolerance),
        "conclusive": bool(verdict.conclusive),
        "note": verdict.note,
    }


@dataclass(frozen=True)
class Report:
    """One experiment run.

    ``values`` holds named scalars and small arrays; keys starting with
    ``pass_`` are the boolean checks that decide the exit status.
    ``verdicts`` is a list of flattened freeness verdicts (see
    :func:`verdict_entry`).  ``trace`` is an optional column table
    (name to equal-length list) for CSV rendering.
    """

    experiment: str
    inputs: Mapping[str, object]
    values: Mapping[str, object]
    verdicts: Tuple[Mapping[str, object], ...] = ()
    trace: Optional[Mapping[str, Sequence]] = None
    runtime_ms: int = 0
    engine_version: str = __version__

    def __post_init__(self):
        object.__setattr__(self, "inputs", MappingProxyType(_plain(dict(self.inputs), "inputs")))
        object.__setattr__(self, "values", MappingProxyType(_plain(dict(self.values), "values")))
        object.__setattr__(
            self, "verdicts", tuple(_plain(dict(v), "verdicts") for v in self.verdicts)
        )
        if self.trace is not None:
            cols = _plain(dict(self.trace), "trace")
            lengths = {len(v) for v in cols.values()}
            if len(lengths) > 1:
                raise ValueError("trace columns must have equal length")
            object.__setattr__(self, "trace", MappingProxyType(cols))
        object.__setattr__(self, "runtime_ms", int(self.runtime_ms))


def failed_checks(report: Report):
    """Names of pass_ flags that are false, in key order."""
    return [k for k, v in report.values.items() if k.startswith("pass_") and not v]


def all_pass(report: Report) -> bool:
    return not failed_checks(report)


def render_json(report: Report) -> str:
    doc = {
        "experiment": report.experiment,
        "engine_version": report.engine_version,
        "inputs": dict(report.inputs),
        "values": dict(report.values),
        "verdicts": list(report.verdicts),
        "runtime_ms": report.runtime_ms,
    }
    if report.trace is not None:
        doc["trace"] = dict(report.trace)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_csv(report: Report) -> str:
    """Column table of the trace; errors when the report has none."""
    if report.trace is None:
        raise ValueError(
            f"experiment {report.experiment!r} produced no trace table; "
            "CSV output only applies to sequence experiments"
        )
    names = list(report.trace)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(names)
    rows = zip(*(report.trace[n] for n in names))
    writer.writerows(rows)
    return out.getvalue()


def save_report(report: Report, path, fmt: str = "json"):
    if fmt == "json":
        text = render_json(report)
    elif fmt == "csv":
        text = render_csv(report)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected json or csv")
    with open(path, "w") as fh:
        fh.write(text)
