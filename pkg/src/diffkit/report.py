"""Report container and its table/JSON renderings.

Both renderings format floats through :func:`format_float`, so a number
printed in a table is the same string as in the JSON.
"""

import json
import math
import os
from dataclasses import dataclass, field

__all__ = ["Report", "emit_report", "format_float", "to_json"]


@dataclass
class Report:
    command: str
    backends: list
    results: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    columns: tuple = ()
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {
            "command": self.command,
            "backends": list(self.backends),
            "results": list(self.results),
            "tolerances": dict(self.tolerances),
            "seed": self.seed,
        }


def format_float(x):
    """17 significant digits; non-finite values become ``null``.

    >>> format_float(0.1)
    '0.10000000000000001'
    """
    if not math.isfinite(x):
        return "null"
    text = "%.17g" % x
    if "." not in text and "e" not in text:
        text += ".0"
    return text


def _json(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return _quote(value)
    if isinstance(value, dict):
        return "{" + ", ".join(f"{_quote(str(k))}: {_json(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_json(v) for v in value) + "]"
    if hasattr(value, "tolist"):
        return _json(value.tolist())
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _quote(s):
    return json.dumps(s)


def to_json(report):
    return _json(report.as_dict())


def _cell(value):
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_cell(v) for v in value) + "]"
    if value is None:
        return "-"
    return str(value)


def _use_color(stream):
    if os.environ.get("DIFFKIT_NO_COLOR"):
        return False
    return hasattr(stream, "isatty") and stream.isatty()


_STYLES = {"PASS": "\x1b[32m", "FAIL": "\x1b[31m", "CONVERGED": "\x1b[32m"}


def to_table(report, color=False):
    columns = report.columns or (tuple(report.results[0]) if report.results else ())
    rows = [[_cell(r.get(c)) for c in columns] for r in report.results]
    widths = [max([len(c)] + [len(row[i]) for row in rows]) for i, c in enumerate(columns)]
    lines = [f"# {report.command}  backends: {', '.join(report.backends)}  seed: {report.seed}"]
    if report.tolerances:
        tol = ", ".join(f"{k}={format_float(v)}" for k, v in report.tolerances.items())
        lines.append(f"# tolerances: {tol}")
    if columns:
        lines.append("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip())
        lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        cells = []
        for text, w in zip(row, widths):
            padded = text.ljust(w)
            if color and text in _STYLES:
                padded = _STYLES[text] + padded + "\x1b[0m"
            cells.append(padded)
        lines.append("  ".join(cells).rstrip())
    if not rows:
        lines.append("(no results)")
    lines.extend(report.notes)
    return "\n".join(lines)


def emit_report(report, fmt="table", stream=None):
    """Render ``report`` as ``"table"`` or ``"json"`` text."""
    if fmt == "json":
        return to_json(report)
    if fmt == "table":
        return to_table(report, color=stream is not None and _use_color(stream))
    raise ValueError(f"unknown format {fmt!r}")
