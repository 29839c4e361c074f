"""Deterministic CSV / JSON writers for record lists.

Every file opens with a header naming the columns and the parameter set.
Floats are written with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

FORMATS = ("csv", "json")


def format_number(v: Any) -> str:
    """Text form of a scalar: %.17g for floats, plain for ints, bools and strings."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def _json_value(v: Any) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return format_number(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(v[k])}" for k in sorted(v)) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(str(v))


def render(rows: Sequence[dict], columns: Sequence[str], params: dict, fmt: str = "csv",
           summary: dict | None = None) -> str:
    """Serialise ``rows`` restricted to ``columns`` in the given order."""
    if fmt == "csv":
        lines = ["# params: " + _json_value(params)]
        if summary is not None:
            lines.append("# summary: " + _json_value(summary))
        lines.append(",".join(columns))
        lines += [",".join(format_number(r.get(c)) for c in columns) for r in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        head = [f'  "columns": {_json_value(list(columns))}', f'  "params": {_json_value(params)}']
        if summary is not None:
            head.append(f'  "summary": {_json_value(summary)}')
        body = ",\n".join("    [" + ", ".join(_json_value(r.get(c)) for c in columns) + "]" for r in rows)
        return "{\n" + ",\n".join(head) + ',\n  "records": [\n' + body + ("\n" if rows else "") + "  ]\n}\n"
    raise ValueError(f"unknown format {fmt!r}")


def write_records(rows, columns, params, path=None, fmt: str = "csv", summary: dict | None = None) -> None:
    """Write to ``path`` or to standard output when ``path`` is None or "-"."""
    text = render(rows, columns, params, fmt, summary)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
