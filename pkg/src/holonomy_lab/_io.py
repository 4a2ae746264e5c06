"""Deterministic text output: JSON with 17 significant digits and CSV rows."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        # not representable in JSON numbers
        return json.dumps(str(x))
    return "%.17g" % x


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written as %.17g; key order is preserved."""
    out: list[str] = []
    _write(obj, out, indent, 0)
    return "".join(out) + "\n"


def _write(obj, out: list[str], indent: int, level: int) -> None:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj))
    elif isinstance(obj, complex):
        _write([obj.real, obj.imag], out, indent, level)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            out.append(pad + json.dumps(str(key)) + ": ")
            _write(val, out, indent, level + 1)
            if k < len(obj) - 1:
                out.append(",")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        # short numeric lists (pairs, small vectors) stay on one line
        if len(obj) <= 4 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            out.append("[" + ", ".join(fmt_float(v) if isinstance(v, float) else str(v) for v in obj) + "]")
            return
        out.append("[")
        for k, val in enumerate(obj):
            out.append(pad)
            _write(val, out, indent, level + 1)
            if k < len(obj) - 1:
                out.append(",")
        out.append(end + "]")
    elif hasattr(obj, "tolist"):
        _write(obj.tolist(), out, indent, level)
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()
