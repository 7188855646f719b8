"""CSV and JSONL serialisation of verification records."""
from __future__ import annotations

import csv
import io
import json
import math

from .verify import VerificationRecord

FIELDS = ("scenario", "check", "t", "lhs", "rhs", "bound", "margin", "tolerance",
          "status", "seed", "wall_ms")
CSV_HEADER = ",".join(FIELDS)
_FLOATS = ("t", "lhs", "rhs", "bound", "margin", "tolerance", "wall_ms")


def fmt_float(x) -> str:
    """17 significant digits in scientific notation; ``inf``, ``-inf``, ``nan`` spelled out."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".16e")


def parse_float(text):
    if text == "":
        return None
    return float(text)


def _row(rec: VerificationRecord, timing: bool):
    out = []
    for name in FIELDS:
        v = getattr(rec, name)
        if name == "wall_ms" and not timing:
            v = math.nan
        if name in _FLOATS:
            out.append(fmt_float(v))
        elif name == "seed":
            out.append("" if v is None else str(int(v)))
        else:
            out.append(str(v))
    return out


def to_csv(records, timing=False) -> str:
    """CSV text.  Without ``timing`` the ``wall_ms`` column is ``nan`` so output is reproducible."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in records:
        w.writerow(_row(r, timing))
    return buf.getvalue()


def to_jsonl(records, timing=False) -> str:
    """One JSON object per line, fields in CSV order.

    Finite numbers keep the CSV spelling; non-finite ones are the strings
    ``"inf"``, ``"-inf"`` and ``"nan"``; absent ``t`` or ``seed`` are ``null``.
    """
    lines = []
    for r in records:
        parts = []
        for name, text in zip(FIELDS, _row(r, timing)):
            if name in _FLOATS or name == "seed":
                if text == "":
                    val = "null"
                elif text in ("inf", "-inf", "nan"):
                    val = json.dumps(text)
                else:
                    val = text
            else:
                val = json.dumps(text)
            parts.append(f"{json.dumps(name)}: {val}")
        lines.append("{" + ", ".join(parts) + "}\n")
    return "".join(lines)


def render(records, fmt="csv", timing=False) -> str:
    if fmt == "csv":
        return to_csv(records, timing)
    if fmt == "jsonl":
        return to_jsonl(records, timing)
    raise ValueError(f"unknown output format {fmt!r}")


def read_csv(text) -> list[VerificationRecord]:
    """Parse CSV text produced by :func:`to_csv`."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or ",".join(rows[0]) != CSV_HEADER:
        raise ValueError("not a verification report: header mismatch")
    out = []
    for row in rows[1:]:
        d = dict(zip(FIELDS, row))
        out.append(VerificationRecord(
            d["scenario"], d["check"], parse_float(d["t"]),
            *(float(d[k]) for k in ("lhs", "rhs", "bound", "margin", "tolerance")),
            d["status"], None if d["seed"] == "" else int(d["seed"]), float(d["wall_ms"]),
        ))
    return out
