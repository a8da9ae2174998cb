"""Verdict records and deterministic CSV/JSON writers."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence


@dataclass
class Verdict:
    check: str
    statistic: float
    bound: float
    sigma: float
    passed: bool

    def to_record(self) -> dict:
        return {
            "check": self.check,
            "statistic": _finite(self.statistic),
            "bound": _finite(self.bound),
            "sigma": _finite(self.sigma),
            "pass": bool(self.passed),
        }

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.check}: statistic={self.statistic:.6g} bound={self.bound:.6g} sigma={self.sigma:.3g}"


def _finite(x: float):
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _default(obj):
    if hasattr(obj, "to_record"):
        return obj.to_record()
    if hasattr(obj, "item"):
        return obj.item()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_default) + "\n"


def write_json(path: Path, data: Any) -> None:
    Path(path).write_text(dumps(data))


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()
