"""Run reports (versioned JSON), CSV iteration series and atomic file writes.

Everything outside the "timing" block is a deterministic function of the
configuration, so two runs of the same config differ only there.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import os
import tempfile
from typing import Any

import numpy as np

SCHEMA = "fnls-report/1"
SERIES_HEADER = ("iteration", "reduced_value", "tangent_res", "pohozaev_res", "lambda")


def to_plain(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def make_report(command: str, config: dict, body: dict, verdicts: list[dict], timing: dict | None = None) -> dict:
    """Assemble a report; the status summarizes the verdict list."""
    failed = [v["name"] for v in verdicts if v.get("passed") is False]
    timing = dict(timing or {})
    timing.setdefault("finished_at", _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    return {
        "schema": SCHEMA,
        "command": command,
        "config": config,
        "results": body,
        "verdicts": verdicts,
        "status": "fail" if failed else "pass",
        "failed": failed,
        "timing": timing,
    }


def dumps_report(report: dict) -> str:
    return json.dumps(to_plain(report), sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path: str | os.PathLike) -> None:
    atomic_write_text(path, dumps_report(report))


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}


def verdict(name: str, passed: bool | None, **numbers) -> dict:
    return {"name": name, "passed": None if passed is None else bool(passed), **numbers}


def series_csv(history) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SERIES_HEADER)
    for row in history:
        it, *vals = row
        writer.writerow([int(it)] + [repr(float(v)) for v in vals])
    return buf.getvalue()


def write_series(history, path: str | os.PathLike) -> None:
    atomic_write_text(path, series_csv(history))


def read_series(path: str | os.PathLike) -> list[tuple]:
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != SERIES_HEADER:
        raise ValueError(f"unexpected series header {rows[0]}")
    return [(int(r[0]),) + tuple(float(x) for x in r[1:]) for r in rows[1:]]
