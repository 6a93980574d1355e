"""Trace and summary writers.  Floats use 17 significant digits so replays compare exactly."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

from .dynamics import TraceRecord


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, float):
        return float(format(x, ".17g"))
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def atomic_write(path, text: str) -> None:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_columns(n_agents: int) -> list[str]:
    return ["t"] + [f"a{i}" for i in range(n_agents)] + ["psi", "potential", "estimation_error", "dist_to_ne"]


def trace_rows(trace: list[TraceRecord]) -> list[list]:
    return [
        [r.t, *r.actions, r.psi, r.potential, r.estimation_error, r.dist_to_ne]
        for r in trace
    ]


def trace_csv(trace: list[TraceRecord], config: dict) -> str:
    n = len(trace[0].actions) if trace else 0
    buf = io.StringIO()
    buf.write("# nearplay trace\n")
    buf.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_columns(n))
    for row in trace_rows(trace):
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def trace_json(trace: list[TraceRecord], config: dict) -> str:
    n = len(trace[0].actions) if trace else 0
    doc = {"config": config, "columns": trace_columns(n), "rows": trace_rows(trace)}
    return json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n"


def write_trace(path, trace: list[TraceRecord], config: dict, format: str = "csv") -> None:
    text = trace_csv(trace, config) if format == "csv" else trace_json(trace, config)
    atomic_write(path, text)


def matrix_csv(curves: list[list[float]], labels: list, config: dict | None = None) -> str:
    """Rows are time steps, columns are replications."""
    buf = io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"rep_{s}" for s in labels])
    for k in range(len(curves[0]) if curves else 0):
        w.writerow([k + 1] + [fmt(c[k]) for c in curves])
    return buf.getvalue()


def write_json(path, doc: dict) -> None:
    atomic_write(path, json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n")
