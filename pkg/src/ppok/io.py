"""CSV and JSON serialisation of paths, pmf tables, ruin surfaces and reports.

Floats are written with ``repr`` so files round-trip exactly and identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

PATH_HEADER = ("t", "value", "path_id")
RUIN_HEADER = ("u", "y", "G", "stderr")
PMF_HEADER = ("n", "pmf", "stderr")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def _clean(obj):
    """Replace non-finite floats (invalid in strict JSON) by strings."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return _cell(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _clean(obj.item())
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def paths_csv(rows: Iterable[tuple]) -> str:
    return to_csv(PATH_HEADER, rows)


def paths_json(rows: Iterable[tuple]) -> str:
    by_id: dict[int, dict] = {}
    for t, v, pid in rows:
        d = by_id.setdefault(int(pid), {"path_id": int(pid), "t": [], "value": []})
        d["t"].append(float(t))
        d["value"].append(int(v) if float(v).is_integer() else float(v))
    return to_json({"paths": [by_id[k] for k in sorted(by_id)]})


def ruin_csv(rows: Iterable[tuple]) -> str:
    return to_csv(RUIN_HEADER, rows)


def write_text(text: str, out: str | Path | None) -> None:
    """Write to ``out``; ``None`` or ``"-"`` means standard output."""
    if out is None or str(out) == "-":
        import sys

        sys.stdout.write(text)
        return
    p = Path(out)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
