"""Artifact writers: canonical JSON, plot-data CSV, run directories.

Every run directory gets config-echo.json, results.json and one CSV per
data series; results.json embeds provenance (seed, build id, config hash)
and is byte-identical for a fixed (seed, config) at any worker count.
"""

from __future__ import annotations

import datetime
import json
import subprocess
from pathlib import Path

PLOTDATA_HEADER = "series,t,value,lo,hi"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def build_id() -> str:
    from . import __version__
    here = Path(__file__).resolve().parent
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"], cwd=here,
            capture_output=True, text=True, timeout=5)
        if rev.returncode == 0:
            return f"msbp-{__version__}+g{rev.stdout.strip()}"
    except Exception:
        pass
    return f"msbp-{__version__}"


def run_directory(base: str, kind: str, explicit: str = None) -> Path:
    """Explicit --out wins; otherwise a timestamped directory under base."""
    if explicit:
        path = Path(explicit)
    else:
        stamp = datetime.datetime.now(datetime.timezone.utc).strftime(
            "%Y%m%dT%H%M%SZ")
        path = Path(base) / f"{kind}-{stamp}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path: Path, obj) -> None:
    Path(path).write_text(canonical_json(obj))


def write_plotdata(path: Path, rows) -> None:
    """rows: iterables (series, t, value, lo, hi); dot-decimal, LF, header."""
    lines = [PLOTDATA_HEADER]
    for series, t, value, lo, hi in rows:
        lines.append(",".join([
            str(series), repr(float(t)), repr(float(value)),
            "" if lo is None else repr(float(lo)),
            "" if hi is None else repr(float(hi))]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
