"""Result files: CSV grids and codes with a provenance preamble, JSON summaries, output-dir locking."""
from __future__ import annotations

import csv
import json
import math
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .errors import DimensionMismatch

FMT = "%.17g"


def _preamble(meta: Optional[dict]) -> list[str]:
    lines = [f"# pdrwave {__version__}"]
    if meta is not None:
        lines.append("# config " + json.dumps(meta, sort_keys=True, separators=(",", ":")))
    return lines


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], meta: Optional[dict] = None) -> None:
    """Write ``#`` comment lines, one header line, then rows; floats use 17 significant digits."""
    out = _preamble(meta) + [",".join(header)]
    for row in rows:
        out.append(",".join(FMT % v if isinstance(v, (float, np.floating)) else str(v) for v in row))
    Path(path).write_text("\n".join(out) + "\n")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader if row]


def write_waveform(path, x, M: int, N: int, meta: Optional[dict] = None) -> None:
    x = np.asarray(x, dtype=complex)
    if x.shape != (M * N,):
        raise DimensionMismatch(f"code must have length {M * N}")
    rows = ((m, n, float(x[m * N + n].real), float(x[m * N + n].imag)) for m in range(M) for n in range(N))
    write_csv(path, ("antenna_index", "sample_index", "re", "im"), rows, meta)


def read_waveform(path) -> tuple[np.ndarray, int, int]:
    """Returns the antenna-major code with ``M`` and ``N`` inferred from the indices."""
    header, rows = read_csv(path)
    if header != ["antenna_index", "sample_index", "re", "im"]:
        raise ValueError(f"{path}: unexpected header {header}")
    m = np.array([int(r[0]) for r in rows])
    n = np.array([int(r[1]) for r in rows])
    M, N = int(m.max()) + 1, int(n.max()) + 1
    if len(rows) != M * N:
        raise DimensionMismatch(f"{path}: {len(rows)} rows do not fill a {M} x {N} code")
    x = np.empty(M * N, dtype=complex)
    x[m * N + n] = np.array([float(r[2]) for r in rows]) + 1j * np.array([float(r[3]) for r in rows])
    return x, M, N


def write_pattern(path, theta_deg, f_hz, grid_db, meta: Optional[dict] = None) -> None:
    rows = ((float(t), float(f), float(grid_db[s, p])) for s, t in enumerate(theta_deg) for p, f in enumerate(f_hz))
    write_csv(path, ("theta_deg", "f_hz", "value_db"), rows, meta)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    # strict JSON has no infinities; encode them as strings
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


class OutputLocked(RuntimeError):
    pass


@contextmanager
def locked_dir(path):
    """Create ``path`` and hold an exclusive ``.lock`` file in it for the duration."""
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    lock = d / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as exc:
        raise OutputLocked(f"{d} is in use by another run (remove {lock} if stale)") from exc
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield d
    finally:
        lock.unlink(missing_ok=True)
