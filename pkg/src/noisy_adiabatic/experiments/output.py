"""CSV and summary writers.

Numbers are written as ``% .8e`` (fixed width, 9 significant digits) so the
files are byte-identical across repeated runs of the same build.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ("t", "abs_psi0", "re_psi0", "im_psi0", "residual_abs")
ENSEMBLE_COLUMNS = ("t", "mean_abs_psi0", "stderr_abs", "mean_pop0", "stderr_pop", "purity")


def fmt(x) -> str:
    return f"{float(x): .8e}"


def write_table(path, columns, data) -> Path:
    """``data`` is a sequence of equal-length columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c, dtype=float) for c in data]
    lines = [",".join(columns)]
    lines += [",".join(fmt(v) for v in row) for row in zip(*cols)]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_trajectory(path, result) -> Path:
    psi = result.psi0
    return write_table(path, TRAJECTORY_COLUMNS,
                       (result.grid.t, np.abs(psi), psi.real, psi.imag, np.abs(result.residual)))


def write_ensemble(path, ens) -> Path:
    purity = ens.purity if ens.purity is not None else np.full(ens.grid.t.shape, np.nan)
    return write_table(path, ENSEMBLE_COLUMNS,
                       (ens.grid.t, ens.mean_abs_psi0, ens.stderr_abs, ens.mean_pop0, ens.stderr_pop, purity))


def write_rows(path, rows) -> Path:
    """List of dicts with identical numeric keys."""
    columns = list(rows[0])
    return write_table(path, columns, [[r[c] for r in rows] for c in columns])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_summary(path, summary: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n")
    return path
