"""
Surface export and import.

CSV: header `theta1,theta2,value[,grad_norm]`, one row per node in
row-major (i, j) order, every number with 17 significant digits. The grid
spec, metadata and slope-jump marks go to a `<name>.meta.json` sidecar so the
CSV stays a plain table.

JSON: the whole SurfaceGrid record.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Literal

import numpy as np
import structlog

from src.exceptions import ExportError
from src.models import GridSpec, SurfaceGrid

log = structlog.get_logger(__name__)

ExportFormat = Literal["csv", "json"]


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".meta.json")


def export_grid(grid: SurfaceGrid, path: str | Path, fmt: ExportFormat = "csv") -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path.write_text(grid.model_dump_json(indent=2), encoding="utf-8")
        elif fmt == "csv":
            _write_csv(grid, path)
        else:
            raise ValueError(f"unknown export format {fmt!r}")
    except OSError as exc:
        raise ExportError(f"could not write surface {grid.spec.label}: {exc}", str(path)) from exc
    log.info("surface_exported", path=str(path), format=fmt, variant=grid.spec.label)
    return path


def _write_csv(grid: SurfaceGrid, path: Path) -> None:
    a1, a2 = grid.spec.axes()
    with_grad = grid.grad_norms is not None
    header = ["theta1", "theta2", "value"] + (["grad_norm"] if with_grad else [])
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, t1 in enumerate(a1):
            for j, t2 in enumerate(a2):
                row = [_fmt(t1), _fmt(t2), _fmt(grid.values[i, j])]
                if with_grad:
                    row.append(_fmt(grid.grad_norms[i, j]))
                writer.writerow(row)
    sidecar = {
        "spec": grid.spec.model_dump(mode="json"),
        "metadata": grid.metadata,
        "discontinuities": [m.model_dump() for m in grid.discontinuities],
    }
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2, default=str), encoding="utf-8")


def load_grid(path: str | Path) -> SurfaceGrid:
    """Re-import a JSON export, or a CSV export next to its sidecar."""
    path = Path(path)
    try:
        if path.suffix == ".json":
            return SurfaceGrid.model_validate_json(path.read_text(encoding="utf-8"))
        return _read_csv(path)
    except OSError as exc:
        raise ExportError(f"could not read surface: {exc}", str(path)) from exc


def _read_csv(path: Path) -> SurfaceGrid:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader])
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        spec = GridSpec.model_validate(meta["spec"])
        metadata, marks = meta.get("metadata", {}), meta.get("discontinuities", [])
    else:
        a1, a2 = np.unique(rows[:, 0]), np.unique(rows[:, 1])
        spec = GridSpec(
            theta1_range=(float(a1[0]), float(a1[-1])),
            theta2_range=(float(a2[0]), float(a2[-1])),
            resolution=len(a1),
        )
        metadata, marks = {}, []
    shape = (spec.resolution, spec.resolution)
    grad = rows[:, 3].reshape(shape) if "grad_norm" in header else None
    return SurfaceGrid(
        spec=spec,
        values=rows[:, 2].reshape(shape),
        grad_norms=grad,
        discontinuities=marks,
        metadata=metadata,
    )
