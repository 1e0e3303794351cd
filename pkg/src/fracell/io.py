"""CSV / JSON emission for grids, fields, spectra, kernels and reports.

CSV uses '.' decimals, no locale, floats with 17 significant digits.
JSON reports are emitted with sorted keys and no timestamps, so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .grids import BoundaryCondition, Grid, GridFunction

__all__ = [
    "fmt",
    "write_field_csv",
    "read_field_csv",
    "write_grid_json",
    "read_grid_json",
    "write_eigen_csv",
    "write_eigen_summary",
    "write_eigenvectors",
    "write_probe_sweep_csv",
    "write_kernel_csv",
    "write_extension_csv",
    "write_oracle_csv",
    "write_report_json",
    "config_hash",
]


def fmt(x: float) -> str:
    """17-significant-digit decimal representation."""
    return format(float(x), ".17g")


def write_field_csv(path, u: GridFunction) -> None:
    """Nodal field as CSV: 1D header i,x,value; 2D header i,j,x,y,value."""
    grid = u.grid
    path = Path(path)
    lines = []
    if grid.dim == 1:
        lines.append("i,x,value")
        x = grid.axis_coords(0)
        for i in range(grid.shape[0]):
            lines.append(f"{i},{fmt(x[i])},{fmt(u.values[i])}")
    else:
        lines.append("i,j,x,y,value")
        xs = grid.axis_coords(0)
        ys = grid.axis_coords(1)
        for i in range(grid.shape[0]):
            for j in range(grid.shape[1]):
                lines.append(f"{i},{j},{fmt(xs[i])},{fmt(ys[j])},{fmt(u.values[i, j])}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field_csv(path, grid: Grid) -> GridFunction:
    """Read a field written by `write_field_csv` back onto its grid."""
    rows = Path(path).read_text(encoding="utf-8").strip().splitlines()
    vals = np.zeros(grid.shape)
    for line in rows[1:]:
        parts = line.split(",")
        if grid.dim == 1:
            vals[int(parts[0])] = float(parts[2])
        else:
            vals[int(parts[0]), int(parts[1])] = float(parts[4])
    return GridFunction(grid, vals)


def write_grid_json(path, grid: Grid, bc: BoundaryCondition, coefficient: str) -> None:
    payload = {
        "dim": grid.dim,
        "extents": [float(e) for e in grid.extents],
        "nodes": list(grid.shape),
        "bc": bc.kind,
        "coefficient": coefficient,
    }
    write_report_json(path, payload)


def read_grid_json(path) -> tuple[Grid, BoundaryCondition, str]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    grid = Grid(tuple(data["extents"]), tuple(data["nodes"]))
    return grid, BoundaryCondition(data["bc"]), data["coefficient"]


def write_eigen_csv(path, basis) -> None:
    lines = ["k,lambda"]
    for k, lam in enumerate(basis.eigenvalues):
        lines.append(f"{k},{fmt(lam)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_eigen_summary(path, basis) -> None:
    write_report_json(
        path,
        {
            "count": int(basis.size),
            "lambda_min": float(basis.eigenvalues.min()),
            "lambda_max": float(basis.eigenvalues.max()),
            "bc": basis.bc.kind,
        },
    )


def write_eigenvectors(dirpath, basis, count: int) -> list[Path]:
    """Per-mode eigenvector CSVs (field format), eigenvector_<k>.csv."""
    dirpath = Path(dirpath)
    paths = []
    for k in range(min(count, basis.size)):
        p = dirpath / f"eigenvector_{k}.csv"
        write_field_csv(p, basis.eigenfunction(k))
        paths.append(p)
    return paths


def write_probe_sweep_csv(path, rows: list[dict]) -> None:
    """Aggregate probe-sweep table: one row per (probe, parameters) case."""
    header = ["probe", "s", "alpha", "p", "exponent", "target", "tolerance", "pass"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(
                [
                    str(row.get("probe", "")),
                    fmt(row["s"]) if row.get("s") is not None else "",
                    fmt(row["alpha"]) if row.get("alpha") is not None else "",
                    fmt(row["p"]) if row.get("p") is not None else "",
                    fmt(row["exponent"]),
                    fmt(row["target"]),
                    fmt(row["tolerance"]),
                    str(bool(row["pass"])).lower(),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_kernel_csv(path, kernel) -> None:
    """Kernel matrix as (i, j, value) triplets over active-node pairs."""
    lines = ["i,j,value"]
    n = kernel.entries.shape[0]
    for i in range(n):
        for j in range(n):
            lines.append(f"{i},{j},{fmt(kernel.entries[i, j])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_extension_csv(path, field) -> None:
    """Extension field as (i, j, x, y, U); 1D bases."""
    mesh = field.mesh
    if mesh.base.dim != 1:
        raise ValueError("extension CSV export covers 1D bases")
    x = mesh.base.axis_coords(0)
    lines = ["i,j,x,y,U"]
    for j, yj in enumerate(mesh.y_nodes):
        for i in range(mesh.base.shape[0]):
            lines.append(f"{i},{j},{fmt(x[i])},{fmt(yj)},{fmt(field.values[j, i])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_oracle_csv(path, xs, values, closed_form) -> None:
    lines = ["x,value,closed_form,ratio"]
    for x, v, c in zip(xs, values, closed_form):
        ratio = v / c if c != 0 else float("nan")
        lines.append(f"{fmt(x)},{fmt(v)},{fmt(c)},{fmt(ratio)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):  # before int: bool is an int subclass
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_report_json(path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def config_hash(items: dict) -> str:
    """sha256 of the canonicalized key=value listing."""
    blob = "\n".join(f"{k}={items[k]}" for k in sorted(items))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
