"""CSV and JSON writers.

Every CSV starts with one comment line ``# {json}`` holding the resolved
configuration and the tool version, then a header row, then data.  Floats are
written with 17 significant digits so files round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ._version import __version__
from .grids import DensityGrid

__all__ = ["to_jsonable", "write_json", "write_csv", "read_csv", "export_density", "export_ensemble", "export_charfun"]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def _stamp(config):
    return {"version": __version__, "config": to_jsonable(config or {})}


def write_json(path, payload: dict, config=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {**_stamp(config), **to_jsonable(payload)}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path, columns, rows, config=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write("# " + json.dumps(_stamp(config), sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def read_csv(path):
    """(stamp dict, column names, float array of shape (rows, columns))."""
    with Path(path).open() as fh:
        stamp = json.loads(fh.readline()[2:])
        reader = csv.reader(fh)
        columns = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return stamp, columns, data.reshape(-1, len(columns))


def export_density(grid: DensityGrid, csv_path, config=None, extra=None):
    """``x,density`` CSV plus a JSON sidecar with atoms, mass and metadata."""
    csv_path = Path(csv_path)
    write_csv(csv_path, ["x", "density"], zip(grid.centers, grid.values), config)
    sidecar = csv_path.with_suffix(".json")
    payload = {
        "time": grid.time,
        "atoms": [list(a) for a in grid.atoms],
        "mass": grid.mass(),
        "meta": grid.meta,
        **(extra or {}),
    }
    write_json(sidecar, payload, config)
    return csv_path, sidecar


def export_ensemble(ensemble, csv_path, config=None, summary=None):
    """One row per path (seed, n_tumbles, final_position) and a JSON summary."""
    csv_path = Path(csv_path)
    rows = zip(ensemble.seeds.tolist(), ensemble.n_tumbles, ensemble.final_positions)
    write_csv(csv_path, ["seed", "n_tumbles", "final_position"], rows, config)
    payload = {
        "n_paths": ensemble.n_paths,
        "base_seed": ensemble.base_seed,
        "t_end": ensemble.t_end,
        "rng": ensemble.rng,
        "method": ensemble.method,
        "moments": ensemble.moments(),
        "zero_tumble_fraction": ensemble.zero_tumble_fraction(),
        **(summary or {}),
    }
    sidecar = csv_path.with_suffix(".json")
    write_json(sidecar, payload, config)
    return csv_path, sidecar


def export_charfun(grid, csv_path, config=None):
    csv_path = Path(csv_path)
    write_csv(csv_path, ["k", "re", "im"], zip(grid.wavenumbers, grid.values.real, grid.values.imag), config)
    write_json(csv_path.with_suffix(".json"), {"t": grid.t, "meta": grid.meta}, config)
    return csv_path
