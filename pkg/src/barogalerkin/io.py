"""Writers for trajectories, field snapshots and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path

import numpy as np
import scipy
import yaml

from .diagnostics import CSV_COLUMNS, eulerian_map
from .galerkin import GalerkinState, Trajectory, reconstruct_v, reconstruct_xi
from .spectral import uniform_grid

__all__ = ["write_trajectory_csv", "write_records_json", "write_snapshot", "write_manifest", "file_sha256", "versions"]

SNAPSHOT_COLUMNS = ("x", "v", "xi", "rho", "r")


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    """One row per output time in the fixed column order of :data:`CSV_COLUMNS`."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in traj.records:
            writer.writerow([_fmt(v) for v in rec.csv_row()])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in items]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable({k: getattr(obj, k) for k in obj.__dataclass_fields__})
    return obj


def write_records_json(path, traj: Trajectory) -> Path:
    """All diagnostics, including those outside the CSV schema, as a JSON list."""
    path = Path(path)
    path.write_text(json.dumps([_jsonable(r.to_dict()) for r in traj.records], indent=1))
    return path


def write_snapshot(path, state: GalerkinState, M: int | None = None) -> Path:
    """Columns ``x, v, xi, rho, r`` at 17 significant digits."""
    M = M or state.params.M
    x = uniform_grid(M)
    v = reconstruct_v(state, M).values
    xi = reconstruct_xi(state, M).values
    r, _ = eulerian_map(state, M)
    data = np.column_stack([x, v, xi, 1.0 / xi, r.values])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(SNAPSHOT_COLUMNS), comments="")
    return Path(path)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def versions() -> dict:
    from . import __version__

    return {
        "barogalerkin": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pyyaml": yaml.__version__,
    }


def write_manifest(path, config: dict, files, monitor_summary: dict, extra: dict | None = None) -> Path:
    """Config echo, library versions, monitor summary and a hash per output file."""
    path = Path(path)
    root = path.parent
    manifest = {
        "config": _jsonable(config),
        "versions": versions(),
        "monitors": _jsonable(monitor_summary),
        "files": {str(Path(f).relative_to(root)): file_sha256(f) for f in files},
    }
    if extra:
        manifest.update(_jsonable(extra))
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path
