"""CSV/JSON writers and the trajectory tables they carry.

Floats are written in Python's shortest round-trip form so repeated runs
give byte-identical files.  CSV quoting follows RFC 4180 (the ``csv``
module defaults, CRLF line ends).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .analysis import decay_slope_estimate
from .integrator import Trajectory

TRAJECTORY_COLUMNS = ("r", "x", "u", "z", "u_prime", "torsion_norm_sq", "L", "Q_or_nan")
SWEEP_COLUMNS = ("index", "case", "c", "lambda", "a1", "classification", "final_torsion_norm_sq",
                 "max_residual", "r_end", "truncated", "error")
SNAPSHOT_COLUMNS = ("r", "u", "a", "torsion_density")


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def jsonable(obj):
    """Recursively convert numpy values; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if hasattr(obj, "value"):  # enums
        return obj.value
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def trajectory_rows(traj: Trajectory):
    d = traj.diagnostics
    r = traj.r
    return list(zip(r, traj.x, traj.u, traj.z, traj.z / r, d["torsion_norm_sq"],
                    d["lyapunov"], d["q"]))


def trajectory_columns(traj: Trajectory):
    return {name: [row[i] for row in trajectory_rows(traj)] for i, name in enumerate(TRAJECTORY_COLUMNS)}


def solve_summary(traj: Trajectory, r_max):
    """JSON summary; validated against ``schemas/solve_summary.schema.json`` in tests."""
    case = traj.case
    d = traj.diagnostics
    r_end = traj.r_end
    u_end, z_end = float(traj.u[-1]), float(traj.z[-1])
    slope = decay_slope_estimate(traj) if (not traj.truncated and r_end >= 50) else math.nan
    return {
        "case": case.kind.value,
        "label": case.label,
        "params": traj.params.as_dict(),
        "lambda": case.lam if case.is_bryant_salamon else None,
        "a1": traj.a1,
        "tol": traj.tol,
        "r_max": float(r_max),
        "r_switch": float(np.exp(traj.x_switch)),
        "series_order": traj.series.order if traj.series else None,
        "classification": d["classification"].value,
        "truncated": bool(traj.truncated),
        "endpoint": {
            "r": r_end, "u": u_end, "z": z_end, "u_prime": z_end / r_end,
            "torsion_norm_sq": float(d["torsion_norm_sq"][-1]),
            "r3_abs_u_prime": r_end * r_end * abs(z_end),
        },
        "residual_max": d["residual_max"],
        "decay_slope": slope,
        "n_steps": traj.n_steps,
        "nfev": traj.nfev,
    }


def schema_path(name="solve_summary"):
    return Path(__file__).with_name("schemas") / f"{name}.schema.json"
