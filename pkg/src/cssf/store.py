"""Reading and writing snapshots, trajectories and reports.

Floats are written with ``repr``, the shortest decimal string that parses
back to the same double, so every CSV round trip is bit-exact.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .curve import CurveState, ParamGrid
from .flow import StepInfo, Trajectory
from .geometry import frame_eval

MANIFEST = "trajectory.json"


def _fmt(value) -> str:
    return repr(float(value))


def _time_key(frame: str) -> str:
    return "t" if frame == "physical" else "tau"


def write_snapshot(curve: CurveState, path) -> Path:
    """CSV with ``# frame=`` and ``# tau=``/``# t=`` comments, then ``i,x,px,py,pz``."""
    path = Path(path)
    lines = [f"# frame={curve.frame}", f"# {_time_key(curve.frame)}={_fmt(curve.time)}",
             "i,x,px,py,pz"]
    nodes = curve.grid.nodes
    for i, (x, p) in enumerate(zip(nodes, curve.positions)):
        lines.append(",".join([str(i), _fmt(x), _fmt(p[0]), _fmt(p[1]), _fmt(p[2])]))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_snapshot(path) -> CurveState:
    meta, rows = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif line.startswith("i,"):
                continue
            else:
                rows.append(line.split(","))
    if not rows:
        raise ValueError(f"{path}: no samples")
    frame = meta.get("frame", "rescaled")
    time = float(meta.get(_time_key(frame), "0"))
    rows.sort(key=lambda r: int(r[0]))
    positions = np.array([[float(v) for v in r[2:5]] for r in rows])
    return CurveState(ParamGrid(len(rows)), positions, time, frame)


def write_frame_dump(curve: CurveState, path) -> Path:
    """Per-node geometry: ``i,x,kappa,psi,radius,projB2,projN,projT2``."""
    fr = frame_eval(curve)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "x", "kappa", "psi", "radius", "projB2", "projN", "projT2"])
        for i, x in enumerate(curve.grid.nodes):
            w.writerow([i, _fmt(x), _fmt(fr.kappa[i]), _fmt(fr.psi[i]), _fmt(fr.radius[i]),
                        _fmt(fr.proj_binormal_sq[i]), _fmt(fr.proj_normal[i]),
                        _fmt(fr.proj_tangent_sq[i])])
    return path


def write_trajectory(traj: Trajectory, directory) -> Path:
    """One snapshot CSV per state plus a JSON manifest; returns the manifest path."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for k, state in enumerate(traj.states):
        name = f"snap_{k:05d}.csv"
        write_snapshot(state, directory / name)
        files.append(name)
    diag = [None if d is None else {"dt": d.dt, "min_cos2_psi": d.min_cos2_psi,
                                    "min_radius": d.min_radius, "max_kappa": d.max_kappa}
            for d in traj.diagnostics]
    manifest = {"frame": traj.frame, "n_nodes": traj.states[0].n_nodes,
                "times": list(traj.times), "files": files, "diagnostics": diag}
    path = directory / MANIFEST
    path.write_text(json.dumps(_jsonable(manifest), indent=1))
    return path


def read_trajectory(path) -> Trajectory:
    """Load from a manifest file or the directory holding one."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    manifest = json.loads(path.read_text())
    traj = Trajectory(manifest["frame"])
    for name, diag in zip(manifest["files"], manifest["diagnostics"]):
        state = read_snapshot(path.parent / name)
        traj.append(state, None if diag is None else StepInfo(**diag))
    return traj


def _jsonable(obj):
    # JSON has no NaN/inf; encode them as null so the files stay standard
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def write_reports_json(reports, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable([r.to_dict() for r in reports]), indent=1))
    return path


SUMMARY_FIELDS = ("tau", "lhs_fd", "lhs_inst", "dissipation", "d1", "d2", "extra",
                  "residual_fd", "residual_inst", "excluded")


def write_reports_csv(reports, path) -> Path:
    """Summary table; ``extra`` is the sum of all named extra terms."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in reports:
            extra = sum(r.extra_terms.values()) if r.extra_terms else 0.0
            w.writerow([_fmt(r.tau), _fmt(r.lhs_finite_diff), _fmt(r.lhs_instant),
                        _fmt(r.dissipation), _fmt(r.d1_integral), _fmt(r.d2_integral),
                        _fmt(extra), _fmt(r.residual_fd), _fmt(r.residual_instant),
                        r.excluded_count])
    return path


def read_reports_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (int(v) if k == "excluded" else float(v)) for k, v in row.items()}
            for row in rows]
