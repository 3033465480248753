"""Artifact writers: the documented CSV/JSON layout under out/<run-id>/.

Every artifact directory carries a manifest with the config hash, package
version and grid parameters.  Writers are deterministic: fixed float
formatting, sorted JSON keys, no timestamps, so re-running a subcommand
with the same config reproduces byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

import sharpwave
from sharpwave.model import Environment, density_from_pressure
from sharpwave.phaseplane import CompactSubsolution, F2Report
from sharpwave.renorm import LinftyReport, WaveReport, WaveResult
from sharpwave.solver import RunRecord
from sharpwave.stationary import PeriodicSteadyState

__all__ = [
    "config_hash",
    "write_manifest",
    "write_trajectory",
    "write_snapshots",
    "write_steady",
    "write_subsolution",
    "write_wave",
    "write_intersections",
    "write_json",
]

_FMT = "%.12g"


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonify) + "\n")


def _jsonify(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not JSON-serializable: {type(x)}")


def _write_csv(path: Path, header: str, columns) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack(columns)
    np.savetxt(path, data, fmt=_FMT, delimiter=",", header=header, comments="")


def write_manifest(out: Path, env: Environment, config: dict, grid: dict, events: dict) -> None:
    write_json(
        out / "manifest.json",
        {
            "config_hash": config_hash(config),
            "environment_hash": config_hash(env.to_json()),
            "version": sharpwave.__version__,
            "grid": grid,
            "events": events,
        },
    )


def write_trajectory(out: Path, record: RunRecord) -> None:
    tr = record.traj
    _write_csv(out / "trajectory.csv", "t,b,slope,speed", (tr.t, tr.b, tr.slope, tr.speed))


def write_snapshots(out: Path, record: RunRecord) -> None:
    snapdir = out / "snapshots"
    m = record.env.m
    rows = []
    for i, s in enumerate(record.snapshots):
        name = f"snap_{i:04d}.csv"
        u = density_from_pressure(s.v, m)
        _write_csv(snapdir / name, "x,v,u", (s.x(), s.v, u))
        rows.append((name, s.t, s.station, s.b, s.slope))
    if rows:
        lines = ["file,t,station,b,slope"]
        for name, t, st, b, sl in rows:
            lines.append(f"{name},{t:.12g},{st:.12g},{b:.12g},{sl:.12g}")
        (snapdir / "index.csv").write_text("\n".join(lines) + "\n")


def write_steady(out: Path, name: str, state: PeriodicSteadyState) -> None:
    _write_csv(out / f"{name}.csv", "x,p,q", (state.x(), state.p, state.q))
    write_json(
        out / f"{name}.json",
        {"residual": state.residual, "kind": state.kind, "n": state.n, "m": state.m},
    )


def write_subsolution(out: Path, sub: CompactSubsolution, f2: F2Report | None) -> None:
    _write_csv(out / "subsolution.csv", "z,phi,psi", (sub.z_grid, sub.phi, sub.psi))
    payload = {
        "c": sub.c,
        "q0": sub.q0,
        "m": sub.m,
        "l0": sub.l0,
        "edge_slope": sub.edge_slope,
        "edge_flux": sub.edge_flux,
        "edge_ok": sub.edge_slope > sub.c,
    }
    if f2 is not None:
        payload["f2"] = {
            "passed": f2.passed,
            "min_gap": f2.min_gap,
            "witness": list(f2.witness),
        }
    write_json(out / "subsolution.json", payload)


def write_wave(
    out: Path,
    wave: WaveResult,
    report: WaveReport | None,
    linfty: LinftyReport | None = None,
    extra: dict | None = None,
) -> None:
    """profile.csv in long (x, t, V) format plus boundary and summary."""
    period = wave.period_slice()
    taus = wave.tau[period]
    rows_x, rows_t, rows_v = [], [], []
    for k, tau in zip(range(period.start, period.stop), taus):
        rows_x.append(wave.x)
        rows_t.append(np.full(wave.x.size, tau))
        rows_v.append(wave.V[k])
    _write_csv(
        out / "profile.csv",
        "x,t,V",
        (np.concatenate(rows_x), np.concatenate(rows_t), np.concatenate(rows_v)),
    )
    _write_csv(
        out / "boundary.csv",
        "t,B,Bprime",
        (taus, wave.B[period], wave.Bprime[period]),
    )
    summary = {
        "T": wave.T,
        "delta_star": wave.delta_star,
        "avg_speed": wave.avg_speed,
        "n_star": wave.n_star,
        "max_V": wave.max_V,
        "window": list(wave.window),
        "s_n": wave.s_n.tolist(),
        "convergence_history": {str(k): v for k, v in wave.convergence_history.items()},
    }
    if report is not None:
        summary["verification"] = {
            "passed": report.passed,
            "positivity_ok": report.positivity_ok,
            "tail_kind": report.tail_kind,
            "tail_residual": report.tail_residual,
            "tail_ok": report.tail_ok,
            "darcy_residual": report.darcy_residual,
            "darcy_ok": report.darcy_ok,
            "vt_min": report.vt_min,
            "vt_ok": report.vt_ok,
            "periodicity_defect": report.periodicity_defect,
            "periodicity_ok": report.periodicity_ok,
            "delta_star": report.delta_star,
            "delta_star_ok": report.delta_star_ok,
        }
    if linfty is not None:
        summary["linfty"] = {
            "n": linfty.n_values.tolist(),
            "gaps": linfty.gaps.tolist(),
            "final_gap": linfty.final_gap,
            "threshold": linfty.threshold,
            "passed": linfty.passed,
            "classification": linfty.classification,
        }
    if extra:
        summary.update(extra)
    write_json(out / "summary.json", summary)


def write_intersections(out: Path, report) -> None:
    lines = ["t,count,class"]
    for t, c, cls in zip(report.times, report.counts, report.classes):
        lines.append(f"{t:.12g},{int(c)},{cls}")
    out.mkdir(parents=True, exist_ok=True)
    (out / "intersections.csv").write_text("\n".join(lines) + "\n")
    write_json(
        out / "intersections.json",
        {
            "nonincreasing": report.nonincreasing,
            "first_seen": report.first_seen,
            "final_count": int(report.counts[-1]) if report.counts.size else None,
        },
    )
