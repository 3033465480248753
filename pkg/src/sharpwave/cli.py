"""Command-line orchestration.

    sharpwave <validate|steady|subsolution|simulate|wave|diagnose> --config FILE [overrides]

Exit codes: 0 ok, 1 domain failure, 2 config error, 3 qualitative
non-convergence (including a suspected terrace), 4 numerical abort.
Artifacts land in out/<run-id>/ with a manifest; identical configs on the
same platform reproduce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from sharpwave import io as artio
from sharpwave import pipeline
from sharpwave.diagnostics import ProfilePair, check_monotone_intersections
from sharpwave.model import Environment, EnvironmentError_, validate_F1
from sharpwave.phaseplane import ShootError, build_f0, shoot_compact_wave, verify_F2
from sharpwave.renorm import RenormError
from sharpwave.solver import (
    RecorderSpec,
    SolverAbort,
    SolverConfig,
    StopRule,
    init_heaviside,
    solve,
)
from sharpwave.stationary import StationaryError, find_max_steady, find_min_steady

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_CONFIG = 2
EXIT_NONCONV = 3
EXIT_ABORT = 4


class ConfigError(Exception):
    pass


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg["_dir"] = str(p.parent)
    return cfg


def _environment(cfg: dict) -> Environment:
    env_spec = cfg.get("environment")
    if env_spec is None:
        raise ConfigError("config lacks an 'environment' entry")
    if isinstance(env_spec, str):
        p = Path(env_spec)
        if not p.is_absolute():
            p = Path(cfg["_dir"]) / p
        if not p.exists():
            raise ConfigError(f"environment file not found: {p}")
        env_spec = json.loads(p.read_text())
    try:
        return Environment.from_json(env_spec)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad environment: {e}") from e


def _solver_cfg(cfg: dict, overrides: argparse.Namespace, **extra) -> SolverConfig:
    sol = dict(cfg.get("solver", {}))
    if overrides.dx is not None:
        sol["dx"] = overrides.dx
    sol.update(extra)
    try:
        return SolverConfig(**sol)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad solver config: {e}") from e


def _out_dir(cfg: dict, overrides: argparse.Namespace, default: str) -> Path:
    out = overrides.out or cfg.get("out") or default
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _public_config(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(cfg: dict, args: argparse.Namespace) -> int:
    env = _environment(cfg)
    report = validate_F1(env)
    payload = {
        "f1_passed": report.passed,
        "clauses": report.clauses,
        "witnesses": {k: list(v) for k, v in report.witnesses.items()},
        "kappa0": report.kappa0,
        "kappa_sup": report.kappa_sup,
    }
    for clause, ok in report.clauses.items():
        mark = "ok" if ok else "FAIL"
        extra = "" if ok else f"  witness: {report.witnesses.get(clause)}"
        print(f"  [{mark:4s}] {clause}{extra}")
    code = EXIT_OK if report.passed else EXIT_DOMAIN
    if report.passed and args.check_f2:
        sub_cfg = cfg.get("subsolution", {})
        case = sub_cfg.get("case", env.reaction.family)
        try:
            f0 = build_f0(env, case)
            k0, _ = env.kappa_range()
            sub = shoot_compact_wave(
                f0, env.m, float(sub_cfg.get("c", 0.05)), float(sub_cfg.get("q0", 0.95 * k0))
            )
            f2 = verify_F2(env, sub)
            payload["f2"] = {"passed": f2.passed, "min_gap": f2.min_gap, "c": f2.c}
            print(f"  [{'ok' if f2.passed else 'FAIL':4s}] (F2) via constructed subsolution")
            if not f2.passed:
                code = EXIT_DOMAIN
        except (ShootError, ValueError) as e:
            print(f"  [FAIL] (F2) construction: {e}")
            payload["f2"] = {"passed": False, "error": str(e)}
            code = EXIT_DOMAIN
    if args.out or cfg.get("out"):
        out = _out_dir(cfg, args, "out/validate")
        artio.write_json(out / "report.json", payload)
        artio.write_manifest(out, env, _public_config(cfg), {}, {"command": "validate"})
    print("F1:", "pass" if report.passed else "FAIL")
    return code


def cmd_steady(cfg: dict, args: argparse.Namespace) -> int:
    env = _environment(cfg)
    if not validate_F1(env).passed:
        print("hypotheses fail; refusing to compute steady states")
        return EXIT_DOMAIN
    sopts = cfg.get("steady", {})
    tol = args.tol or sopts.get("tol", 1e-6)
    n = int(sopts.get("n", 256))
    out = _out_dir(cfg, args, "out/steady")
    try:
        p1 = find_min_steady(env, tol=tol, n=n)
        p2 = find_max_steady(env, tol=tol, n=n)
    except StationaryError as e:
        print(f"stationary march failed: {e}")
        return EXIT_NONCONV
    artio.write_steady(out, "p1", p1)
    artio.write_steady(out, "p2", p2)
    gap = float(np.abs(p2.p - p1.p).max())
    artio.write_json(out / "summary.json", {"gap_sup": gap, "residuals": [p1.residual, p2.residual]})
    artio.write_manifest(out, env, _public_config(cfg), {"n": n}, {"command": "steady"})
    print(f"p1 residual {p1.residual:.2e}, p2 residual {p2.residual:.2e}, sup gap {gap:.3e}")
    return EXIT_OK


def cmd_subsolution(cfg: dict, args: argparse.Namespace) -> int:
    env = _environment(cfg)
    if not validate_F1(env).passed:
        print("hypotheses fail; no subsolution construction")
        return EXIT_DOMAIN
    sub_cfg = cfg.get("subsolution", {})
    case = sub_cfg.get("case", env.reaction.family)
    k0, _ = env.kappa_range()
    c = float(args.c if args.c is not None else sub_cfg.get("c", 0.05))
    q0 = float(args.q0 if args.q0 is not None else sub_cfg.get("q0", 0.95 * k0))
    out = _out_dir(cfg, args, "out/subsolution")
    try:
        f0 = build_f0(env, case, c=c, q0=q0)
        sub = shoot_compact_wave(f0, env.m, c, q0)
    except (ShootError, ValueError) as e:
        print(f"subsolution construction failed: {e}")
        return EXIT_DOMAIN
    f2 = verify_F2(env, sub)
    artio.write_subsolution(out, sub, f2)
    artio.write_manifest(out, env, _public_config(cfg), {}, {"command": "subsolution"})
    print(
        f"l0 = {sub.l0:.4f}, edge slope {sub.edge_slope:.4f} > c = {c}; "
        f"F2 {'pass' if f2.passed else 'FAIL'}"
    )
    return EXIT_OK if f2.passed else EXIT_DOMAIN


def cmd_simulate(cfg: dict, args: argparse.Namespace) -> int:
    env = _environment(cfg)
    run_cfg = cfg.get("run", {})
    scfg = _solver_cfg(cfg, args)
    rec_cfg = cfg.get("recorder", {})
    recorder = RecorderSpec(**rec_cfg) if rec_cfg else RecorderSpec()
    out = _out_dir(cfg, args, "out/simulate")
    start = run_cfg.get("start", "maximal")
    k = int(run_cfg.get("k", 0))
    t_end = args.t_end if args.t_end is not None else run_cfg.get("t_end")
    n_max = args.n_max if args.n_max is not None else run_cfg.get("n_max")
    if t_end is None and n_max is None:
        raise ConfigError("simulate needs run.t_end or run.n_max")
    try:
        q = find_min_steady(env) if start == "minimal" else find_max_steady(env)
        x_left = k - (scfg.keep_behind + 2.0)
        fld = init_heaviside(env, q, k, (x_left, k + 0.5), dx=scfg.dx)
        stop = StopRule(
            t_end=float(t_end) if t_end is not None else None,
            b_end=float(n_max) + 1e-9 if n_max is not None else None,
        )
        _, _, record = solve(env, fld, stop, scfg, recorder, left_profile=q.q_at)
    except SolverAbort as e:
        print(f"solver abort: {e}")
        return EXIT_ABORT
    except (StationaryError, RenormError) as e:
        print(f"run failed: {e}")
        return EXIT_NONCONV
    artio.write_trajectory(out, record)
    artio.write_snapshots(out, record)
    artio.write_manifest(
        out,
        env,
        _public_config(cfg),
        {"dx": scfg.dx, "substations": recorder.substations},
        {"command": "simulate", **record.diagnostics},
    )
    print(f"t = {record.final.t:.4f}, b = {record.final.b:.4f}, steps = {record.diagnostics['steps']}")
    return EXIT_OK


def cmd_wave(cfg: dict, args: argparse.Namespace) -> int:
    env = _environment(cfg)
    ren = dict(cfg.get("renorm", {}))
    if args.n_max is not None:
        ren["n_max"] = args.n_max
    if args.tol is not None:
        ren["tol"] = args.tol
    dx = args.dx if args.dx is not None else cfg.get("solver", {}).get("dx", 1.0 / 256)
    out = _out_dir(cfg, args, "out/wave")
    kwargs = {
        k: ren[k]
        for k in (
            "n_max",
            "tol",
            "consecutive",
            "start",
            "substations",
            "linfty",
            "tail_tol_abs",
            "tail_tol_rel",
            "darcy_tol",
            "vt_tol",
            "periodicity_tol_rel",
            "terrace_tail_rel",
        )
        if k in ren
    }
    if "window" in ren:
        kwargs["window"] = tuple(ren["window"])
    if "sigma" in cfg.get("solver", {}):
        kwargs["sigma"] = cfg["solver"]["sigma"]
    try:
        result = pipeline.run_wave_pipeline(env, dx=dx, **kwargs)
    except SolverAbort as e:
        print(f"solver abort: {e}")
        return EXIT_ABORT
    except (RenormError, StationaryError) as e:
        print(f"pipeline failed: {e}")
        artio.write_json(out / "summary.json", {"status": "failed", "error": str(e)})
        return EXIT_NONCONV
    except ValueError as e:
        print(f"domain failure: {e}")
        return EXIT_DOMAIN

    grid = {"dx": dx, "n_max": kwargs.get("n_max", 8)}
    artio.write_manifest(out, env, _public_config(cfg), grid, {"command": "wave", "status": result.status})
    if result.record is not None:
        artio.write_trajectory(out, result.record)
    if result.wave is not None:
        artio.write_wave(out, result.wave, result.report, result.linfty, extra={"status": result.status})
        print(
            f"status: {result.status}; T = {result.wave.T:.5f}, "
            f"delta* = {result.wave.delta_star:.4f}, "
            f"verification {'pass' if result.report.passed else 'FAIL'}"
        )
    else:
        artio.write_json(
            out / "summary.json",
            {"status": result.status, "diagnostics": result.diagnostics},
        )
        print(f"status: {result.status}")
    return result.exit_code


def cmd_diagnose(cfg: dict, args: argparse.Namespace) -> int:
    env = _environment(cfg)
    diag = cfg.get("diagnose", {})
    shift = float(diag.get("shift", 0.5))
    t_end = float(diag.get("t_end", 1.0))
    samples = int(diag.get("samples", 9))
    tol_factor = float(diag.get("tol_factor", 10.0))
    scfg = _solver_cfg(cfg, args, window_policy="fixed", keep_behind=64.0)
    out = _out_dir(cfg, args, "out/diagnose")
    try:
        q2 = find_max_steady(env)
        x_left = -(8.0 + 2.0)
        window = (x_left, 0.5 + shift)

        def one_run(k_shift: float):
            fld = init_heaviside(env, q2, 0, window, dx=scfg.dx)
            if k_shift:
                x = fld.x()
                fld.v = np.where(x <= k_shift + 1e-12, q2.q_at(x), 0.0)
                fld.b = k_shift
            rec = RecorderSpec(snapshots=False)
            times = np.linspace(0.0, t_end, samples)[1:]
            snaps = [(0.0, fld.copy())]
            cur = fld
            for tc in times:
                cur, _, _ = solve(env, cur, StopRule(t_end=float(tc)), scfg, rec, left_profile=q2.q_at)
                snaps.append((float(tc), cur.copy()))
            return snaps

        jobs = args.jobs or int(os.environ.get("SHARPWAVE_JOBS", "1"))
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=2) as ex:
                fa, fb = ex.submit(one_run, 0.0), ex.submit(one_run, shift)
                run_a, run_b = fa.result(), fb.result()
        else:
            run_a, run_b = one_run(0.0), one_run(shift)
    except SolverAbort as e:
        print(f"solver abort: {e}")
        return EXIT_ABORT

    tol = tol_factor * scfg.dx
    pairs = []
    for (t, fa), (_, fb) in zip(run_a, run_b):
        n = min(fa.n, fb.n)
        pairs.append(
            (
                t,
                ProfilePair(
                    x=fa.x()[:n], w1=fb.v[:n], w2=fa.v[:n], r1=fb.b, r2=fa.b
                ),
            )
        )
    report = check_monotone_intersections(pairs, tol)
    artio.write_intersections(out, report)
    artio.write_manifest(out, env, _public_config(cfg), {"dx": scfg.dx}, {"command": "diagnose"})
    print(
        f"counts: {report.counts.tolist()}; nonincreasing: {report.nonincreasing}; "
        f"classes: {report.classes}"
    )
    return EXIT_OK if report.nonincreasing else EXIT_DOMAIN


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sharpwave",
        description="Sharp traveling waves of porous media equations in periodic media",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "validate": cmd_validate,
        "steady": cmd_steady,
        "subsolution": cmd_subsolution,
        "simulate": cmd_simulate,
        "wave": cmd_wave,
        "diagnose": cmd_diagnose,
    }
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run-config JSON file")
        p.add_argument("--out", help="artifact directory")
        p.add_argument("--dx", type=float)
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--jobs", type=int, default=None)
        if name == "validate":
            p.add_argument("--check-f2", action="store_true")
        if name == "subsolution":
            p.add_argument("--c", type=float)
            p.add_argument("--q0", type=float)
        if name == "simulate":
            p.add_argument("--t-end", dest="t_end", type=float)

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return commands[args.command](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except EnvironmentError_ as e:
        print(f"invalid environment: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
