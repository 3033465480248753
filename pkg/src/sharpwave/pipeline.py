"""End-to-end wave extraction: steady states, Heaviside run, renormalize.

This is the programmatic face of the ``wave`` subcommand: run the Cauchy
problem from a Heaviside step of a periodic steady state, renormalize at
integer stations, extract the periodic sharp wave and verify the
existence-theorem conclusions.  The outcome classification distinguishes
a converged-and-verified wave, a suspected propagating terrace (window
converged but the left tail settles below every admissible steady state,
or the whole-line gap persists), and plain non-convergence.
"""

from __future__ import annotations

from dataclasses import dataclass

from sharpwave.model import Environment, validate_F1
from sharpwave.renorm import (
    LinftyReport,
    NonConvergenceError,
    RenormSequence,
    WaveReport,
    WaveResult,
    check_linfty,
    extract_sequence,
    extract_wave,
    verify_wave,
)
from sharpwave.solver import (
    RecorderSpec,
    RunRecord,
    SolverConfig,
    StopRule,
    init_heaviside,
    solve,
)
from sharpwave.stationary import PeriodicSteadyState, find_max_steady, find_min_steady

__all__ = ["WavePipelineResult", "run_wave_pipeline"]

CONVERGED = "converged"
TERRACE = "terrace suspected"
NO_CONVERGENCE = "no convergence"


@dataclass
class WavePipelineResult:
    status: str
    record: RunRecord | None
    sequence: RenormSequence | None
    wave: WaveResult | None
    report: WaveReport | None
    linfty: LinftyReport | None
    q1: PeriodicSteadyState
    q2: PeriodicSteadyState
    diagnostics: dict

    @property
    def ok(self) -> bool:
        return self.status == CONVERGED and self.report is not None and self.report.passed

    @property
    def exit_code(self) -> int:
        """CLI exit-code semantics: 0 ok, 1 verification failure, 3 terrace
        or qualitative non-convergence."""
        if self.status != CONVERGED:
            return 3
        return 0 if self.report is not None and self.report.passed else 1


def run_wave_pipeline(
    env: Environment,
    dx: float = 1.0 / 256,
    n_max: int = 8,
    window: tuple[float, float] = (-6.0, 2.0),
    tol: float = 1e-3,
    consecutive: int = 3,
    start: str = "maximal",
    substations: int = 16,
    linfty: bool = False,
    sigma: float = 0.8,
    steady_tol: float = 1e-6,
    tail_tol_abs: float | None = None,
    tail_tol_rel: float = 0.1,
    darcy_tol: float = 0.05,
    vt_tol: float = 1e-4,
    periodicity_tol_rel: float = 1e-2,
    terrace_tail_rel: float = 0.2,
    max_steps: int | None = None,
) -> WavePipelineResult:
    """Full pipeline for one environment; raises only on hard errors.

    The run starts from H(-x) q(x) with q the maximal (default) or minimal
    periodic steady state.  ``linfty`` switches to full-line recording and
    adds the whole-line convergence table, which is also what exposes a
    terrace when an intermediate state peels off the wave.
    """
    report_f1 = validate_F1(env)
    if not report_f1.passed:
        raise ValueError(f"hypotheses fail: {report_f1.failures()}")
    q1 = find_min_steady(env, tol=steady_tol)
    q2 = find_max_steady(env, tol=steady_tol)
    q_start = q1 if start == "minimal" else q2

    w_behind = -window[0]
    recorder = RecorderSpec(
        substations=substations,
        window_behind=w_behind + 2.0,
        window_ahead=2.0,
        full_line=linfty,
    )
    cfg = SolverConfig(
        dx=dx,
        sigma=sigma,
        keep_behind=w_behind + 4.0,
        window_policy="fixed" if linfty else "sliding",
    )
    x_left = -(w_behind + 4.0)
    fld = init_heaviside(env, q_start, 0, (x_left, 0.5), dx=dx)
    b_end = n_max + 1 + 2.0 / substations
    stop = StopRule(b_end=b_end, max_steps=max_steps)
    _, _, record = solve(env, fld, stop, cfg, recorder, left_profile=q_start.q_at)

    diagnostics = dict(record.diagnostics)
    seq = extract_sequence(record, n_range=(1, n_max), window=window)
    try:
        wave = extract_wave(seq, tol=tol, consecutive=consecutive)
    except NonConvergenceError as err:
        diagnostics["history"] = err.history
        diagnostics["s_n"] = err.s_n.tolist()
        status = TERRACE if err.terrace_suspected else NO_CONVERGENCE
        return WavePipelineResult(
            status=status,
            record=record,
            sequence=seq,
            wave=None,
            report=None,
            linfty=None,
            q1=q1,
            q2=q2,
            diagnostics=diagnostics,
        )

    report = verify_wave(
        env,
        wave,
        steadies=[q1, q2],
        tail_tol_abs=tail_tol_abs,
        tail_tol_rel=tail_tol_rel,
        darcy_tol=darcy_tol,
        vt_tol=vt_tol,
        periodicity_tol_rel=periodicity_tol_rel,
    )
    lreport = None
    if linfty:
        lreport = check_linfty(record, wave, q_start, n_range=(1, n_max))

    status = CONVERGED
    if report.tail_residual > terrace_tail_rel * wave.max_V:
        # window converged onto a wave whose tail is not any admissible
        # steady state: the lowest floor of a terrace
        status = TERRACE
    elif lreport is not None and lreport.final_gap > terrace_tail_rel * wave.max_V:
        status = TERRACE

    return WavePipelineResult(
        status=status,
        record=record,
        sequence=seq,
        wave=wave,
        report=report,
        linfty=lreport,
        q1=q1,
        q2=q2,
        diagnostics=diagnostics,
    )
