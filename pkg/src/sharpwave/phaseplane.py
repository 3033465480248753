"""Compactly supported traveling-wave subsolutions by phase-plane shooting.

A traveling profile q(z) of the homogeneous comparison equation solves

    (q^m)'' + c q' + f0(q) = 0,

and the right-moving compact subsolutions are the orbits that leave the
interior maximum (q = q0, q' = 0) and reach q = 0 on both sides.  The
shooting is done in the flux variable w = -(q^m)' as a function of q,

    dw/dq = c - m q^(m-1) f0(q) / w,      dz/dq = -m q^(m-1) / w,

which is regular through touchdown: orbits hit q = 0 with a finite
positive flux, while both the density slope q' and the pressure slope
psi' blow up there.  The reported edge steepness is therefore the
one-sided pressure slope measured at the profile's grid scale, which is
the quantity any grid-based comparison actually sees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from sharpwave.model import Environment, PiecewisePoly, pressure_from_density, reaction_density

__all__ = [
    "CompactSubsolution",
    "IntegralConditionResult",
    "F2Report",
    "ShootError",
    "NoTouchdownError",
    "SubsolutionConditionError",
    "check_integral_condition",
    "build_f0",
    "shoot_compact_wave",
    "verify_F2",
]


class ShootError(RuntimeError):
    pass


class NoTouchdownError(ShootError):
    """The orbit turned around before reaching q = 0."""


class SubsolutionConditionError(ShootError):
    """Touchdown reached but the edge is not steeper than the speed."""


@dataclass(frozen=True)
class CompactSubsolution:
    """Compact traveling profile recentered onto [-l0, l0].

    ``phi`` are density samples on ``z_grid``; ``psi`` the matching
    pressure samples.  ``edge_slope`` is -psi'(l0-0) measured one-sided at
    the grid scale against the touchdown zero; ``edge_flux`` is the exact
    touchdown value of -(q^m)'.
    """

    c: float
    q0: float
    m: float
    z_grid: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    l0: float
    edge_slope: float
    edge_flux: float
    f0: PiecewisePoly

    def density_at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = np.interp(z, self.z_grid, self.phi, left=0.0, right=0.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class IntegralConditionResult:
    """Outcome of the weighted-integral positivity check.

    ``F`` holds F(u) = integral of r^(m-1) f0(r) over [u, kappa0] on the
    sample grid; the condition requires min F > 0.
    """

    passed: bool
    margin: float
    F0: float
    argmin: float
    u: np.ndarray
    F: np.ndarray


def check_integral_condition(
    f0: PiecewisePoly, m: float, kappa0: float, n: int = 2048
) -> IntegralConditionResult:
    """Check F(u) > 0 for u in [0, kappa0) with exact piecewise integration."""
    if abs(f0(0.0)) > 1e-10 or abs(f0(kappa0)) > 1e-10:
        raise ValueError("f0 must vanish at 0 and kappa0")
    u = np.linspace(0.0, kappa0, n, endpoint=False)
    F = np.array([f0.weighted_integral(m, ui, kappa0) for ui in u])
    i = int(np.argmin(F))
    return IntegralConditionResult(
        passed=bool(F[i] > 0.0),
        margin=float(F[i]),
        F0=float(F[0]),
        argmin=float(u[i]),
        u=u,
        F=F,
    )


# ---------------------------------------------------------------------------
# explicit lower reactions f0
# ---------------------------------------------------------------------------


def _hump_pieces(theta_c: float, kappa0: float, delta: float) -> PiecewisePoly:
    # delta*(u - theta_c)*(kappa0 - u) on [theta_c, kappa0], zero elsewhere
    c0 = -delta * theta_c * kappa0
    c1 = delta * (theta_c + kappa0)
    c2 = -delta
    return PiecewisePoly(
        (
            (0.0, (0.0,)),
            (theta_c, (c0, c1, c2)),
            (kappa0, (0.0,)),
        )
    )


def _mul_linear(coefs: tuple[float, ...], alpha: float) -> tuple[float, ...]:
    # polynomial product coefs(u) * (alpha - u)
    out = [0.0] * (len(coefs) + 1)
    for k, c in enumerate(coefs):
        out[k] += alpha * c
        out[k + 1] -= c
    return tuple(out)


def _bistable_pieces(env: Environment) -> PiecewisePoly:
    """min_x f(x, u) times the worst-case bracket, piecewise.

    For u < theta the reaction is negative, so the lower bound uses the
    largest bracket (kappa^0 - u); above theta it uses (kappa_0 - u).
    """
    k0, ksup = env.kappa_range()
    a_min, a_max = env.reaction.modulation.min_max()
    theta = env.theta
    base = env.reaction.base

    edges = sorted({0.0, theta, k0} | {lo for lo, _ in base.pieces if 0.0 < lo < k0})
    pieces: list[tuple[float, tuple[float, ...]]] = []
    for lo in edges:
        if lo >= k0:
            break
        base_coefs = None
        for plo, coefs in reversed(base.pieces):
            if plo <= lo:
                base_coefs = coefs
                break
        scale, bracket = (a_max, ksup) if lo < theta else (a_min, k0)
        coefs = _mul_linear(tuple(scale * c for c in base_coefs), bracket)
        pieces.append((lo, coefs))
    pieces.append((k0, (0.0,)))
    return PiecewisePoly(tuple(pieces))


def _domination_margin(env: Environment, f0: PiecewisePoly, nx: int = 128, nu: int = 512) -> float:
    """min over (x, u) of f(x, u)(kappa - u) - f0(u) on [0, 1) x [0, kappa0]."""
    k0, _ = env.kappa_range()
    xs = np.linspace(0.0, 1.0, nx, endpoint=False)
    us = np.linspace(0.0, k0, nu)
    X, U = np.meshgrid(xs, us, indexing="ij")
    gap = reaction_density(env, X, U) - f0(U)
    return float(gap.min())


def build_f0(
    env: Environment,
    case: str,
    c: float | None = None,
    q0: float | None = None,
    delta_init: float = 0.5,
    max_halvings: int = 20,
) -> PiecewisePoly:
    """Construct the lower reaction f0(u) for the requested regime.

    monostable / combustion: a quadratic hump on [theta_c, kappa0] with
    amplitude halved until the domination f(x,u)(kappa-u) >= f0(u) holds
    (and, when c is given, until the compact shoot succeeds).  bistable:
    the pointwise-in-x lower envelope, admissible only when its weighted
    integral stays positive.
    """
    k0, _ = env.kappa_range()
    if case in ("monostable", "combustion"):
        theta_c = 0.5 * k0 if case == "monostable" else 0.5 * (env.theta + k0)
        delta = delta_init
        for _ in range(max_halvings):
            f0 = _hump_pieces(theta_c, k0, delta)
            if _domination_margin(env, f0) >= -1e-12:
                break
            delta *= 0.5
        else:
            raise ShootError(f"domination not achievable for {case} after {max_halvings} halvings")
    elif case == "bistable":
        f0 = _bistable_pieces(env)
        cond = check_integral_condition(f0, env.m, k0)
        if not cond.passed:
            raise ShootError(
                "F3 not verifiable: weighted integral nonpositive "
                f"(min {cond.margin:.3e} at u = {cond.argmin:.4f})"
            )
        if _domination_margin(env, f0) < -1e-9:
            raise ShootError("F3 not verifiable: lower envelope exceeded the reaction")
    else:
        raise ValueError(f"unsupported case {case!r}")

    cond = check_integral_condition(f0, env.m, k0)
    if not cond.passed:
        raise ShootError(f"integral condition failed (margin {cond.margin:.3e})")
    if c is not None:
        # amplitude halving cannot fix a failed shoot (smaller f0 weakens the
        # orbit), so a failure here propagates with the shoot diagnostics
        shoot_compact_wave(f0, env.m, c, q0 if q0 is not None else 0.95 * k0)
    return f0


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------


def _shoot_branch(f0, m: float, c: float, q0: float, side: int, rtol: float, z_budget: float):
    """Integrate (w, z) in q from the peak to touchdown on one side.

    side = +1 is the right branch (z increasing, w = -(q^m)'); side = -1
    the left branch with w = +(q^m)'.  Returns (q_samples, w_samples,
    z_samples) with q decreasing from q0 to 0.
    """
    fq0 = f0(q0)
    if fq0 <= 0.0:
        raise NoTouchdownError(f"f0(q0) = {fq0:.3e} <= 0: no orbit leaves the peak at q0 = {q0}")

    eps = 1e-9 * q0
    qs = q0 - eps
    # leading series about the degenerate start (q0, w = 0)
    w_start = np.sqrt(2.0 * m * q0 ** (m - 1.0) * fq0 * eps)
    z_start = np.sqrt(2.0 * m * q0 ** (m - 1.0) * eps / fq0)

    ceff = side * c

    def rhs(q, y):
        w = y[0]
        return [ceff - m * q ** (m - 1.0) * f0(q) / w, -m * q ** (m - 1.0) / w]

    def turned(q, y):
        return y[0] - 1e-12
    turned.terminal = True
    turned.direction = -1

    def budget(q, y):
        # large-c orbits creep along w ~ m q^(m-1) f0 / c with an infinite
        # tail in z; cut them off at the budget
        return z_budget - y[1]
    budget.terminal = True
    budget.direction = -1

    sol = solve_ivp(
        rhs,
        (qs, 0.0),
        [w_start, z_start],
        method="DOP853",
        rtol=rtol,
        atol=1e-14,
        events=(turned, budget),
        dense_output=True,
        max_step=q0 / 50.0,
    )
    if not sol.success:
        raise ShootError(f"integration failed: {sol.message}")
    if sol.status == 1:
        if sol.t_events[0].size:  # w hit zero before q did
            q_stop = float(sol.t_events[0][0])
            raise NoTouchdownError(
                f"orbit turned around at q = {q_stop:.4f} (q0 too small or c too large)"
            )
        raise NoTouchdownError(
            f"no touchdown within z budget {z_budget} (q0 too small or c too large)"
        )

    q_dense = np.linspace(qs, 0.0, 2000)
    w_dense, z_dense = sol.sol(q_dense)
    # prepend the exact peak
    q_dense = np.concatenate(([q0], q_dense))
    w_dense = np.concatenate(([0.0], w_dense))
    z_dense = np.concatenate(([0.0], z_dense))
    return q_dense, w_dense, side * z_dense


def shoot_compact_wave(
    f0: PiecewisePoly,
    m: float,
    c: float,
    q0: float,
    n_z: int = 801,
    rtol: float = 1e-10,
    z_budget: float = 40.0,
) -> CompactSubsolution:
    """Shoot the compact profile for speed c and peak value q0.

    Integrates both branches from the interior maximum, recenters the
    support onto [-l0, l0], and checks that the measured edge steepness
    exceeds c.  Raises :class:`NoTouchdownError` when the orbit fails to
    reach zero and :class:`SubsolutionConditionError` when the edge test
    fails.
    """
    if not (q0 > 0.0):
        raise ValueError("q0 must be positive")
    if c < 0.0:
        raise ValueError("c must be >= 0")

    q_r, w_r, z_r = _shoot_branch(f0, m, c, q0, +1, rtol, z_budget)
    q_l, _, z_l = _shoot_branch(f0, m, c, q0, -1, rtol, z_budget)

    l_plus = float(z_r[-1])
    l_minus = float(-z_l[-1])
    shift = 0.5 * (l_plus - l_minus)
    l0 = 0.5 * (l_plus + l_minus)

    z_grid = np.linspace(-l0, l0, n_z)
    phi = np.zeros(n_z)
    zp = -shift  # recentered peak position
    right = z_grid >= zp
    # both branch maps z -> q are monotone; interpolate each side separately
    phi[right] = np.interp(z_grid[right], z_r - shift, q_r)
    phi[~right] = np.interp(z_grid[~right], (z_l - shift)[::-1], q_l[::-1])
    phi[0] = 0.0
    phi[-1] = 0.0
    phi = np.clip(phi, 0.0, None)
    psi = pressure_from_density(phi, m)

    edge_slope = float(psi[-2] / (z_grid[-1] - z_grid[-2]))
    edge_flux = float(w_r[-1])
    if edge_slope <= c:
        raise SubsolutionConditionError(
            f"edge slope {edge_slope:.4f} <= c = {c}: subsolution condition violated"
        )
    return CompactSubsolution(
        c=c,
        q0=q0,
        m=m,
        z_grid=z_grid,
        phi=phi,
        psi=psi,
        l0=l0,
        edge_slope=edge_slope,
        edge_flux=edge_flux,
        f0=f0,
    )


# ---------------------------------------------------------------------------
# subsolution verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class F2Report:
    """Grid check of the moving-subsolution inequality."""

    passed: bool
    min_gap: float
    witness: tuple[float, float]  # (x, z) of the minimal gap
    edge_ok: bool
    edge_slope: float
    c: float


def verify_F2(env: Environment, sub: CompactSubsolution, nx: int = 256, nz: int = 256) -> F2Report:
    """Check that the shot profile is a subsolution of the full equation.

    Along the profile the shooting ODE holds exactly, so the inequality
    reduces to f(x, phi)(kappa(x) - phi) - f0(phi) >= 0 on the product
    grid; this avoids re-differentiating the sampled profile.
    """
    xs = np.linspace(0.0, 1.0, nx, endpoint=False)
    zs = np.linspace(-sub.l0, sub.l0, nz)
    phi = sub.density_at(zs)
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    P = np.broadcast_to(phi, Z.shape)
    gap = reaction_density(env, X, P) - sub.f0(P)
    i, j = np.unravel_index(int(np.argmin(gap)), gap.shape)
    edge_ok = sub.edge_slope > sub.c
    return F2Report(
        passed=bool(gap[i, j] >= -1e-10 and edge_ok),
        min_gap=float(gap[i, j]),
        witness=(float(xs[i]), float(zs[j])),
        edge_ok=edge_ok,
        edge_slope=sub.edge_slope,
        c=sub.c,
    )
