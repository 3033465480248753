"""Minimal and maximal 1-periodic positive stationary solutions.

The two distinguished steady states in the range [kappa_0, kappa^0] are
obtained by marching the density equation on one period from constant
data: from (kappa_0 + theta)/2 the iterates increase to the minimal one,
from kappa^0 + 1 they decrease to the maximal one.  The march stays
uniformly positive, so no front logic is involved; a Newton polish on the
same discrete operator then drives the residual to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from sharpwave.model import Environment, pressure_from_density, reaction_density, require_F1

__all__ = [
    "PeriodicSteadyState",
    "StationaryError",
    "find_min_steady",
    "find_max_steady",
    "steady_residual",
]


class StationaryError(RuntimeError):
    """March failed to reach stationarity; carries the last residual."""

    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class PeriodicSteadyState:
    """A periodic steady state sampled on one period.

    ``p`` are density samples at x_j = j/n, ``q`` the matching pressure
    samples, ``residual`` the sup-norm of the discrete stationary equation.
    """

    p: np.ndarray
    q: np.ndarray
    residual: float
    kind: str  # "minimal" | "maximal" | "other"
    m: float

    @property
    def n(self) -> int:
        return self.p.size

    def x(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def q_at(self, x) -> np.ndarray:
        """Pressure at arbitrary points by periodic linear interpolation.

        Node-exact whenever x falls on the sampling grid, which is what the
        solver relies on for translation-equivariant initial data.
        """
        x = np.asarray(x, dtype=float)
        s = (x % 1.0) * self.n
        i0 = np.floor(s).astype(np.int64) % self.n
        w = s - np.floor(s)
        i1 = (i0 + 1) % self.n
        out = (1.0 - w) * self.q[i0] + w * self.q[i1]
        return out if out.ndim else float(out)


@njit(cache=True, nogil=True)
def _march(p, kap, a, fb_lo, fb_coefs, m, dx, t_goal, sigma):
    """Explicit march of u_t = D2(u^m) + a(x) f_base(u) (kappa - u), periodic."""
    n = p.size
    pm = np.empty(n)
    t = 0.0
    m_int = int(m) if m == int(m) else 0
    umax = 0.0
    for i in range(n):
        if p[i] > umax:
            umax = p[i]
    while t < t_goal:
        dt = sigma * dx * dx / (2.0 * m * umax ** (m - 1.0))
        if t + dt > t_goal:
            dt = t_goal - t
        if m_int == 2:
            for i in range(n):
                pm[i] = p[i] * p[i]
        elif m_int == 3:
            for i in range(n):
                pm[i] = p[i] * p[i] * p[i]
        else:
            for i in range(n):
                pm[i] = p[i] ** m
        umax = 0.0
        for i in range(n):
            lap = (pm[(i - 1) % n] - 2.0 * pm[i] + pm[(i + 1) % n]) / (dx * dx)
            u = p[i]
            fb = 0.0
            for j in range(fb_lo.size - 1, -1, -1):
                if u >= fb_lo[j]:
                    acc = 0.0
                    for k in range(fb_coefs.shape[1] - 1, -1, -1):
                        acc = acc * u + fb_coefs[j, k]
                    fb = acc
                    break
            p[i] = u + dt * (lap + a[i] * fb * (kap[i] - u))
            if p[i] > umax:
                umax = p[i]
        t += dt
    return t


def _coefficients(env: Environment, n: int):
    xs = np.arange(n) / n
    kap = env.kappa(xs)
    a = env.reaction.modulation(xs)
    fb_lo, fb_coefs = env.reaction.base.as_arrays()
    return kap, a, fb_lo, fb_coefs


def steady_residual(env: Environment, p: np.ndarray) -> float:
    """Sup-norm of D2(p^m) + f(x, p)(kappa - p) with periodic wrap."""
    p = np.asarray(p, dtype=float)
    n = p.size
    xs = np.arange(n) / n
    dx = 1.0 / n
    pm = p**env.m
    lap = (np.roll(pm, 1) - 2.0 * pm + np.roll(pm, -1)) / dx**2
    return float(np.abs(lap + reaction_density(env, xs, p)).max())


def _newton_polish(env: Environment, p: np.ndarray, max_iter: int = 30) -> np.ndarray:
    """Newton iterations on the discrete stationary system."""
    n = p.size
    dx = 1.0 / n
    xs = np.arange(n) / n
    kap = env.kappa(xs)
    a = env.reaction.modulation(xs)
    m = env.m
    base = env.reaction.base
    du = 1e-7

    p = p.copy()
    for _ in range(max_iter):
        pm = p**m
        lap = (np.roll(pm, 1) - 2.0 * pm + np.roll(pm, -1)) / dx**2
        rvals = a * base(p) * (kap - p)
        res = lap + rvals
        if np.abs(res).max() < 1e-13:
            break
        dpm = m * p ** (m - 1.0)
        drdu = (a * base(p + du) * (kap - (p + du)) - rvals) / du
        jac = np.zeros((n, n))
        idx = np.arange(n)
        jac[idx, idx] = -2.0 * dpm / dx**2 + drdu
        jac[idx, (idx + 1) % n] = dpm[(idx + 1) % n] / dx**2
        jac[idx, (idx - 1) % n] = dpm[(idx - 1) % n] / dx**2
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        new = p + step
        if np.any(new <= 0.0):
            break
        p = new
    return p


def _find_steady(
    env: Environment,
    start: float,
    kind: str,
    tol: float,
    n: int,
    max_time: float,
    return_iterates: bool,
):
    require_F1(env)
    kap, a, fb_lo, fb_coefs = _coefficients(env, n)
    dx = 1.0 / n
    p = np.full(n, start)
    iterates = [p.copy()]
    res = np.inf
    t, chunk = 0.0, 1.0
    while t < max_time:
        _march(p, kap, a, fb_lo, fb_coefs, env.m, dx, chunk, 0.45)
        t += chunk
        iterates.append(p.copy())
        change = np.abs(iterates[-1] - iterates[-2]).max()
        # a Newton polish on the same discrete operator finishes the job as
        # soon as the march has entered the basin of its limit
        polished = _newton_polish(env, p.copy())
        if np.abs(polished - p).max() <= max(10.0 * change, 1e-4):
            res = steady_residual(env, polished)
            if res <= tol:
                p = polished
                break
        if change <= 0.1 * tol:
            res = steady_residual(env, p)
            if res <= tol:
                break
    else:
        raise StationaryError(f"no stationarity after t={max_time}", res)

    state = PeriodicSteadyState(
        p=p,
        q=pressure_from_density(p, env.m),
        residual=res,
        kind=kind,
        m=env.m,
    )
    if return_iterates:
        return state, iterates
    return state


def find_min_steady(
    env: Environment,
    tol: float = 1e-6,
    n: int = 256,
    max_time: float = 400.0,
    return_iterates: bool = False,
):
    """Minimal periodic steady state in [kappa_0, kappa^0].

    Marches from the constant (kappa_0 + theta)/2; the iterates increase in
    time toward the minimal steady state.
    """
    k0, _ = env.kappa_range()
    return _find_steady(
        env, 0.5 * (k0 + env.theta), "minimal", tol, n, max_time, return_iterates
    )


def find_max_steady(
    env: Environment,
    tol: float = 1e-6,
    n: int = 256,
    max_time: float = 400.0,
    return_iterates: bool = False,
):
    """Maximal periodic steady state, marched down from kappa^0 + 1."""
    _, ksup = env.kappa_range()
    return _find_steady(env, ksup + 1.0, "maximal", tol, n, max_time, return_iterates)
