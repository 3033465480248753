"""Jit-compiled inner loops of the front-tracking pressure stepper.

The field update is an explicit method-of-lines step of

    v_t = (m-1) v v_xx + v_x^2 + g(x, v)

on the nodes behind the tracked front b, with the cell containing b
differenced one-sidedly against the interpolated zero at b, and the front
itself advanced by Darcy's law b' = -v_x(b-0).  Everything here operates
on plain float64 arrays so the orchestration layer stays in Python.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# kernel exit statuses
RUNNING = 0
HIT_T = 1
HIT_B = 2
HIT_MAX_STEPS = 3
ABORT_NONFINITE = 4
ABORT_UNDERSHOOT = 5

LEFT_DIRICHLET = 0
LEFT_PERIODIC = 1
LEFT_REFLECT = 2


@njit(cache=True, nogil=True, inline="always")
def _fbase(u, fb_lo, fb_coefs, deg):
    for j in range(fb_lo.size - 1, -1, -1):
        if u >= fb_lo[j]:
            acc = fb_coefs[j, deg]
            for k in range(deg - 1, -1, -1):
                acc = acc * u + fb_coefs[j, k]
            return acc
    return 0.0


@njit(cache=True, nogil=True, inline="always")
def _g_pressure(v, kap_i, a_i, m, inv_em, fb_lo, fb_coefs, deg):
    # g(x, v) = m u^(m-2) f(x, u) (kappa - u) with u^(m-1) = (m-1) v / m
    if v <= 0.0:
        return 0.0
    if m == 2.0:
        u = 0.5 * v
        pref = 2.0
    else:
        w = (m - 1.0) * v / m
        u = w**inv_em
        pref = m * w / u
    return pref * a_i * _fbase(u, fb_lo, fb_coefs, deg) * (kap_i - u)


@njit(cache=True, nogil=True, inline="always")
def _locate_front(x_left, dx, b, gamma):
    """Index of the last PDE node and its distance to the front zero."""
    ib = int((b - x_left) / dx)
    hb = b - (x_left + ib * dx)
    if hb >= gamma * dx:
        return ib, hb
    return ib - 1, hb + dx


@njit(cache=True, nogil=True)
def front_slope(v, x_left, dx, b, gamma, order=2):
    """One-sided Darcy slope -v_x(b-0).

    Quadratic through the zero at b and the last two PDE nodes; linear
    when ``order`` is 1 or too few nodes are active.  This is exactly the
    expression the stepper feeds to the front ODE.
    """
    j, h1 = _locate_front(x_left, dx, b, gamma)
    if j < 1 or order < 2:
        if j < 0:
            return 0.0
        return v[j] / h1
    h2 = h1 + dx
    return (v[j] * h2 * h2 - v[j - 1] * h1 * h1) / (h1 * h2 * (h2 - h1))


@njit(cache=True, nogil=True, fastmath={"contract", "reassoc", "arcp"})
def advance(
    v,
    kap,
    a_mod,
    fb_lo,
    fb_coefs,
    m,
    dx,
    x_left,
    b,
    t,
    sigma,
    dt_cap,
    gamma,
    clip_tol,
    left_mode,
    left_val,
    nper,
    startup_left,
    vmax,
    t_stop,
    b_stop,
    max_steps,
    traj_t,
    traj_b,
    traj_s,
    stride,
    step0,
    stencil_order,
):
    """Advance until t_stop, b_stop or max_steps; returns the run state.

    Trajectory samples are written every ``stride`` steps into the
    preallocated buffers.  ``vmax`` is the sup of v maintained across
    steps (one step lagged) and drives the parabolic dt limit.
    """
    n = v.size
    steps = 0
    nrec = 0
    clipped = 0.0
    status = RUNNING
    slope = 0.0
    i_bad = -1
    inv_dx = 1.0 / dx
    inv_dx2 = inv_dx * inv_dx
    inv_em = 1.0 / (m - 1.0)
    deg = fb_coefs.shape[1] - 1
    # centered differencing is diffusion-dominated only where (m-1) v
    # outweighs the cell transport, i.e. a few cells behind the front
    collar_nodes = 2 + int(2.0 / (m - 1.0))

    i0 = 1
    if left_mode == LEFT_REFLECT:
        i0 = 0

    while True:
        # time step: parabolic limit plus the reaction cap
        denom = 2.0 * (m - 1.0) * vmax
        if denom < 1e-12:
            denom = 1e-12
        dt = sigma * dx * dx / denom
        if dt_cap > 0.0 and dt > dt_cap:
            dt = dt_cap
        if startup_left > 0:
            dt *= 0.25
            startup_left -= 1
        last = False
        if t + dt >= t_stop:
            dt = t_stop - t
            last = True
            if dt <= 0.0:
                status = HIT_T
                break

        j, hfront = _locate_front(x_left, dx, b, gamma)
        if j < i0:
            status = ABORT_NONFINITE
            i_bad = j
            break
        h2 = hfront + dx
        if j >= i0 + 1 and stencil_order >= 2:
            slope = (v[j] * h2 * h2 - v[j - 1] * hfront * hfront) / (
                hfront * h2 * (h2 - hfront)
            )
        else:
            slope = v[j] / hfront
        if slope < 0.0:
            slope = 0.0

        # field update, in place with a saved old-left value;
        # centered v_x where the equation is uniformly parabolic, upwind in
        # the degenerate collar near the front
        if left_mode == LEFT_REFLECT:
            prev = v[1]
        else:
            prev = v[0]
        j_centered = j - collar_nodes
        new_vmax = 0.0
        for i in range(i0, j):
            vi = v[i]
            nxt = v[i + 1]
            vxx = (prev - 2.0 * vi + nxt) * inv_dx2
            dl = (vi - prev) * inv_dx
            dr = (nxt - vi) * inv_dx
            if i < j_centered:
                vx = 0.5 * (dl + dr)
            else:
                vx = dl if dl + dr < 0.0 else dr
            g = _g_pressure(vi, kap[i], a_mod[i], m, inv_em, fb_lo, fb_coefs, deg)
            newv = vi + dt * ((m - 1.0) * vi * vxx + vx * vx + g)
            if not np.isfinite(newv):
                status = ABORT_NONFINITE
                i_bad = i
                break
            if newv < 0.0:
                if newv > -clip_tol:
                    clipped += -newv * dx
                    newv = 0.0
                else:
                    status = ABORT_UNDERSHOOT
                    i_bad = i
                    break
            prev = vi
            v[i] = newv
            if newv > new_vmax:
                new_vmax = newv
        if status == RUNNING:
            # front cell: one-sided against the interpolated zero at b
            i = j
            vi = v[j]
            vxx = 2.0 * (prev / (dx * h2) - vi / (dx * hfront))
            dl = (vi - prev) * inv_dx
            dr = -vi / hfront
            vx = dl if dl + dr < 0.0 else dr
            g = _g_pressure(vi, kap[j], a_mod[j], m, inv_em, fb_lo, fb_coefs, deg)
            newv = vi + dt * ((m - 1.0) * vi * vxx + vx * vx + g)
            if not np.isfinite(newv):
                status = ABORT_NONFINITE
                i_bad = i
                break
            if newv < 0.0:
                if newv > -clip_tol:
                    clipped += -newv * dx
                    newv = 0.0
                else:
                    status = ABORT_UNDERSHOOT
                    i_bad = i
                    break
            prev = vi
            v[i] = newv
            if newv > new_vmax:
                new_vmax = newv
        if status != RUNNING:
            break
        if left_mode != LEFT_REFLECT and v[0] > new_vmax:
            new_vmax = v[0]
        vmax = new_vmax

        # front ODE and activation of newly covered nodes
        b = b + dt * slope
        ib2 = int((b - x_left) / dx)
        if ib2 > n - 2:
            ib2 = n - 2
        for i in range(j + 1, ib2 + 1):
            xi = x_left + i * dx
            val = slope * (b - xi)
            v[i] = val if val > 0.0 else 0.0

        # left boundary
        if left_mode == LEFT_DIRICHLET:
            v[0] = left_val
        elif left_mode == LEFT_PERIODIC:
            v[0] = v[nper]

        t += dt
        steps += 1
        if (step0 + steps) % stride == 0 and nrec < traj_t.size:
            traj_t[nrec] = t
            traj_b[nrec] = b
            traj_s[nrec] = slope
            nrec += 1

        if b >= b_stop:
            status = HIT_B
            break
        if last or t >= t_stop:
            status = HIT_T
            break
        if steps >= max_steps:
            status = HIT_MAX_STEPS
            break

    return status, t, b, steps, startup_left, vmax, clipped, slope, nrec, i_bad
