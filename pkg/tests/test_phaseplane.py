"""Shooting and lower-reaction construction checks.

The high-accuracy oracle integrates the traveling-profile system in the
z parametrization, (q, w)(z), which is a different chart from the
production flux-vs-density integration; the two must land on the same
support and touchdown flux.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import make_env
from sharpwave.model import PiecewisePoly, pressure_from_density
from sharpwave.phaseplane import (
    NoTouchdownError,
    ShootError,
    build_f0,
    check_integral_condition,
    shoot_compact_wave,
    verify_F2,
)

FISHER_F0 = PiecewisePoly(((0.0, (0.0, 1.0, -1.0)), (1.0, (0.0,))))


def oracle_branch(f0, m, c, q0, side, q_floor=1e-6):
    """Integrate dq/dz, dw/dz from the peak; independent z-chart oracle.

    The z chart is singular at touchdown (q' blows up with the flux
    positive), so the oracle stops at a small density floor; the missing
    support length is O(q_floor^m) and far below the comparison tolerance.
    """
    eps = 1e-9 * q0
    w0 = np.sqrt(2.0 * m * q0 ** (m - 1.0) * f0(q0) * eps)
    z0 = np.sqrt(2.0 * m * q0 ** (m - 1.0) * eps / f0(q0))

    def rhs(z, y):
        q, w = y
        qp = -w / (m * q ** (m - 1.0))
        wp = c * qp + f0(q) if side > 0 else -c * qp + f0(q)
        return [qp, wp]

    def touchdown(z, y):
        return y[0] - q_floor

    touchdown.terminal = True
    touchdown.direction = -1
    sol = solve_ivp(
        rhs,
        (z0, 1e3),
        [q0 - eps, w0],
        method="DOP853",
        rtol=1e-9,
        atol=1e-13,
        events=touchdown,
    )
    assert sol.status == 1, "oracle did not touch down"
    z_end = float(sol.t_events[0][0])
    w_end = float(sol.y_events[0][0][1])
    return z_end, w_end


class TestIntegralCondition:
    def test_fisher_margin_and_F0(self):
        res = check_integral_condition(FISHER_F0, 2.0, 1.0)
        assert res.passed
        assert res.F0 == pytest.approx(1.0 / 12.0, abs=1e-12)

    def test_negative_profile_fails(self):
        neg = FISHER_F0.scale(-1.0)
        res = check_integral_condition(neg, 2.0, 1.0)
        assert not res.passed

    def test_balanced_bistable_margin_zero(self):
        # tune the unstable zero a of r^1 * r(r-a)(1-r) until the full
        # integral vanishes, then the condition must fail (margin <= 0)
        def total(a):
            f = PiecewisePoly(((0.0, (0.0, -a, 1.0 + a, -1.0)), (1.0, (0.0,))))
            return f.weighted_integral(2.0, 0.0, 1.0)

        lo, hi = 0.1, 0.9
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if total(mid) > 0:
                lo = mid
            else:
                hi = mid
        a_star = 0.5 * (lo + hi)
        balanced = PiecewisePoly(((0.0, (0.0, -a_star, 1.0 + a_star, -1.0)), (1.0, (0.0,))))
        res = check_integral_condition(balanced, 2.0, 1.0)
        assert not res.passed
        assert res.margin == pytest.approx(0.0, abs=1e-8)
        assert res.argmin == pytest.approx(0.0, abs=1e-3)

    def test_requires_vanishing_endpoints(self):
        bad = PiecewisePoly(((0.0, (0.1,)),))
        with pytest.raises(ValueError):
            check_integral_condition(bad, 2.0, 1.0)


class TestBuildF0:
    def test_monostable_shape(self, fisher_env):
        f0 = build_f0(fisher_env, "monostable")
        # zero up to kappa0/2, positive hump beyond
        assert f0(0.25) == 0.0
        assert f0(0.75) > 0.0
        assert abs(f0(0.5)) < 1e-14 and abs(f0(1.0)) < 1e-14
        us = np.linspace(0.0, 1.0, 401)
        gap = fisher_env.f(0.0, us) * (1.0 - us) - f0(us)
        assert gap.min() >= -1e-12

    def test_combustion_threshold(self, combustion_env):
        f0 = build_f0(combustion_env, "combustion")
        # hump starts at (theta + kappa0)/2 = 0.65
        assert f0(0.649) == 0.0
        assert f0(0.651) > 0.0

    def test_bistable_qualifies(self, bistable_env):
        f0 = build_f0(bistable_env, "bistable")
        res = check_integral_condition(f0, bistable_env.m, 1.0)
        assert res.passed
        us = np.linspace(0.0, 1.0, 801)
        gap = bistable_env.f(0.3, us) * (1.0 - us) - f0(us)
        assert gap.min() >= -1e-9

    def test_bistable_gate_failure(self):
        # unstable zero at 0.7 tips the weighted integral negative
        # (threshold for u(u-a) with m = 2, kappa = 1 is a = 0.6)
        base = PiecewisePoly(((0.0, (0.0, -0.7, 1.0)),))
        env = make_env(family="bistable", theta=0.7, base=base)
        with pytest.raises(ShootError, match="F3 not verifiable"):
            build_f0(env, "bistable")


class TestShooting:
    def test_c0_symmetric(self):
        sub = shoot_compact_wave(FISHER_F0, 2.0, 0.0, 0.95)
        ipk = int(np.argmax(sub.phi))
        assert abs(sub.z_grid[ipk]) < 1e-8

    def test_fisher_profile_against_oracle(self):
        m, c, q0 = 2.0, 0.05, 0.95
        sub = shoot_compact_wave(FISHER_F0, m, c, q0)
        assert sub.edge_slope > c
        zr, wr = oracle_branch(FISHER_F0, m, c, q0, +1)
        zl, wl = oracle_branch(FISHER_F0, m, c, q0, -1)
        l0_oracle = 0.5 * (zr + zl)
        assert sub.l0 == pytest.approx(l0_oracle, rel=1e-6)
        assert sub.edge_flux == pytest.approx(wr, rel=1e-6)

    def test_energy_identity(self):
        # 1/2 w(0)^2 = m * int r^{m-1} f0 - c * int w dq along the orbit
        m, c, q0 = 2.0, 0.05, 0.95
        sub = shoot_compact_wave(FISHER_F0, m, c, q0)
        lhs = 0.5 * sub.edge_flux**2
        imax = int(np.argmax(sub.phi))
        q_branch = sub.phi[imax:]
        z_branch = sub.z_grid[imax:]
        # w(z) = -(q^m)' along the right branch, from the sampled profile
        qm = q_branch**m
        w_br = -np.gradient(qm, z_branch)
        int_w_dq = -np.trapezoid(w_br, q_branch)
        rhs = m * FISHER_F0.weighted_integral(m, 0.0, q0) - c * int_w_dq
        assert lhs == pytest.approx(rhs, rel=2e-3)

    def test_large_c_fails(self):
        with pytest.raises(ShootError):
            shoot_compact_wave(FISHER_F0, 2.0, 10.0, 0.95)

    def test_peak_outside_hump_fails(self, fisher_env):
        f0 = build_f0(fisher_env, "monostable")
        with pytest.raises(NoTouchdownError):
            shoot_compact_wave(f0, 2.0, 0.05, 0.3)  # below theta1: f0(q0) = 0

    def test_monotone_in_c(self):
        q0 = 0.95
        excess = []
        for c in (0.0, 0.05, 0.1, 0.2):
            sub = shoot_compact_wave(FISHER_F0, 2.0, c, q0)
            excess.append(sub.edge_slope - c)
        assert all(b <= a + 1e-6 for a, b in zip(excess, excess[1:]))

    def test_recentering_invariance(self):
        a = shoot_compact_wave(FISHER_F0, 2.0, 0.08, 0.9, n_z=1201)
        b = shoot_compact_wave(FISHER_F0, 2.0, 0.08, 0.9, n_z=1201, rtol=1e-12)
        assert np.abs(a.phi - b.phi).max() < 1e-8

    def test_pressure_column(self):
        sub = shoot_compact_wave(FISHER_F0, 2.0, 0.05, 0.95)
        assert np.allclose(sub.psi, pressure_from_density(sub.phi, 2.0))


class TestVerifyF2:
    def test_fisher_passes(self, fisher_env):
        f0 = build_f0(fisher_env, "monostable", c=0.05)
        sub = shoot_compact_wave(f0, fisher_env.m, 0.05, 0.95)
        rep = verify_F2(fisher_env, sub)
        assert rep.passed
        assert rep.edge_ok

    def test_dipping_kappa_fails_with_witness(self, fisher_env):
        f0 = build_f0(fisher_env, "monostable")
        sub = shoot_compact_wave(f0, fisher_env.m, 0.05, 0.95)
        dipped = make_env(kappa_amp=0.6)  # kappa_0 = 0.4 < peak 0.95
        rep = verify_F2(dipped, sub)
        assert not rep.passed
        x_w, z_w = rep.witness
        phi_w = sub.density_at(z_w)
        assert dipped.kappa(x_w) < phi_w  # the bracket really is negative there

    def test_edges_contribute_zero(self, fisher_env):
        f0 = build_f0(fisher_env, "monostable")
        sub = shoot_compact_wave(f0, fisher_env.m, 0.05, 0.95)
        # at z = +-l0 the inequality reads 0 >= 0
        assert fisher_env.f(0.3, 0.0) * (fisher_env.kappa(0.3) - 0.0) - f0(0.0) == 0.0
