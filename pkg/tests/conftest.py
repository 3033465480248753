"""Shared environments, slow pipeline runs, and acceptance reporting."""

import pytest

from sharpwave.fixtures import load_fixture
from sharpwave.model import Environment, HarmonicFunction, PiecewisePoly, ReactionSpec


def make_env(m=2.0, kappa_amp=0.0, family="monostable", theta=0.01, base=None, mod_amp=0.0):
    kappa = HarmonicFunction(1.0, ((kappa_amp, 1, 0.0),) if kappa_amp else ())
    if base is None:
        base = PiecewisePoly(((0.0, (0.0, 1.0)),))
    mod = HarmonicFunction(1.0, ((mod_amp, 1, 0.0),) if mod_amp else ())
    return Environment(m=m, kappa=kappa, reaction=ReactionSpec(family=family, theta=theta, base=base, modulation=mod))


@pytest.fixture(scope="session")
def fisher_env():
    return load_fixture("fisher")


@pytest.fixture(scope="session")
def periodic_env():
    return load_fixture("periodic_monostable")


@pytest.fixture(scope="session")
def combustion_env():
    return load_fixture("combustion03")


@pytest.fixture(scope="session")
def bistable_env():
    return load_fixture("bistable025")


@pytest.fixture(scope="session")
def terrace_env():
    return load_fixture("multistable_terrace")


@pytest.fixture(scope="session")
def no_reaction_env():
    return make_env(family="custom", base=PiecewisePoly(((0.0, (0.0,)),)))


@pytest.fixture(scope="session")
def verified_zkb():
    """Symbolic substitution check of the self-similar solution, run once
    before any solver comparison uses it."""
    import sympy as s

    x, t, C = s.symbols("x t C", positive=True)
    for m_val in (2, 3):
        m = s.Integer(m_val)
        k = s.Rational(1, m_val + 1)
        u = t ** (-k) * (C - k * (m - 1) / (2 * m) * x**2 * t ** (-2 * k)) ** (s.Rational(1, m_val - 1))
        residual = s.simplify(s.diff(u, t) - s.diff(u**m, x, 2))
        assert residual == 0, f"self-similar formula fails substitution for m={m_val}"
    return True


@pytest.fixture(scope="session")
def verified_fisher_wave():
    """Substitution check of the exact sharp wave u = (1 - e^(z/2))_+ with
    speed 1 for m = 2, f = u, kappa = 1, including the Darcy edge slope."""
    import sympy as s

    z = s.symbols("z")
    u = 1 - s.exp(z / 2)
    residual = s.simplify(s.diff(u**2, z, 2) + s.diff(u, z) + u * (1 - u))
    assert residual == 0
    v = 2 * u  # pressure at m = 2
    edge_slope = -s.diff(v, z).subs(z, 0)
    assert s.simplify(edge_slope - 1) == 0  # Darcy: front speed = 1 = c
    return True


# ---------------------------------------------------------------------------
# slow shared pipeline runs (computed once per session, on demand)
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def fisher_wave_256(fisher_env):
    """Fisher pipeline at dx = 1/256 (exact-wave acceptance run)."""
    from sharpwave.pipeline import run_wave_pipeline

    return run_wave_pipeline(fisher_env, dx=1.0 / 256, n_max=12, window=(-6.0, 2.0), tol=1e-3)


@pytest.fixture(scope="session")
def periodic_wave_128(periodic_env):
    """Modulated pipeline at dx = 1/128 with the wide tail window."""
    from sharpwave.pipeline import run_wave_pipeline

    return run_wave_pipeline(
        periodic_env,
        dx=1.0 / 128,
        n_max=12,
        window=(-17.0, 2.0),
        tol=1e-3,
        tail_tol_abs=1e-3,
    )


@pytest.fixture(scope="session")
def periodic_wave_256(periodic_env):
    """Same environment at halved dx, for the T self-consistency check."""
    from sharpwave.pipeline import run_wave_pipeline

    # only the period T matters here (it comes from the crossing clock), so
    # a looser window tolerance keeps the halved run short
    return run_wave_pipeline(periodic_env, dx=1.0 / 256, n_max=10, window=(-8.0, 2.0), tol=2.5e-3)


@pytest.fixture(scope="session")
def linfty_mono_128(periodic_env):
    from sharpwave.pipeline import run_wave_pipeline

    return run_wave_pipeline(
        periodic_env, dx=1.0 / 128, n_max=13, window=(-12.0, 2.0), tol=1e-3, start="minimal", linfty=True
    )


@pytest.fixture(scope="session")
def linfty_combustion_128(combustion_env):
    from sharpwave.pipeline import run_wave_pipeline

    return run_wave_pipeline(
        combustion_env, dx=1.0 / 128, n_max=13, window=(-12.0, 2.0), tol=1e-3, start="minimal", linfty=True
    )


@pytest.fixture(scope="session")
def terrace_run_128(terrace_env):
    from sharpwave.pipeline import run_wave_pipeline

    return run_wave_pipeline(
        terrace_env, dx=1.0 / 128, n_max=12, window=(-6.0, 2.0), tol=1e-3, start="minimal", linfty=True
    )


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion at the end of the session
# ---------------------------------------------------------------------------

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record_criterion(name: str, ok: bool, detail: str = ""):
    _ACCEPTANCE[name] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in _ACCEPTANCE.items():
        mark = "PASS" if ok else "FAIL"
        line = f"[{mark}] {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
