"""Problem data for the reaction porous-media equation.

The equation under study is

    u_t = (u^m)_xx + f(x, u) * (kappa(x) - u),    m > 1,

with ``kappa`` and ``f(., u)`` 1-periodic in x.  The reaction factor is
represented as ``f(x, u) = a(x) * f_base(u)`` where ``a`` is a positive
1-periodic modulation and ``f_base`` a piecewise polynomial whose sign
pattern selects the monostable / bistable / combustion / multistable
regime.

Everything here is immutable after construction and cheap to evaluate on
numpy arrays; the time steppers sample these coefficients once per grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HarmonicFunction",
    "PiecewisePoly",
    "ReactionSpec",
    "Environment",
    "Field",
    "F1Report",
    "EnvironmentError_",
    "pressure_from_density",
    "density_from_pressure",
    "reaction_density",
    "reaction_pressure",
    "validate_F1",
    "lipschitz_bound",
]

FAMILIES = ("monostable", "bistable", "combustion", "multistable", "custom")


class EnvironmentError_(ValueError):
    """Raised for structurally invalid problem data."""


# ---------------------------------------------------------------------------
# coefficient representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicFunction:
    """1-periodic function given as a mean plus cosine harmonics.

    ``value(x) = mean + sum_k amp_k * cos(2*pi*freq_k*x + phase_k)`` with
    integer frequencies, so periodicity holds by construction.
    """

    mean: float
    harmonics: tuple[tuple[float, int, float], ...] = ()

    def __post_init__(self):
        for amp, freq, phase in self.harmonics:
            if int(freq) != freq or freq <= 0:
                raise EnvironmentError_(f"harmonic frequency must be a positive integer, got {freq}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, self.mean, dtype=float)
        for amp, freq, phase in self.harmonics:
            out = out + amp * np.cos(2.0 * math.pi * freq * x + phase)
        return out if out.ndim else float(out)

    def min_max(self, n: int = 16384) -> tuple[float, float]:
        """Approximate range over one period by dense sampling."""
        if not self.harmonics:
            return self.mean, self.mean
        xs = np.linspace(0.0, 1.0, n, endpoint=False)
        vals = self(xs)
        return float(vals.min()), float(vals.max())

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "harmonics": [{"amp": a, "freq": int(f), "phase": p} for a, f, p in self.harmonics],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HarmonicFunction":
        harm = tuple(
            (float(h["amp"]), int(h["freq"]), float(h.get("phase", 0.0)))
            for h in obj.get("harmonics", [])
        )
        return cls(mean=float(obj["mean"]), harmonics=harm)


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial in u with breakpoints at sign-change thresholds.

    Pieces are given as (lo, coefs) with ascending-power coefficients in the
    absolute variable u; piece i is active on [lo_i, lo_{i+1}) and the last
    piece extends to +inf.  Evaluation is vectorized; integration against a
    power weight r^(m-1) is closed-form, which the phase-plane checks rely
    on.
    """

    pieces: tuple[tuple[float, tuple[float, ...]], ...]

    def __post_init__(self):
        los = [lo for lo, _ in self.pieces]
        if not los or los != sorted(los):
            raise EnvironmentError_("pieces must be nonempty and sorted by lower edge")
        if los[0] > 0.0:
            raise EnvironmentError_("first piece must start at u <= 0")

    @property
    def breakpoints(self) -> list[float]:
        return [lo for lo, _ in self.pieces]

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u, dtype=float)
        for i, (lo, coefs) in enumerate(self.pieces):
            hi = self.pieces[i + 1][0] if i + 1 < len(self.pieces) else np.inf
            mask = (u >= lo) & (u < hi)
            if mask.any():
                out[mask] = np.polynomial.polynomial.polyval(u[mask], np.asarray(coefs))
        return out if out.ndim else float(out)

    def weighted_integral(self, m: float, lo: float, hi: float) -> float:
        """Exact integral of r^(m-1) * f(r) over [lo, hi] (m real, > 1)."""
        total = 0.0
        for i, (plo, coefs) in enumerate(self.pieces):
            phi = self.pieces[i + 1][0] if i + 1 < len(self.pieces) else np.inf
            a, b = max(lo, plo), min(hi, phi)
            if a >= b:
                continue
            for k, c in enumerate(coefs):
                if c == 0.0:
                    continue
                p = k + m  # integral of c * r^(m-1+k)
                total += c * (b**p - a**p) / p
        return total

    def scale(self, factor: float) -> "PiecewisePoly":
        return PiecewisePoly(
            tuple((lo, tuple(factor * c for c in coefs)) for lo, coefs in self.pieces)
        )

    def lowest_order_at_zero(self) -> int:
        """Smallest power with nonzero coefficient in the piece containing 0."""
        _, coefs = self.pieces[0]
        for k, c in enumerate(coefs):
            if c != 0.0:
                return k
        return len(coefs)  # identically zero piece: treated as infinite order

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower edges, coefficient matrix) padded for the jit kernels."""
        los = np.array([lo for lo, _ in self.pieces], dtype=float)
        width = max(len(c) for _, c in self.pieces)
        coefs = np.zeros((len(self.pieces), width))
        for i, (_, c) in enumerate(self.pieces):
            coefs[i, : len(c)] = c
        return los, coefs

    def to_json(self) -> list:
        return [{"lo": lo, "coefs": list(coefs)} for lo, coefs in self.pieces]

    @classmethod
    def from_json(cls, obj: list) -> "PiecewisePoly":
        return cls(tuple((float(p["lo"]), tuple(float(c) for c in p["coefs"])) for p in obj))


# ---------------------------------------------------------------------------
# reaction and environment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReactionSpec:
    """Reaction factor f(x, u) = a(x) * f_base(u).

    ``family`` tags the intended sign pattern of ``f_base``; it is never
    inferred from the coefficients.  ``theta`` is the threshold above which
    f must be positive.
    """

    family: str
    theta: float
    base: PiecewisePoly
    modulation: HarmonicFunction = field(default_factory=lambda: HarmonicFunction(1.0))

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise EnvironmentError_(f"unknown reaction family {self.family!r}")
        if self.theta < 0.0:
            raise EnvironmentError_("theta must be >= 0")
        a_min, _ = self.modulation.min_max()
        if a_min <= 0.0:
            raise EnvironmentError_(f"modulation must be positive, min a(x) = {a_min:.3g}")

    def __call__(self, x, u):
        return self.modulation(x) * self.base(u)

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "theta": self.theta,
            "base_pieces": self.base.to_json(),
            "modulation": self.modulation.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReactionSpec":
        return cls(
            family=str(obj["family"]),
            theta=float(obj["theta"]),
            base=PiecewisePoly.from_json(obj["base_pieces"]),
            modulation=HarmonicFunction.from_json(obj.get("modulation", {"mean": 1.0})),
        )


@dataclass(frozen=True)
class Environment:
    """Full problem data: exponent m, coefficient kappa, reaction, threshold.

    Construction checks only structural validity (m > 1, integer harmonic
    frequencies, positive modulation); the standing hypotheses are checked
    by :func:`validate_F1`, which returns a report instead of raising so
    that deliberately broken environments remain constructible.
    """

    m: float
    kappa: HarmonicFunction
    reaction: ReactionSpec

    def __post_init__(self):
        if not (self.m > 1.0):
            raise EnvironmentError_(f"m must be > 1, got {self.m}")

    @property
    def theta(self) -> float:
        return self.reaction.theta

    def kappa_range(self) -> tuple[float, float]:
        """(kappa_0, kappa^0) = (min, max) of kappa over one period."""
        return self.kappa.min_max()

    def f(self, x, u):
        return self.reaction(x, u)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "kappa": self.kappa.to_json(),
            "reaction": self.reaction.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Environment":
        return cls(
            m=float(obj["m"]),
            kappa=HarmonicFunction.from_json(obj["kappa"]),
            reaction=ReactionSpec.from_json(obj["reaction"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Environment":
        return cls.from_json(json.loads(text))


# ---------------------------------------------------------------------------
# state on a grid
# ---------------------------------------------------------------------------


@dataclass
class Field:
    """Pressure samples on a uniform grid with a tracked sharp front.

    ``v[i]`` lives at ``x_left + i*dx``; nodes beyond the front position
    ``b`` are exactly zero.  A Field is owned by one run at a time.
    """

    x_left: float
    dx: float
    v: np.ndarray
    b: float
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.v.size

    @property
    def x_right(self) -> float:
        return self.x_left + (self.n - 1) * self.dx

    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.n)

    def check(self, strict: bool = True) -> None:
        if np.any(self.v < 0.0):
            raise ValueError("negative pressure sample")
        if strict and not (self.x_left < self.b < self.x_right):
            raise ValueError(f"front b={self.b} outside window [{self.x_left}, {self.x_right}]")
        beyond = self.x() > self.b + self.dx
        if np.any(self.v[beyond] != 0.0):
            raise ValueError("nonzero pressure beyond the front")

    def copy(self) -> "Field":
        return Field(self.x_left, self.dx, self.v.copy(), self.b, self.t)


# ---------------------------------------------------------------------------
# pointwise operations
# ---------------------------------------------------------------------------


def pressure_from_density(u, m: float):
    """v = m/(m-1) * u^(m-1); strictly increasing with v(0) = 0."""
    if m <= 1.0:
        raise EnvironmentError_(f"m must be > 1, got {m}")
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0.0):
        raise ValueError("density must be nonnegative")
    v = m / (m - 1.0) * u_arr ** (m - 1.0)
    return v if v.ndim else float(v)


def density_from_pressure(v, m: float):
    """Inverse map u = ((m-1) v / m)^(1/(m-1))."""
    if m <= 1.0:
        raise EnvironmentError_(f"m must be > 1, got {m}")
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0.0):
        raise ValueError("pressure must be nonnegative")
    u = ((m - 1.0) * v_arr / m) ** (1.0 / (m - 1.0))
    return u if u.ndim else float(u)


def reaction_density(env: Environment, x, u):
    """Source term of the density equation, f(x, u) * (kappa(x) - u)."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    out = env.f(x, u) * (env.kappa(x) - u)
    return out if out.ndim else float(out)


def reaction_pressure(env: Environment, x, v):
    """Source term of the pressure equation.

    g(x, v) = m * u^(m-2) * f(x, u) * (kappa(x) - u) with u = u(v).  For
    m < 2 the prefactor diverges as v -> 0 unless f_base vanishes fast
    enough; environments where that limit is unbounded are rejected here
    rather than returning non-finite values.
    """
    m = env.m
    check_pressure_regularity(env)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    u = density_from_pressure(v, m)
    with np.errstate(divide="ignore", invalid="ignore"):
        pref = np.where(u > 0.0, m * ((m - 1.0) * v / m) / np.where(u > 0.0, u, 1.0), 0.0)
    out = pref * env.f(x, u) * (env.kappa(x) - u)
    out = np.where(u > 0.0, out, 0.0)
    return out if out.ndim else float(out)


def check_pressure_regularity(env: Environment) -> None:
    """Reject environments whose g(x, v) is unbounded as v -> 0.

    With f_base = O(u^s) near zero, g ~ u^(s+m-2); boundedness needs
    s >= 2 - m.  Polynomial pieces give s exactly.
    """
    s = env.reaction.base.lowest_order_at_zero()
    if s + env.m - 2.0 < 0.0:
        raise EnvironmentError_(
            f"pressure reaction singular at the front: f_base ~ u^{s} with m = {env.m} "
            f"gives g ~ u^{s + env.m - 2:.3g} near v = 0"
        )


# ---------------------------------------------------------------------------
# hypothesis validation
# ---------------------------------------------------------------------------


@dataclass
class F1Report:
    """Outcome of the standing-hypothesis check, clause by clause."""

    passed: bool
    clauses: dict[str, bool]
    witnesses: dict[str, tuple]
    kappa0: float
    kappa_sup: float

    def failures(self) -> list[str]:
        return [k for k, ok in self.clauses.items() if not ok]


_FAMILY_PATTERNS = {
    "monostable": "f_base > 0 for u > 0",
    "bistable": "f_base < 0 on (0, theta), > 0 for u > theta",
    "combustion": "f_base = 0 on [0, theta], > 0 for u > theta",
    "multistable": "f_base changes sign finitely often in (0, theta), > 0 for u > theta",
}


def validate_F1(env: Environment, nx: int = 512, nu: int = 1024) -> F1Report:
    """Sample-check the standing hypotheses on one period.

    Clauses: kappa > theta everywhere; f(x, 0) = 0; f(x, u) > 0 for
    u in (theta, kappa^0 + 1]; and the family sign pattern of f_base.
    Failures are reported with a witness point, never raised.
    """
    xs = np.linspace(0.0, 1.0, nx, endpoint=False)
    k0, ksup = env.kappa_range()
    theta = env.theta
    clauses: dict[str, bool] = {}
    witnesses: dict[str, tuple] = {}

    kvals = env.kappa(xs)
    i = int(np.argmin(kvals))
    clauses["kappa>theta"] = bool(kvals[i] > theta)
    if not clauses["kappa>theta"]:
        witnesses["kappa>theta"] = (float(xs[i]), float(kvals[i]))

    f0 = env.f(xs, np.zeros_like(xs))
    i = int(np.argmax(np.abs(f0)))
    clauses["f(x,0)=0"] = bool(abs(f0[i]) <= 1e-12)
    if not clauses["f(x,0)=0"]:
        witnesses["f(x,0)=0"] = (float(xs[i]), float(f0[i]))

    us = np.linspace(theta, ksup + 1.0, nu + 1)[1:]  # open at theta
    fb = env.reaction.base(us)
    amin, _ = env.reaction.modulation.min_max()
    fvals = amin * fb
    j = int(np.argmin(fvals))
    clauses["f>0 above theta"] = bool(fvals[j] > 0.0)
    if not clauses["f>0 above theta"]:
        witnesses["f>0 above theta"] = (float(us[j]), float(fvals[j]))

    clauses["family pattern"] = _family_pattern_ok(env, nu)
    if not clauses["family pattern"]:
        witnesses["family pattern"] = (_FAMILY_PATTERNS.get(env.reaction.family, ""),)

    return F1Report(
        passed=all(clauses.values()),
        clauses=clauses,
        witnesses=witnesses,
        kappa0=k0,
        kappa_sup=ksup,
    )


def _family_pattern_ok(env: Environment, nu: int) -> bool:
    fam = env.reaction.family
    theta = env.theta
    base = env.reaction.base
    _, ksup = env.kappa_range()
    if fam == "custom":
        return True
    if fam == "monostable":
        us = np.linspace(0.0, ksup + 1.0, nu + 1)[1:]
        return bool(np.all(base(us) > 0.0))
    if theta <= 0.0:
        return False
    us_low = np.linspace(0.0, theta, nu, endpoint=False)[1:]
    vals_low = base(us_low)
    if fam == "bistable":
        return bool(np.all(vals_low < 0.0))
    if fam == "combustion":
        return bool(np.all(np.abs(vals_low) <= 1e-12) and abs(base(theta)) <= 1e-12)
    if fam == "multistable":
        signs = np.sign(vals_low[np.abs(vals_low) > 1e-12])
        changes = int(np.count_nonzero(np.diff(signs) != 0))
        return 0 < changes < 20
    return False


def require_F1(env: Environment) -> F1Report:
    report = validate_F1(env)
    if not report.passed:
        raise EnvironmentError_(f"hypotheses violated: {report.failures()} ({report.witnesses})")
    return report


def lipschitz_bound(env: Environment, nx: int = 256, nu: int = 1024, margin: float = 0.1) -> float:
    """Constant K with f(x, u)(kappa(x) - u) <= K u on the working range.

    Sampled sup of |reaction| / u over x in [0, 1), u in (0, kappa^0 + 1],
    plus a relative safety margin.  The limit u -> 0 is controlled by the
    polynomial order of f_base; a nonvanishing f_base(0) makes the ratio
    blow up and the environment is rejected.
    """
    base = env.reaction.base
    if base.lowest_order_at_zero() < 1:
        raise EnvironmentError_("f_base(0) != 0: reaction/u unbounded near zero")
    _, ksup = env.kappa_range()
    xs = np.linspace(0.0, 1.0, nx, endpoint=False)
    us = np.linspace(0.0, ksup + 1.0, nu + 1)[1:]
    X, U = np.meshgrid(xs, us, indexing="ij")
    ratio = np.abs(reaction_density(env, X, U)) / U
    k = float(ratio.max()) * (1.0 + margin)
    if not math.isfinite(k):
        raise EnvironmentError_("reaction/u unbounded on the sampled range")
    return max(k, 1e-12)
