"""Intersection-number accounting between pressure profiles.

The number of sign changes between two solutions of the degenerate
equation is nonincreasing in time, and ordered single-crossing pairs pass
through the steeper / touching-ordered / strictly-ordered stages.  These
counts are used as run-time sanity properties on recorded snapshots;
tangential grazes below tolerance are quotiented out, since the discrete
profiles only ever touch approximately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProfilePair",
    "sign_changes",
    "classify_relation",
    "check_monotone_intersections",
    "IntersectionReport",
]

STEEPER = "steeper"
TOUCH_ORDER = "touch-order"
STRICT_ORDER = "strict-order"
OTHER = "other"


@dataclass(frozen=True)
class ProfilePair:
    """Two profiles on one grid, with front positions when sharp.

    ``l1``/``l2`` default to -inf for half-line solutions; ``r1``/``r2``
    are the right fronts.
    """

    x: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    r1: float
    r2: float
    l1: float = -np.inf
    l2: float = -np.inf

    def __post_init__(self):
        if self.x.shape != self.w1.shape or self.x.shape != self.w2.shape:
            raise ValueError("profiles must share the grid")
        if not (np.all(np.isfinite(self.w1)) and np.all(np.isfinite(self.w2))):
            raise ValueError("profiles must be finite")

    def common_interval(self) -> np.ndarray:
        lo = max(self.l1, self.l2)
        hi = min(self.r1, self.r2)
        return (self.x > lo) & (self.x < hi)


def sign_changes(pair: ProfilePair, tol: float) -> int:
    """Count sign changes of w1 - w2 on the common positivity interval.

    Excursions with |w1 - w2| <= tol are ignored, so tangential touches do
    not register as double crossings.
    """
    d = (pair.w1 - pair.w2)[pair.common_interval()]
    signs = np.sign(d[np.abs(d) > tol])
    if signs.size == 0:
        return 0
    return int(np.count_nonzero(np.diff(signs) != 0))


def classify_relation(pair: ProfilePair, tol: float, front_tol: float | None = None) -> str:
    """Classify the configuration of the pair.

    steeper: one signed crossing, larger on the left; touch-order: ordered
    inside with the right fronts matched; strict-order: ordered inside
    with the smaller support strictly nested.  Half-line left fronts count
    as matched.
    """
    if front_tol is None:
        front_tol = tol
    mask = pair.common_interval()
    d = (pair.w1 - pair.w2)[mask]
    live = np.abs(d) > tol
    signs = np.sign(d[live])
    n_flip = int(np.count_nonzero(np.diff(signs) != 0)) if signs.size else 0

    if n_flip == 1 and signs[0] > 0:
        return STEEPER
    if signs.size == 0:
        # coinciding on the common interval: ordered-by-support when one
        # front sticks out, with contact everywhere inside
        return TOUCH_ORDER if pair.r1 > pair.r2 + front_tol else OTHER
    if n_flip == 0 and signs.size and signs[0] > 0:
        l_ok = (pair.l1 == -np.inf and pair.l2 == -np.inf) or pair.l1 <= pair.l2 + front_tol
        if not l_ok:
            return OTHER
        if abs(pair.r1 - pair.r2) <= front_tol:
            return TOUCH_ORDER
        if pair.r1 > pair.r2 + front_tol:
            nested_left = (pair.l1 == -np.inf) or pair.l1 < pair.l2 - front_tol
            return STRICT_ORDER if nested_left or pair.l1 == -np.inf else TOUCH_ORDER
    return OTHER


@dataclass
class IntersectionReport:
    """Sign-change counts and relation classes along recorded times."""

    times: np.ndarray
    counts: np.ndarray
    classes: list[str]
    nonincreasing: bool
    first_seen: dict[str, float]

    @property
    def passed(self) -> bool:
        return self.nonincreasing


def check_monotone_intersections(pairs_by_time, tol: float) -> IntersectionReport:
    """Evaluate counts over a time-indexed family of profile pairs.

    ``pairs_by_time`` is an iterable of (t, ProfilePair).  Passes when the
    count never increases between recorded instants; also reports the
    first time each relation class was observed.
    """
    times, counts, classes = [], [], []
    first_seen: dict[str, float] = {}
    for t, pair in pairs_by_time:
        c = sign_changes(pair, tol)
        cls = classify_relation(pair, tol)
        times.append(t)
        counts.append(c)
        classes.append(cls)
        if cls not in first_seen:
            first_seen[cls] = t
    counts = np.array(counts, dtype=np.int64)
    return IntersectionReport(
        times=np.array(times),
        counts=counts,
        classes=classes,
        nonincreasing=bool(np.all(np.diff(counts) <= 0)),
        first_seen=first_seen,
    )
