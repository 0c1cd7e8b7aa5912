"""Sumset covers, box counts, Vinogradov-type counts and log-log slope fits."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .dyadic import SquareFamily, level_of
from .fourier import convolve_power, l2_norm_sq
from .measures import AtomicMeasure, uniform_measure

__all__ = [
    "CoveringSet",
    "ScalingSeries",
    "CountEnergyReport",
    "sumset_cover",
    "box_count",
    "vinogradov_count",
    "vinogradov_bruteforce",
    "count_energy_check",
    "fit_exponent",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 10**8


@dataclass(frozen=True, eq=False)
class CoveringSet:
    """The dyadic delta-squares meeting a planar set, plus how they were obtained."""

    squares: SquareFamily
    route: str = "exact"
    slack_squares: int = 0

    @property
    def delta(self) -> float:
        return self.squares.delta

    @property
    def level(self) -> int:
        return self.squares.level

    def __len__(self) -> int:
        return len(self.squares)


def _points(P) -> np.ndarray:
    pts = np.asarray(P.points if isinstance(P, AtomicMeasure) else P, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("empty point set")
    return pts


def _cover_keys(points: np.ndarray, level: int) -> np.ndarray:
    return np.floor(points * 2.0**level).astype(np.int64)


def sumset_cover(P, n: int, delta: float, budget: int = DEFAULT_BUDGET,
                 allow_doubling: bool = True, route: str | None = None) -> CoveringSet:
    """Dyadic delta-squares meeting the n-fold sumset P + ... + P.

    The exact route enumerates distinct partial sums, deduplicating after each
    addition; it is used while the work |partial sums| * |P| stays within ``budget``.
    The recursive route keeps one witness sum per occupied square and adds P to the
    witnesses; every square it reports meets the sumset, and each true square lies
    within one square of a reported one per recursion step.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    level = level_of(delta)
    pts = np.unique(_points(P), axis=0)
    if route is None:
        route = "exact"
        size = len(pts)
        work = 0
        for _ in range(n - 1):
            work += size * len(pts)
            size = min(size * len(pts), 10**15)
        if work > budget:
            if not allow_doubling:
                raise ValueError(f"budget exceeded: exact enumeration needs {work} sums (> {budget})")
            route = "recursive"
    if route == "exact":
        sums = pts
        for _ in range(n - 1):
            if len(sums) * len(pts) > budget:
                if not allow_doubling:
                    raise ValueError("budget exceeded during exact enumeration")
                return sumset_cover(P, n, delta, budget, allow_doubling, route="recursive")
            sums = _distinct_sums(sums, pts)
        return CoveringSet(SquareFamily(level, _cover_keys(sums, level)), "exact", 0)
    if route != "recursive":
        raise ValueError(f"unknown route {route!r}")
    witnesses = _witnesses(pts, level)
    for _ in range(n - 1):
        if len(witnesses) * len(pts) > 50 * budget:
            raise ValueError("budget exceeded even for the recursive route; reduce n or |P|")
        witnesses = _witnesses(_all_sums(witnesses, pts), level)
    return CoveringSet(SquareFamily(level, _cover_keys(witnesses, level)), "recursive", n - 1)


def _all_sums(a: np.ndarray, b: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    return (a[:, None, :] + b[None, :, :]).reshape(-1, 2)


def _distinct_sums(a: np.ndarray, b: np.ndarray, chunk_rows: int | None = None) -> np.ndarray:
    rows = chunk_rows or max(1, (1 << 22) // len(b))
    parts = []
    for start in range(0, len(a), rows):
        parts.append(np.unique(_all_sums(a[start:start + rows], b), axis=0))
    return np.unique(np.concatenate(parts), axis=0)


def _witnesses(points: np.ndarray, level: int, chunk: int = 1 << 22) -> np.ndarray:
    """One representative point per occupied dyadic square (the first in sorted key order)."""
    keys = _cover_keys(points, level)
    _, first = np.unique(keys, axis=0, return_index=True)
    return points[first]


def box_count(C: CoveringSet, coarse: float) -> int:
    """Number of dyadic squares of side ``coarse`` containing a member of the cover."""
    lev = level_of(coarse)
    if lev > C.level:
        raise ValueError("coarse scale must be at least the cover scale")
    return len(C.squares.coarsen(lev))


def _check_strictly_separated(pts: np.ndarray, delta: float) -> None:
    if len(pts) < 2:
        return
    d, _ = cKDTree(pts).query(pts, k=2)
    if float(d[:, 1].min()) <= delta:
        raise ValueError(f"separation violated: points closer than {delta}")


def _sums_with_multiplicity(pts: np.ndarray, n: int, budget: int) -> tuple[np.ndarray, np.ndarray]:
    sums = pts
    mult = np.ones(len(pts))
    for _ in range(n - 1):
        if len(sums) * len(pts) > budget:
            raise ValueError(f"budget exceeded ({len(sums) * len(pts)} > {budget}); use a smaller n or |P|")
        raw = _all_sums(sums, pts)
        w = np.repeat(mult, len(pts))
        sums, inv = np.unique(raw, axis=0, return_inverse=True)
        mult = np.bincount(inv.reshape(-1), weights=w)
    return sums, mult


def vinogradov_count(P, n: int, delta: float, budget: int = DEFAULT_BUDGET) -> int:
    """Number of ordered 2n-tuples from P whose two n-fold sums are within delta (Euclidean)."""
    pts = _points(P)
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    _check_strictly_separated(pts, delta)
    sums, mult = _sums_with_multiplicity(pts, int(n), budget)
    order = np.argsort(sums[:, 0], kind="stable")
    sums, mult = sums[order], mult[order]
    xs = sums[:, 0]
    lo = np.searchsorted(xs, xs - delta, side="left")
    hi = np.searchsorted(xs, xs + delta, side="right")
    total = 0
    step = 1 << 16
    for start in range(0, len(xs), step):
        stop = min(start + step, len(xs))
        counts = hi[start:stop] - lo[start:stop]
        rows = np.repeat(np.arange(start, stop), counts)
        offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        cols = np.repeat(lo[start:stop], counts) + offs
        diff = sums[rows] - sums[cols]
        close = (diff**2).sum(axis=1) <= delta * delta
        total += int(round(float(np.sum(mult[rows[close]] * mult[cols[close]]))))
    return total


def vinogradov_bruteforce(P, n: int, delta: float) -> int:
    """Direct enumeration of all 2n-tuples; only for tiny inputs."""
    pts = [tuple(p) for p in _points(P)]
    count = 0
    for tup in itertools.product(range(len(pts)), repeat=2 * n):
        sx = sum(pts[i][0] for i in tup[:n]) - sum(pts[i][0] for i in tup[n:])
        sy = sum(pts[i][1] for i in tup[:n]) - sum(pts[i][1] for i in tup[n:])
        if sx * sx + sy * sy <= delta * delta:
            count += 1
    return count


@dataclass(frozen=True)
class CountEnergyReport:
    """Both sides of the comparison count / |P|^(2n) versus delta^2 ||(sigma^n)_{4 delta}||^2."""

    count: int
    lhs: float
    rhs: float
    ratio: float
    constant: float
    ok: bool


def count_energy_check(P, n: int, delta: float, constant: float = 1e3, budget: int = DEFAULT_BUDGET,
                       h: float | None = None) -> CountEnergyReport:
    """Compare the normalized Vinogradov count with the L2 norm of the mollified power."""
    pts = _points(P)
    count = vinogradov_count(pts, n, delta, budget)
    lhs = count / float(len(pts)) ** (2 * n)
    meas = uniform_measure(pts)
    field_ = convolve_power(meas, n, 4.0 * delta, h=h)
    rhs = delta * delta * l2_norm_sq(field_)
    ratio = lhs / rhs
    return CountEnergyReport(count, lhs, rhs, ratio, constant, lhs <= constant * rhs)


@dataclass(frozen=True, eq=False)
class ScalingSeries:
    """Measured values at dyadic scales, ordered by decreasing delta."""

    deltas: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    label: str = "value"

    def __post_init__(self) -> None:
        d = np.asarray(self.deltas, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if d.shape != v.shape:
            raise ValueError("deltas and values differ in length")
        if len(np.unique(d)) < 3:
            raise ValueError("a scaling series needs at least 3 distinct scales")
        for x in d:
            level_of(x)
        if np.any(np.diff(d) >= 0):
            raise ValueError("deltas must be strictly decreasing")
        if np.any(v <= 0) or not np.all(np.isfinite(v)):
            raise ValueError("values must be positive and finite")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "values", v)

    @property
    def log2_inv_delta(self) -> np.ndarray:
        return -np.log2(self.deltas)

    @property
    def log2_value(self) -> np.ndarray:
        return np.log2(self.values)

    def fit(self) -> tuple[float, float]:
        return fit_exponent(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["delta", "value", "log2_inv_delta", "log2_value"])
        for row in zip(self.deltas, self.values, self.log2_inv_delta, self.log2_value):
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def fit_exponent(series: ScalingSeries | Sequence) -> tuple[float, float]:
    """Least-squares slope of log2(value) against log2(1/delta) and the max absolute residual."""
    if not isinstance(series, ScalingSeries):
        rows = list(series)
        if len(rows) < 3:
            raise ValueError("a scaling series needs at least 3 distinct scales")
        series = ScalingSeries([r[0] for r in rows], [r[1] for r in rows])
    x = series.log2_inv_delta
    y = series.log2_value
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return float(slope), resid
