"""Dyadic squares, discrete measures on them, and non-concentration constants."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "DyadicSquare",
    "SquareFamily",
    "DyadicMeasure",
    "GrassmannLine",
    "ExponentParams",
    "LevelSetReport",
    "level_of",
    "frostman_constant",
    "katz_tao_constant",
    "katz_tao_profile",
    "katz_tao_constant_squares",
    "delta_set_constant",
    "riesz_potentials",
    "riesz_energy_discrete",
    "line_metric",
    "level_set_buckets",
    "level_set_extract",
]

# Relative slack used when comparing floating distances against a radius.
DIST_RTOL = 1e-9


def level_of(scale: float) -> int:
    """Return m with scale == 2**-m, raising if scale is not a power of two."""
    scale = float(scale)
    if not (scale > 0.0) or math.isinf(scale):
        raise ValueError(f"scale must be positive and finite, got {scale!r}")
    mant, exp = math.frexp(scale)
    if mant != 0.5:
        raise ValueError(f"scale {scale!r} is not a power of two")
    return -(exp - 1)


@dataclass(frozen=True, order=True)
class DyadicSquare:
    """The square [ix, ix+1) x [iy, iy+1) scaled by 2**-level."""

    level: int
    ix: int
    iy: int

    def __post_init__(self) -> None:
        for name in ("level", "ix", "iy"):
            value = getattr(self, name)
            if isinstance(value, (bool, float)) or int(value) != value:
                raise TypeError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.level < 0:
            raise ValueError(f"level must be nonnegative, got {self.level}")

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def corner(self) -> tuple[float, float]:
        return (self.ix * self.side, self.iy * self.side)

    @property
    def center(self) -> tuple[float, float]:
        h = self.side
        return ((self.ix + 0.5) * h, (self.iy + 0.5) * h)

    def parent(self, level: int) -> "DyadicSquare":
        if level > self.level or level < 0:
            raise ValueError(f"parent level {level} must lie in [0, {self.level}]")
        shift = self.level - level
        return DyadicSquare(level, self.ix >> shift, self.iy >> shift)

    def contains_point(self, x: float, y: float) -> bool:
        h = self.side
        return self.ix * h <= x < (self.ix + 1) * h and self.iy * h <= y < (self.iy + 1) * h


def _as_index_array(indices) -> np.ndarray:
    arr = np.asarray(indices, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"square indices must have shape (k, 2), got {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class SquareFamily:
    """A deduplicated set of dyadic squares at one level, stored as sorted index rows."""

    level: int
    indices: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError(f"level must be nonnegative, got {self.level}")
        arr = _as_index_array(self.indices)
        if len(arr):
            arr = np.unique(arr, axis=0)
        arr.setflags(write=False)
        object.__setattr__(self, "indices", arr)

    @classmethod
    def from_squares(cls, squares: Iterable[DyadicSquare], level: int | None = None) -> "SquareFamily":
        squares = list(squares)
        if level is None:
            if not squares:
                raise ValueError("cannot infer the level of an empty family")
            level = squares[0].level
        if any(q.level != level for q in squares):
            raise ValueError("all squares must share one level")
        return cls(level, [(q.ix, q.iy) for q in squares])

    @classmethod
    def covering(cls, points, level: int) -> "SquareFamily":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(level, np.floor(pts * 2.0**level).astype(np.int64))

    @property
    def delta(self) -> float:
        return 2.0 ** (-self.level)

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SquareFamily):
            return NotImplemented
        return self.level == other.level and np.array_equal(self.indices, other.indices)

    def __hash__(self) -> int:
        return hash((self.level, self.indices.tobytes()))

    def __iter__(self) -> Iterator[DyadicSquare]:
        for ix, iy in self.indices:
            yield DyadicSquare(self.level, int(ix), int(iy))

    def __contains__(self, q: object) -> bool:
        if not isinstance(q, DyadicSquare) or q.level != self.level:
            return False
        return bool(np.any((self.indices[:, 0] == q.ix) & (self.indices[:, 1] == q.iy)))

    def centers(self) -> np.ndarray:
        return (self.indices + 0.5) * self.delta

    def coarsen(self, level: int) -> "SquareFamily":
        if level > self.level:
            raise ValueError("coarsen level must not exceed the family level")
        return SquareFamily(level, self.indices >> (self.level - level))

    def union(self, other: "SquareFamily") -> "SquareFamily":
        if other.level != self.level:
            raise ValueError("families live at different levels")
        return SquareFamily(self.level, np.vstack([self.indices, other.indices]))

    def as_set(self) -> frozenset[DyadicSquare]:
        return frozenset(self)


@dataclass(frozen=True, eq=False)
class DyadicMeasure:
    """Nonnegative weights on distinct dyadic squares of one level."""

    level: int
    indices: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    delta_measure: bool = True

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError(f"level must be nonnegative, got {self.level}")
        idx = _as_index_array(self.indices)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if idx.shape[0] != w.shape[0]:
            raise ValueError("indices and weights differ in length")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if len(idx):
            uniq, inv = np.unique(idx, axis=0, return_inverse=True)
            if len(uniq) != len(idx):
                w = np.bincount(inv.reshape(-1), weights=w, minlength=len(uniq))
                idx = uniq
            else:
                order = np.lexsort((idx[:, 1], idx[:, 0]))
                idx, w = idx[order], w[order]
        if self.delta_measure and w.sum() > 1.0 + 1e-12:
            raise ValueError(f"total mass {w.sum()} exceeds 1 for a delta-measure")
        idx.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_mapping(cls, level: int, mapping: Mapping, delta_measure: bool = True) -> "DyadicMeasure":
        rows, ws = [], []
        for key, w in mapping.items():
            if isinstance(key, DyadicSquare):
                if key.level != level:
                    raise ValueError(f"square {key} is not at level {level}")
                rows.append((key.ix, key.iy))
            else:
                rows.append(tuple(key))
            ws.append(w)
        return cls(level, rows, ws, delta_measure)

    @classmethod
    def uniform(cls, family: SquareFamily, total: float = 1.0) -> "DyadicMeasure":
        k = len(family)
        if k == 0:
            raise ValueError("empty family")
        return cls(family.level, family.indices, np.full(k, total / k))

    @property
    def delta(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    def items(self) -> Iterator[tuple[DyadicSquare, float]]:
        for (ix, iy), w in zip(self.indices, self.weights):
            yield DyadicSquare(self.level, int(ix), int(iy)), float(w)

    def mass_of(self, q: DyadicSquare) -> float:
        if q.level > self.level:
            raise ValueError("query square is finer than the measure")
        par = self.indices >> (self.level - q.level)
        sel = (par[:, 0] == q.ix) & (par[:, 1] == q.iy)
        return float(self.weights[sel].sum())

    def centers(self) -> np.ndarray:
        return (self.indices + 0.5) * self.delta

    def support(self) -> SquareFamily:
        return SquareFamily(self.level, self.indices[self.weights > 0])

    def restrict(self, mask) -> "DyadicMeasure":
        mask = np.asarray(mask, dtype=bool)
        return DyadicMeasure(self.level, self.indices[mask], self.weights[mask], self.delta_measure)

    def to_json(self) -> str:
        entries = [[int(a), int(b), float(w)] for (a, b), w in zip(self.indices, self.weights)]
        return json.dumps({"level": self.level, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "DyadicMeasure":
        data = json.loads(text)
        entries = data["entries"]
        idx = [(int(e[0]), int(e[1])) for e in entries]
        w = [float(e[2]) for e in entries]
        return cls(int(data["level"]), idx, w)


@dataclass(frozen=True)
class GrassmannLine:
    """A planar line y = a x + b, or the vertical line x = b when a is infinite."""

    slope: float
    intercept: float

    def __post_init__(self) -> None:
        a, b = float(self.slope), float(self.intercept)
        if math.isnan(a) or math.isnan(b) or math.isinf(b):
            raise ValueError(f"invalid line parameters ({a}, {b})")
        if math.isinf(a):
            a = math.inf
        object.__setattr__(self, "slope", a)
        object.__setattr__(self, "intercept", b)

    @property
    def is_vertical(self) -> bool:
        return math.isinf(self.slope)

    @property
    def direction(self) -> np.ndarray:
        if self.is_vertical:
            return np.array([0.0, 1.0])
        return np.array([1.0, self.slope]) / math.hypot(1.0, self.slope)

    @property
    def normal(self) -> np.ndarray:
        d = self.direction
        return np.array([-d[1], d[0]])

    @property
    def anchor_point(self) -> np.ndarray:
        """A point on the line: (0, b), or (b, 0) for a vertical line."""
        if self.is_vertical:
            return np.array([self.intercept, 0.0])
        return np.array([0.0, self.intercept])

    @property
    def projection(self) -> np.ndarray:
        """Orthogonal projection onto the direction subspace."""
        d = self.direction
        return np.outer(d, d)

    @property
    def offset(self) -> np.ndarray:
        """The unique point of the line lying in the orthogonal complement of its direction."""
        nrm = self.normal
        return nrm * float(nrm @ self.anchor_point)

    def signed_distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return (pts - self.anchor_point) @ self.normal

    def contains(self, point, tol: float = 1e-12) -> bool:
        return bool(abs(self.signed_distance(point)[0]) <= tol * (1.0 + float(np.abs(point).max())))


@dataclass(frozen=True)
class ExponentParams:
    """Exponents s (of the curve measure) and t (of the target), plus optional slack."""

    s: float
    t: float
    kappa: float | None = None
    eps: float | None = None

    def __post_init__(self) -> None:
        for name in ("s", "t", "kappa", "eps"):
            value = getattr(self, name)
            if value is not None and (math.isnan(float(value)) or math.isinf(float(value))):
                raise ValueError(f"{name} must be finite")
        if not (0.0 <= self.s <= 1.0):
            raise ValueError(f"s={self.s} outside [0, 1]")
        if not (0.0 <= self.t <= 2.0):
            raise ValueError(f"t={self.t} outside [0, 2]")
        for name in ("kappa", "eps"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive")


def line_metric(l1: GrassmannLine, l2: GrassmannLine) -> float:
    """Operator norm of the projection difference plus distance between offset points."""
    op = float(np.linalg.norm(l1.projection - l2.projection, ord=2))
    return op + float(np.linalg.norm(l1.offset - l2.offset))


def frostman_constant(m: DyadicMeasure, s: float, min_scale: float | None = None) -> float:
    """Max of m(Q) / side(Q)**s over dyadic squares Q with min_scale <= side <= 1."""
    if len(m) == 0 or m.total_mass == 0.0:
        raise ValueError("empty measure")
    finest = m.level if min_scale is None else level_of(min_scale)
    if finest > m.level:
        raise ValueError("min_scale must be at least the side length of the measure's level")
    best = 0.0
    for lev in range(0, finest + 1):
        par = m.indices >> (m.level - lev)
        _, inv = np.unique(par, axis=0, return_inverse=True)
        masses = np.bincount(inv.reshape(-1), weights=m.weights)
        best = max(best, float(masses.max()) * 2.0 ** (lev * s))
    return best


def _check_separated(points: np.ndarray, delta: float) -> None:
    if len(points) < 2:
        return
    tree = cKDTree(points)
    d, _ = tree.query(points, k=2)
    gap = float(d[:, 1].min())
    if gap <= delta * (1.0 + 1e-12):
        raise ValueError(f"separation violated: minimum gap {gap} <= {delta}")


def katz_tao_profile(points, s: float, delta: float, check_separation: bool = True) -> dict[float, float]:
    """Per-radius ratios max_x |P cap B(x, r)| (delta / r)**s for r = delta 2^k up to the diameter."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("empty point set")
    if check_separation:
        _check_separated(pts, delta)
    tree = cKDTree(pts)
    span = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    profile: dict[float, float] = {}
    r = float(delta)
    while True:
        counts = tree.query_ball_point(pts, r * (1.0 + DIST_RTOL), return_length=True)
        profile[r] = float(np.max(counts)) * (delta / r) ** s
        if r >= span:
            break
        r *= 2.0
    return profile


def katz_tao_constant(points, s: float, delta: float, check_separation: bool = True) -> float:
    """Max over data-centred balls of radius r = delta 2^k of |P cap B(x, r)| (delta / r)**s."""
    return max(1.0, max(katz_tao_profile(points, s, delta, check_separation).values()))


def katz_tao_constant_squares(family: SquareFamily, s: float) -> float:
    """Katz-Tao constant of a square family, measured on square centres."""
    return katz_tao_constant(family.centers(), s, family.delta, check_separation=False)


def delta_set_constant(family: SquareFamily, s: float) -> float:
    """Smallest C with |P cap Q| <= C side(Q)**s |P| over dyadic Q from delta up to 1."""
    return frostman_constant(DyadicMeasure.uniform(family), s)


def riesz_potentials(m: DyadicMeasure, s: float, chunk: int = 2048) -> np.ndarray:
    """U(p) = sum over q != p of m(q) |c_p - c_q|^{-s}, using square midpoints."""
    if s <= 0:
        raise ValueError("s must be positive")
    c = m.centers()
    w = np.asarray(m.weights)
    out = np.zeros(len(c))
    for start in range(0, len(c), chunk):
        blk = c[start:start + chunk]
        d = np.sqrt(((blk[:, None, :] - c[None, :, :]) ** 2).sum(axis=-1))
        with np.errstate(divide="ignore"):
            k = np.where(d > 0, d ** (-s), 0.0)
        out[start:start + chunk] = k @ w
    return out


def riesz_energy_discrete(m: DyadicMeasure, s: float) -> float:
    """1 + sum over p != q of m(p) m(q) |c_p - c_q|^{-s}."""
    return 1.0 + float(np.dot(m.weights, riesz_potentials(m, s)))


@dataclass(frozen=True, eq=False)
class LevelSetReport:
    """Outcome of the energy-pruned dyadic level-set selection."""

    squares: SquareFamily
    bucket: int
    bucket_mass: float
    surviving_mass: float
    total_mass: float
    removed: int
    threshold: float
    energy: float
    bucket_masses: dict = field(default_factory=dict)


def level_set_buckets(m: DyadicMeasure, s: float, delta: float, eps: float,
                      chebyshev: float = 4.0) -> LevelSetReport:
    """Drop squares of large potential, bucket the rest by dyadic mass, keep the heaviest bucket.

    A square p is dropped when its potential exceeds chebyshev * I * delta**-eps,
    where I is the discrete energy. Survivors with 2^{-j-1} < m(p) <= 2^{-j} form
    bucket j. Ties in bucket mass go to the bucket with more squares.
    """
    if level_of(delta) != m.level:
        raise ValueError("delta must equal the side length of the measure's level")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    positive = m.weights > 0
    m = m.restrict(positive)
    if len(m) == 0:
        raise ValueError("empty measure")
    energy = riesz_energy_discrete(m, s)
    threshold = chebyshev * energy * delta ** (-eps)
    pot = riesz_potentials(m, s)
    keep = pot <= threshold
    if not np.any(keep):
        raise ValueError("energy too concentrated")
    w = m.weights[keep]
    idx = m.indices[keep]
    j = np.floor(-np.log2(w)).astype(np.int64)
    buckets: dict[int, tuple[float, int]] = {}
    for jj in np.unique(j):
        sel = j == jj
        buckets[int(jj)] = (float(w[sel].sum()), int(sel.sum()))
    best = max(buckets, key=lambda b: (buckets[b][0], buckets[b][1], -b))
    sel = j == best
    return LevelSetReport(
        squares=SquareFamily(m.level, idx[sel]),
        bucket=best,
        bucket_mass=buckets[best][0],
        surviving_mass=float(w.sum()),
        total_mass=m.total_mass,
        removed=int((~keep).sum()),
        threshold=threshold,
        energy=energy,
        bucket_masses={b: v[0] for b, v in buckets.items()},
    )


def level_set_extract(m: DyadicMeasure, s: float, delta: float, eps: float) -> frozenset[DyadicSquare]:
    """Return the heaviest dyadic mass bucket after removing high-potential squares."""
    return level_set_buckets(m, s, delta, eps).squares.as_set()
