"""Atomic measures supported on the parabola arc {(x, x^2) : |x| <= 1}."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .dyadic import DyadicMeasure

__all__ = [
    "AtomicMeasure",
    "lattice_parabola_measure",
    "cantor_parabola_measure",
    "cantor_dimension",
    "arc_measure",
    "uniform_measure",
    "dirac",
    "planar_cantor_measure",
    "sum_measure",
    "to_dyadic",
]

TAGS = ("lattice", "cantor", "arc", "custom")


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finitely many weighted atoms in the plane.

    ``lattice`` optionally records steps (hx, hy) such that every atom sits on
    hx * Z x hy * Z; the exact L2 routines use it to work with integer offsets.
    """

    points: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)
    separation: float = 0.0
    tag: str = "custom"
    lattice: tuple[float, float] | None = None
    dimension: float | None = None
    validate_separation: bool = True

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        w = np.array(self.masses, dtype=float).reshape(-1)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and masses differ in length")
        if pts.shape[0] == 0:
            raise ValueError("a measure needs at least one atom")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValueError("atoms and masses must be finite")
        if np.any(w < 0):
            raise ValueError("masses must be nonnegative")
        if w.sum() > 1.0 + 1e-12:
            raise ValueError(f"total mass {w.sum()} exceeds 1")
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")
        if self.separation < 0:
            raise ValueError("separation must be nonnegative")
        if self.validate_separation and len(pts) > 1:
            d, _ = cKDTree(pts).query(pts, k=2)
            gap = float(d[:, 1].min())
            if gap <= self.separation:
                raise ValueError(f"atoms closer ({gap}) than the stated separation {self.separation}")
        if self.lattice is not None:
            hx, hy = (float(v) for v in self.lattice)
            if hx <= 0 or hy <= 0:
                raise ValueError("lattice steps must be positive")
            object.__setattr__(self, "lattice", (hx, hy))
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", w)

    def __len__(self) -> int:
        return int(self.masses.shape[0])

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def diameter(self) -> float:
        pts = self.points
        if len(pts) < 2:
            return 0.0
        if len(pts) <= 4096:
            d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
            return float(math.sqrt(d2.max()))
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)

    def lattice_indices(self) -> np.ndarray:
        """Integer coordinates of the atoms on the recorded lattice."""
        if self.lattice is None:
            raise ValueError("measure carries no lattice")
        steps = np.asarray(self.lattice)
        idx = np.rint(self.points / steps)
        if np.max(np.abs(idx * steps - self.points)) > 1e-9 * steps.min():
            raise ValueError("atoms are not on the recorded lattice")
        return idx.astype(np.int64)

    def translate(self, v: Sequence[float]) -> "AtomicMeasure":
        v = np.asarray(v, dtype=float).reshape(2)
        lattice = self.lattice
        if lattice is not None:
            on = np.allclose(np.rint(v / np.asarray(lattice)) * np.asarray(lattice), v, rtol=0, atol=1e-12)
            lattice = lattice if on else None
        return AtomicMeasure(self.points + v, self.masses, self.separation, "custom", lattice,
                             self.dimension, validate_separation=False)

    def dilate(self, lam: float) -> "AtomicMeasure":
        lam = float(lam)
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        lattice = None if self.lattice is None else (self.lattice[0] * lam, self.lattice[1] * lam)
        return AtomicMeasure(self.points * lam, self.masses, self.separation * lam, "custom", lattice,
                             self.dimension, validate_separation=False)

    def normalized(self) -> "AtomicMeasure":
        return AtomicMeasure(self.points, self.masses / self.total_mass, self.separation, self.tag,
                             self.lattice, self.dimension, validate_separation=False)

    def to_json(self) -> str:
        data = {
            "tag": self.tag,
            "separation": self.separation,
            "atoms": [[float(x), float(y), float(w)] for (x, y), w in zip(self.points, self.masses)],
        }
        if self.lattice is not None:
            data["lattice"] = list(self.lattice)
        if self.dimension is not None:
            data["dimension"] = self.dimension
        return json.dumps(data)

    @classmethod
    def from_json(cls, text: str) -> "AtomicMeasure":
        data = json.loads(text)
        atoms = np.asarray(data["atoms"], dtype=float).reshape(-1, 3)
        lattice = data.get("lattice")
        return cls(atoms[:, :2], atoms[:, 2], float(data.get("separation", 0.0)), data.get("tag", "custom"),
                   None if lattice is None else tuple(lattice), data.get("dimension"))


def _on_parabola(x: np.ndarray) -> np.ndarray:
    return np.column_stack([x, x * x])


def lattice_parabola_measure(delta: float, s: float) -> AtomicMeasure:
    """Equal masses at (x, x^2) for x in delta^s Z cap [-1, 1]."""
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta={delta} outside (0, 1)")
    if not (0.0 < s <= 1.0):
        raise ValueError(f"s={s} outside (0, 1]")
    step = delta**s
    if step > 2.0:
        raise ValueError("lattice step exceeds the arc length; no atoms")
    k = int(math.floor(1.0 / step + 1e-9))
    x = np.arange(-k, k + 1) * step
    w = np.full(len(x), 1.0 / len(x))
    return AtomicMeasure(_on_parabola(x), w, separation=step, tag="lattice",
                         lattice=(step, step * step), dimension=s)


def cantor_dimension(kept_digits: Sequence[int], base: int) -> float:
    return math.log(len(set(kept_digits))) / math.log(base)


def cantor_parabola_measure(delta: float, kept_digits: Sequence[int], base: int) -> AtomicMeasure:
    """Lift of the level-m Cantor set {sum d_i base^-i : d_i kept} to the parabola, m = log_base(1/delta)."""
    base = int(base)
    if base < 2:
        raise ValueError("base must be at least 2")
    digits = sorted(set(int(d) for d in kept_digits))
    if not digits or digits[0] < 0 or digits[-1] >= base:
        raise ValueError(f"kept digits must be a nonempty subset of 0..{base - 1}")
    m_float = math.log(1.0 / delta) / math.log(base)
    m = int(round(m_float))
    if m < 0 or abs(m_float - m) > 1e-9 or not math.isclose(float(base) ** (-m), delta, rel_tol=1e-12):
        raise ValueError(f"delta={delta} is not a power of 1/{base}")
    k = np.zeros(1, dtype=np.int64)
    for _ in range(m):
        k = (k[:, None] * base + np.asarray(digits, dtype=np.int64)[None, :]).reshape(-1)
    step = float(base) ** (-m)
    x = k * step
    w = np.full(len(x), 1.0 / len(x))
    return AtomicMeasure(_on_parabola(x), w, separation=step, tag="cantor", lattice=(step, step * step),
                         dimension=cantor_dimension(digits, base))


def arc_measure(delta: float) -> AtomicMeasure:
    """Equal masses at (k delta, (k delta)^2) for |k delta| <= 1."""
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta={delta} outside (0, 1)")
    k = int(math.floor(1.0 / delta + 1e-9))
    x = np.arange(-k, k + 1) * delta
    w = np.full(len(x), 1.0 / len(x))
    return AtomicMeasure(_on_parabola(x), w, separation=delta, tag="arc", lattice=(delta, delta * delta),
                         dimension=1.0)


def uniform_measure(points, separation: float = 0.0, lattice: tuple[float, float] | None = None) -> AtomicMeasure:
    """Normalized counting measure on a finite point set."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return AtomicMeasure(pts, np.full(len(pts), 1.0 / len(pts)), separation, "custom", lattice,
                         validate_separation=separation > 0)


def dirac(point=(0.0, 0.0), mass: float = 1.0) -> AtomicMeasure:
    return AtomicMeasure(np.asarray(point, dtype=float).reshape(1, 2), [mass])


def to_dyadic(m: AtomicMeasure, level: int) -> DyadicMeasure:
    """Push atoms into the dyadic squares of side 2**-level that contain them."""
    idx = np.floor(m.points * 2.0**level).astype(np.int64)
    return DyadicMeasure(level, idx, m.masses)


def planar_cantor_measure(delta: float, kept_cells: Sequence[tuple[int, int]], base: int) -> AtomicMeasure:
    """Equal masses on the level-m planar Cantor set with the given kept (i, j) digit cells.

    Atoms sit at the lower-left corners of the surviving base^-m cells; the set has
    dimension log|kept| / log base.
    """
    base = int(base)
    cells = sorted(set((int(i), int(j)) for i, j in kept_cells))
    if base < 2 or not cells or any(not (0 <= i < base and 0 <= j < base) for i, j in cells):
        raise ValueError(f"kept cells must be a nonempty subset of {{0..{base - 1}}}^2")
    m_float = math.log(1.0 / delta) / math.log(base)
    m = int(round(m_float))
    if m < 0 or abs(m_float - m) > 1e-9:
        raise ValueError(f"delta={delta} is not a power of 1/{base}")
    digits = np.asarray(cells, dtype=np.int64)
    k = np.zeros((1, 2), dtype=np.int64)
    for _ in range(m):
        k = (k[:, None, :] * base + digits[None, :, :]).reshape(-1, 2)
    step = float(base) ** (-m)
    w = np.full(len(k), 1.0 / len(k))
    return AtomicMeasure(k * step, w, separation=step * (1.0 - 1e-12), tag="cantor", lattice=(step, step),
                         dimension=math.log(len(cells)) / math.log(base))


def sum_measure(m1: AtomicMeasure, m2: AtomicMeasure) -> AtomicMeasure:
    """The convolution m1 * m2 as an atomic measure (coinciding sums merged)."""
    pts = (m1.points[:, None, :] + m2.points[None, :, :]).reshape(-1, 2)
    w = (m1.masses[:, None] * m2.masses[None, :]).reshape(-1)
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    merged = np.bincount(inv.reshape(-1), weights=w)
    lattice = None
    if m1.lattice is not None and m2.lattice is not None:
        hx = min(m1.lattice[0], m2.lattice[0])
        hy = min(m1.lattice[1], m2.lattice[1])
        ok = all(abs(a / b - round(a / b)) < 1e-9 for a, b in
                 ((m1.lattice[0], hx), (m2.lattice[0], hx), (m1.lattice[1], hy), (m2.lattice[1], hy)))
        lattice = (hx, hy) if ok else None
    return AtomicMeasure(uniq, merged, 0.0, "custom", lattice, validate_separation=False)
