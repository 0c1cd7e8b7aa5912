"""The involution (x, y) -> (x, x^2 - y), which swaps translated parabolas and lines."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import GrassmannLine
from .measures import AtomicMeasure

__all__ = [
    "Tube",
    "TransferAudit",
    "psi",
    "line_of_translated_parabola",
    "tangent_line",
    "lipschitz_bound",
    "transfer_neighbourhood",
    "audit_transfer",
    "parabolic_rescale",
]


@dataclass(frozen=True)
class Tube:
    """The closed w/2-neighbourhood of a line."""

    core: GrassmannLine
    width: float

    def __post_init__(self) -> None:
        if not (self.width > 0) or math.isinf(self.width):
            raise ValueError(f"tube width must be positive and finite, got {self.width}")

    def distance(self, points) -> np.ndarray:
        return np.abs(self.core.signed_distance(points))

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        return self.distance(points) <= self.width / 2.0 * (1.0 + tol)


def psi(point) -> np.ndarray:
    """Psi(x, y) = (x, x^2 - y), applied row-wise to arrays of shape (..., 2)."""
    p = np.asarray(point, dtype=float)
    out = np.empty_like(p)
    out[..., 0] = p[..., 0]
    out[..., 1] = p[..., 0] * p[..., 0] - p[..., 1]
    return out


def line_of_translated_parabola(z) -> GrassmannLine:
    """The line y = 2 x0 x - x0^2 - y0, which is the image of z + {(u, u^2)}."""
    x0, y0 = (float(v) for v in np.asarray(z, dtype=float).reshape(2))
    return GrassmannLine(2.0 * x0, -x0 * x0 - y0)


def tangent_line(z) -> GrassmannLine:
    """The line y = y0 + 2 x0 (x - x0), whose image is Psi(z) + {(u, u^2)}."""
    x0, y0 = (float(v) for v in np.asarray(z, dtype=float).reshape(2))
    return GrassmannLine(2.0 * x0, y0 - 2.0 * x0 * x0)


def lipschitz_bound(box) -> float:
    """Lipschitz constant 1 + 2 max|x| of Psi on the box ((x_lo, x_hi), (y_lo, y_hi))."""
    (x_lo, x_hi), _ = _check_box(box)
    return 1.0 + 2.0 * max(abs(x_lo), abs(x_hi))


def _check_box(box):
    arr = np.asarray(box, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError("box must be ((x_lo, x_hi), (y_lo, y_hi))")
    if not np.all(np.isfinite(arr)):
        raise ValueError("box must be bounded")
    if np.any(arr[:, 1] < arr[:, 0]):
        raise ValueError("box bounds are reversed")
    return arr


@dataclass(frozen=True)
class TransferAudit:
    """Sampled distortion of Psi near a translated parabola."""

    constant: float
    audited: float
    samples: int
    outside_box: int
    escaped: int


def _sample_near_parabola(center: np.ndarray, delta: float, box: np.ndarray, count: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Points within distance 2 delta of center + {(u, u^2)}, with x inside the box range."""
    x = rng.uniform(box[0, 0], box[0, 1], count)
    u = x - center[0]
    base = np.column_stack([x, center[1] + u * u])
    ang = rng.uniform(0.0, 2.0 * math.pi, count)
    rad = 2.0 * delta * np.sqrt(rng.uniform(0.0, 1.0, count))
    return base + rad[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])


def audit_transfer(z, delta: float, box, points, constant: float) -> TransferAudit:
    """Check that Psi maps the given points into the tube of half-width constant * delta around ell_z.

    Points outside the box are counted in ``outside_box`` and excluded from the
    distortion audit (the constant is only valid on the box); ``escaped`` counts
    in-box points that land outside the tube.
    """
    arr = _check_box(box)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    inside = ((pts[:, 0] >= arr[0, 0]) & (pts[:, 0] <= arr[0, 1])
              & (pts[:, 1] >= arr[1, 0]) & (pts[:, 1] <= arr[1, 1]))
    core = tangent_line(z)
    dist = np.abs(core.signed_distance(psi(pts[inside])))
    audited = float(dist.max() / delta) if dist.size else 0.0
    escaped = int(np.sum(dist > constant * delta * (1.0 + 1e-12)))
    return TransferAudit(constant, audited, int(inside.sum()), int((~inside).sum()), escaped)


def transfer_neighbourhood(z, delta: float, box, samples: int = 10_000, seed: int = 0,
                           slack: float = 1.0) -> tuple[Tube, TransferAudit]:
    """Tube around the tangent line ell_z containing Psi of the 2 delta-neighbourhood of Psi(z) + parabola.

    The half-width is C delta with C = 2 (1 + 2 max|x| over the box) + slack; the
    audit samples points of the neighbourhood (restricted to the box's x-range) and
    records the largest observed distance ratio.
    """
    arr = _check_box(box)
    if delta <= 0:
        raise ValueError("delta must be positive")
    constant = 2.0 * lipschitz_bound(arr) + slack
    rng = np.random.default_rng(seed)
    center = psi(np.asarray(z, dtype=float).reshape(2))
    pts = _sample_near_parabola(center, delta, arr, samples, rng)
    audit = audit_transfer(z, delta, arr, pts, constant)
    return Tube(tangent_line(z), 2.0 * constant * delta), audit


def parabolic_rescale(m: AtomicMeasure, R: float) -> AtomicMeasure:
    """Push m forward under (x1, x2) -> (x1 / R, x2 / R^2)."""
    if R < 1:
        raise ValueError("R must be at least 1")
    scale = np.array([1.0 / R, 1.0 / (R * R)])
    lattice = None if m.lattice is None else (m.lattice[0] / R, m.lattice[1] / (R * R))
    sep = m.separation / (R * R)
    return AtomicMeasure(m.points * scale, m.masses, sep, m.tag, lattice, m.dimension,
                         validate_separation=False)
