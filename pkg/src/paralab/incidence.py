"""Katz-Tao square families, incidences with tubes and translated parabolas, richness levels."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dyadic import GrassmannLine, SquareFamily, delta_set_constant, level_of
from .exponents import gamma_exponent
from .measures import lattice_parabola_measure
from .psi import Tube, line_of_translated_parabola, lipschitz_bound, psi

__all__ = [
    "IncidenceInstance",
    "RichnessHistogram",
    "FurstenbergReport",
    "random_katz_tao_squares",
    "dyadic_katz_tao_constant",
    "katz_tao_subfamily",
    "square_meets_tube",
    "square_meets_parabola",
    "tube_candidates",
    "parabola_candidates",
    "scan_incidences",
    "count_incidences",
    "fu_ren_rhs",
    "richness_histogram",
    "furstenberg_check",
    "generate_fu_ren_instance",
    "lattice_furstenberg_instance",
    "transfer_instance",
]

KINDS = ("tube", "parabola")
_TOL = 1e-12


def dyadic_katz_tao_constant(family: SquareFamily, s: float) -> float:
    """Max over dyadic squares Q of side r >= delta of |family in Q| (delta / r)^s, at least 1."""
    if len(family) == 0:
        return 1.0
    best = 1.0
    for k in range(family.level + 1):
        _, counts = np.unique(family.indices >> k, axis=0, return_counts=True)
        best = max(best, float(counts.max()) * 2.0 ** (-k * s))
    # coarser squares than the unit square keep counting the same points
    span = int(np.max(np.abs(family.indices)).item()).bit_length() + 1
    for k in range(family.level + 1, family.level + span + 1):
        _, counts = np.unique(family.indices >> k, axis=0, return_counts=True)
        best = max(best, float(counts.max()) * 2.0 ** (-k * s))
    return best


def _quota_targets(s: float, levels: int, branching: int) -> list[int]:
    targets = []
    for lev in range(levels + 1):
        full = branching**lev
        targets.append(int(min(full, max(1, round(2.0 ** (s * lev))))))
    for lev in range(1, levels + 1):
        targets[lev] = max(targets[lev], targets[lev - 1])
        targets[lev] = min(targets[lev], targets[lev - 1] * branching)
    return targets


def random_katz_tao_squares(s: float, delta: float, C: float = 1.0, seed: int = 0,
                            max_attempts: int = 32) -> SquareFamily:
    """Random dyadic-branching subset of the delta-squares of [0, 1)^2.

    Level L keeps round(2^(s L)) squares; each parent receives an exact quota of
    floor or ceil of the ratio of consecutive targets, the extra units going to a
    random choice of parents, and picks its surviving children uniformly at random.
    The result is audited with dyadic squares and regenerated (from the next seed
    stream) until the constant is at most 4 C.
    """
    if not (0.0 <= s <= 2.0) or math.isnan(s):
        raise ValueError(f"infeasible: s={s} outside [0, 2]")
    if C < 1.0:
        raise ValueError(f"infeasible: constant target C={C} below 1")
    m = level_of(delta)
    targets = _quota_targets(s, m, 4)
    root = np.random.default_rng(seed)
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt]) if attempt else root
        current = np.zeros((1, 2), dtype=np.int64)
        for lev in range(1, m + 1):
            parents = len(current)
            base, extra = divmod(targets[lev], parents)
            quota = np.full(parents, base)
            quota[rng.permutation(parents)[:extra]] += 1
            order = np.argsort(rng.random((parents, 4)), axis=1)
            take = np.arange(4)[None, :] < quota[:, None]
            child = order[take]
            par = np.repeat(current, quota, axis=0)
            current = np.column_stack([2 * par[:, 0] + (child >> 1), 2 * par[:, 1] + (child & 1)])
        fam = SquareFamily(m, current)
        if dyadic_katz_tao_constant(fam, s) <= 4.0 * C:
            return fam
    raise ValueError(f"infeasible: no family with constant <= {4 * C} after {max_attempts} attempts")


def katz_tao_subfamily(family: SquareFamily, s: float, rng: np.random.Generator) -> SquareFamily:
    """Thin a curve-like family to a Katz-Tao (delta, s) subfamily by branching on columns.

    Columns are organised in a binary dyadic tree; level L keeps round(2^(s L))
    column blocks (as far as the family allows) and each kept column contributes one
    randomly chosen square.
    """
    if len(family) == 0:
        return family
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"s={s} outside [0, 1]")
    m = family.level
    idx = family.indices
    cols = np.unique(idx[:, 0])
    lo = int(cols.min())
    rel = cols - lo
    depth = max(1, int(rel.max()).bit_length())
    targets = _quota_targets(s, m, 2)
    current = np.zeros(1, dtype=np.int64)
    for lev in range(1, depth + 1):
        present = np.unique(rel >> (depth - lev))
        want = targets[min(lev, m)]
        parents = len(current)
        base, extra = divmod(want, parents)
        quota = np.full(parents, base)
        quota[rng.permutation(parents)[:extra]] += 1
        kids = np.column_stack([2 * current, 2 * current + 1])
        avail = np.isin(kids, present)
        key = rng.random(kids.shape) + 2.0 * ~avail
        order = np.argsort(key, axis=1)
        kids = np.take_along_axis(kids, order, axis=1)
        take = np.minimum(np.maximum(quota, 1), avail.sum(axis=1))
        current = kids[np.arange(2)[None, :] < take[:, None]]
    keep = np.isin(idx[:, 0] - lo, current)
    sub = idx[keep]
    # one random square per kept column
    key = rng.random(len(sub))
    order = np.lexsort((key, sub[:, 0]))
    sub = sub[order]
    first = np.ones(len(sub), dtype=bool)
    first[1:] = sub[1:, 0] != sub[:-1, 0]
    return SquareFamily(m, sub[first])


def square_meets_tube(tube: Tube, indices, level: int) -> np.ndarray:
    """Centre-distance test: dist(centre, core) <= w/2 + half diagonal."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1, 2)
    delta = 2.0**-level
    centres = (idx + 0.5) * delta
    reach = tube.width / 2.0 + delta / math.sqrt(2.0)
    return tube.distance(centres) <= reach * (1.0 + _TOL)


def _parabola_range(p: np.ndarray, x0: np.ndarray, x1: np.ndarray, delta: float):
    a, b = float(p[0]), float(p[1])
    lo = np.maximum(x0, a - 1.0 - delta)
    hi = np.minimum(x1, a + 1.0 + delta)
    valid = lo <= hi
    g_lo = (lo - a) ** 2 + b
    g_hi = (hi - a) ** 2 + b
    inside = (lo <= a) & (a <= hi)
    gmin = np.where(inside, b, np.minimum(g_lo, g_hi))
    gmax = np.maximum(g_lo, g_hi)
    return valid, gmin, gmax


def square_meets_parabola(p, indices, level: int) -> np.ndarray:
    """Test q against p + [P]_delta: vertical gap from the centre row to the arc over q's columns.

    The arc is taken over x in [p_x - 1 - delta, p_x + 1 + delta]; a square meets the
    neighbourhood when the gap is at most delta plus the square's half diagonal.
    """
    idx = np.asarray(indices, dtype=np.int64).reshape(-1, 2)
    delta = 2.0**-level
    p = np.asarray(p, dtype=float).reshape(2)
    x0 = idx[:, 0] * delta
    valid, gmin, gmax = _parabola_range(p, x0, x0 + delta, delta)
    yc = (idx[:, 1] + 0.5) * delta
    gap = np.maximum(0.0, np.maximum(gmin - yc, yc - gmax))
    return valid & (gap <= (delta + delta / math.sqrt(2.0)) * (1.0 + _TOL))


def _unit_window(level: int) -> tuple[tuple[int, int], tuple[int, int]]:
    n = 2**level
    return (0, n - 1), (0, n - 1)


def tube_candidates(tube: Tube, level: int, window=None) -> SquareFamily:
    """All squares of the window (default [0, 1)^2) meeting the tube."""
    (cx0, cx1), (cy0, cy1) = window or _unit_window(level)
    delta = 2.0**-level
    cols = np.arange(cx0, cx1 + 1)
    if tube.core.is_vertical:
        rows = np.arange(cy0, cy1 + 1)
        grid = np.stack(np.meshgrid(cols, rows, indexing="ij"), axis=-1).reshape(-1, 2)
        return SquareFamily(level, grid[square_meets_tube(tube, grid, level)])
    a, b = tube.core.slope, tube.core.intercept
    reach = (tube.width / 2.0 + delta / math.sqrt(2.0)) * math.sqrt(1.0 + a * a)
    xc = (cols + 0.5) * delta
    ylo = a * xc + b - reach
    yhi = a * xc + b + reach
    r0 = np.maximum(np.floor(ylo / delta - 0.5).astype(np.int64) - 1, cy0)
    r1 = np.minimum(np.ceil(yhi / delta - 0.5).astype(np.int64) + 1, cy1)
    return _filter_ranges(cols, r0, r1, level, lambda g: square_meets_tube(tube, g, level))


def parabola_candidates(p, level: int, window=None) -> SquareFamily:
    """All squares meeting p + [P]_delta (optionally clipped to a window of index ranges)."""
    p = np.asarray(p, dtype=float).reshape(2)
    delta = 2.0**-level
    c0 = int(math.floor((p[0] - 1.0 - delta) / delta)) - 1
    c1 = int(math.floor((p[0] + 1.0 + delta) / delta)) + 1
    r_lo, r_hi = -(2**62), 2**62
    if window is not None:
        (wx0, wx1), (r_lo, r_hi) = window
        c0, c1 = max(c0, wx0), min(c1, wx1)
    cols = np.arange(c0, c1 + 1)
    x0 = cols * delta
    valid, gmin, gmax = _parabola_range(p, x0, x0 + delta, delta)
    cols, gmin, gmax = cols[valid], gmin[valid], gmax[valid]
    reach = delta + delta / math.sqrt(2.0)
    r0 = np.maximum(np.floor((gmin - reach) / delta - 0.5).astype(np.int64) - 1, r_lo)
    r1 = np.minimum(np.ceil((gmax + reach) / delta - 0.5).astype(np.int64) + 1, r_hi)
    return _filter_ranges(cols, r0, r1, level, lambda g: square_meets_parabola(p, g, level))


def _filter_ranges(cols, r0, r1, level, predicate) -> SquareFamily:
    counts = np.maximum(r1 - r0 + 1, 0)
    if counts.sum() == 0:
        return SquareFamily(level, np.zeros((0, 2), dtype=np.int64))
    cx = np.repeat(cols, counts)
    start = np.repeat(r0, counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    grid = np.column_stack([cx, start + offs])
    return SquareFamily(level, grid[predicate(grid)])


@dataclass(frozen=True, eq=False)
class IncidenceInstance:
    """Anchors (tubes or parabola translates) with their associated square families."""

    delta: float
    kind: str
    anchors: tuple
    families: tuple
    C1: float = 1.0
    C2: float = 1.0
    check: bool = True

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        level = level_of(self.delta)
        if len(self.anchors) != len(self.families):
            raise ValueError("one family per anchor is required")
        anchors = []
        for a in self.anchors:
            if self.kind == "tube":
                if not isinstance(a, Tube):
                    raise TypeError("tube instances need Tube anchors")
                anchors.append(a)
            else:
                anchors.append(tuple(float(v) for v in np.asarray(a, dtype=float).reshape(2)))
        fams = []
        for f in self.families:
            if not isinstance(f, SquareFamily):
                f = SquareFamily(level, f)
            if f.level != level:
                raise ValueError("family level differs from the instance scale")
            fams.append(f)
        object.__setattr__(self, "anchors", tuple(anchors))
        object.__setattr__(self, "families", tuple(fams))
        if self.check:
            self.validate()

    @property
    def level(self) -> int:
        return level_of(self.delta)

    def meets(self, anchor_index: int, indices) -> np.ndarray:
        a = self.anchors[anchor_index]
        if self.kind == "tube":
            return square_meets_tube(a, indices, self.level)
        return square_meets_parabola(a, indices, self.level)

    def validate(self) -> None:
        for i, fam in enumerate(self.families):
            if len(fam) == 0:
                continue
            ok = self.meets(i, fam.indices)
            if not np.all(ok):
                bad = fam.indices[np.argmin(ok)]
                raise ValueError(f"invariant violated: square {tuple(int(v) for v in bad)} "
                                 f"does not meet anchor {i} ({self.anchors[i]})")

    def union(self) -> SquareFamily:
        parts = [f.indices for f in self.families if len(f)]
        if not parts:
            return SquareFamily(self.level, np.zeros((0, 2), dtype=np.int64))
        return SquareFamily(self.level, np.vstack(parts))

    def to_json(self) -> str:
        if self.kind == "tube":
            anchors = [[a.core.slope, a.core.intercept, a.width] for a in self.anchors]
        else:
            anchors = [list(a) for a in self.anchors]
        return json.dumps({
            "delta": self.delta, "kind": self.kind, "C1": self.C1, "C2": self.C2,
            "anchors": anchors,
            "families": [f.indices.tolist() for f in self.families],
        })

    @classmethod
    def from_json(cls, text: str) -> "IncidenceInstance":
        d = json.loads(text)
        level = level_of(d["delta"])
        if d["kind"] == "tube":
            anchors = [Tube(GrassmannLine(a[0], a[1]), a[2]) for a in d["anchors"]]
        else:
            anchors = [tuple(a) for a in d["anchors"]]
        fams = [SquareFamily(level, np.asarray(f, dtype=np.int64).reshape(-1, 2)) for f in d["families"]]
        return cls(d["delta"], d["kind"], tuple(anchors), tuple(fams), d["C1"], d["C2"])


def count_incidences(inst: IncidenceInstance) -> tuple[int, np.ndarray]:
    """Total and per-anchor family sizes, after re-verifying every incidence geometrically."""
    inst.validate()
    per = np.array([len(f) for f in inst.families], dtype=np.int64)
    return int(per.sum()), per


def scan_incidences(inst: IncidenceInstance, window) -> tuple[int, np.ndarray]:
    """Independent scalar double loop over every square of the window and every anchor.

    A pair (anchor, square) counts when the square belongs to the anchor's family and
    meets the anchor's neighbourhood, each tested without vectorization.
    """
    (cx0, cx1), (cy0, cy1) = window
    delta = inst.delta
    half_diag = delta / math.sqrt(2.0)
    per = np.zeros(len(inst.anchors), dtype=np.int64)
    for i, (anchor, fam) in enumerate(zip(inst.anchors, inst.families)):
        members = {(int(a), int(b)) for a, b in fam.indices}
        for ix in range(cx0, cx1 + 1):
            for iy in range(cy0, cy1 + 1):
                if (ix, iy) not in members:
                    continue
                xc, yc = (ix + 0.5) * delta, (iy + 0.5) * delta
                if inst.kind == "tube":
                    line = anchor.core
                    if line.is_vertical:
                        dist = abs(xc - line.intercept)
                    else:
                        dist = abs(line.slope * xc - yc + line.intercept) / math.hypot(1.0, line.slope)
                    hit = dist <= (anchor.width / 2.0 + half_diag) * (1.0 + _TOL)
                else:
                    px, py = anchor
                    lo = max(ix * delta, px - 1.0 - delta)
                    hi = min((ix + 1) * delta, px + 1.0 + delta)
                    if lo > hi:
                        continue
                    vals = [(lo - px) ** 2 + py, (hi - px) ** 2 + py]
                    gmin = py if lo <= px <= hi else min(vals)
                    gmax = max(vals)
                    gap = max(0.0, gmin - yc, yc - gmax)
                    hit = gap <= (delta + half_diag) * (1.0 + _TOL)
                if hit:
                    per[i] += 1
    return int(per.sum()), per


def scan_neighbourhood(anchor, kind: str, level: int, window) -> int:
    """Number of window squares meeting one anchor's neighbourhood, by a scalar loop."""
    (cx0, cx1), (cy0, cy1) = window
    fam = SquareFamily(level, [(ix, iy) for ix in range(cx0, cx1 + 1) for iy in range(cy0, cy1 + 1)])
    inst = IncidenceInstance(2.0**-level, kind, (anchor,), (fam,), check=False)
    return scan_incidences(inst, window)[0]


def fu_ren_rhs(C1: float, C2: float, F_count: float, anchor_count: float, delta: float, eps: float) -> float:
    """delta^-eps * sqrt(delta^-1 * C1 * C2 * |F| * |anchors|)."""
    for name, v in (("C1", C1), ("C2", C2), ("F_count", F_count), ("anchor_count", anchor_count),
                    ("delta", delta)):
        if not (v > 0):
            raise ValueError(f"{name} must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return delta ** (-eps) * math.sqrt(C1 * C2 * F_count * anchor_count / delta)


@dataclass(frozen=True, eq=False)
class RichnessHistogram:
    """Squares of the union grouped by richness r_P(q) in [r, 2r) for dyadic r."""

    levels: dict
    richness: dict = field(repr=False)
    l2_proxy: float = 0.0
    delta: float = 1.0

    def rows(self) -> list[tuple[int, int, float]]:
        """(r, count, lebesgue_proxy) with lebesgue_proxy = r^2 delta^2 |F_r|."""
        return [(r, len(f), r * r * self.delta**2 * len(f)) for r, f in sorted(self.levels.items())]

    def to_csv(self) -> str:
        lines = ["r,count,lebesgue_proxy"]
        lines += [f"{r},{c},{repr(float(p))}" for r, c, p in self.rows()]
        return "\n".join(lines) + "\n"


def richness_histogram(inst: IncidenceInstance) -> RichnessHistogram:
    """Per-square richness (number of families containing the square) and its dyadic buckets."""
    parts = [f.indices for f in inst.families if len(f)]
    if not parts:
        return RichnessHistogram({}, {}, 0.0, inst.delta)
    allrows = np.vstack(parts)
    uniq, counts = np.unique(allrows, axis=0, return_counts=True)
    bucket = 2 ** np.floor(np.log2(counts)).astype(np.int64)
    levels = {int(r): SquareFamily(inst.level, uniq[bucket == r]) for r in np.unique(bucket)}
    richness = {(int(a), int(b)): int(c) for (a, b), c in zip(uniq, counts)}
    proxy = float(sum(r * r * inst.delta**2 * len(f) for r, f in levels.items()))
    return RichnessHistogram(levels, richness, proxy, inst.delta)


@dataclass(frozen=True)
class FurstenbergReport:
    union_size: int
    threshold: float
    gamma: float
    passed: bool
    anchor_constant: float
    family_constant: float
    s: float
    t: float
    kappa: float


def _anchor_family(inst: IncidenceInstance) -> SquareFamily:
    if inst.kind == "parabola":
        return SquareFamily.covering(np.asarray(inst.anchors), inst.level)
    params = np.array([[a.core.slope, a.core.intercept] for a in inst.anchors])
    return SquareFamily.covering(params, inst.level)


def furstenberg_check(inst: IncidenceInstance, s: float, t: float, kappa: float,
                      max_constant: float | None = None) -> FurstenbergReport:
    """Compare |union of families| with delta^(-gamma(s, t) + kappa), auditing both set constants.

    Constants follow the relative (delta, s)-set normalization; anchors are audited as
    the squares containing parabola centres or (slope, intercept) parameters.
    """
    anchors = _anchor_family(inst)
    c_anchor = delta_set_constant(anchors, t)
    c_family = max((delta_set_constant(f, s) for f in inst.families if len(f)), default=1.0)
    if max_constant is not None:
        if c_anchor > max_constant:
            raise ValueError(f"audit failed: anchor (delta, {t})-constant {c_anchor:.4g} > {max_constant}")
        if c_family > max_constant:
            raise ValueError(f"audit failed: family (delta, {s})-constant {c_family:.4g} > {max_constant}")
    gamma = gamma_exponent(s, t)
    size = len(inst.union())
    threshold = inst.delta ** (-gamma + kappa)
    return FurstenbergReport(size, threshold, gamma, size >= threshold, c_anchor, c_family, s, t, kappa)


def generate_fu_ren_instance(kind: str, s: float, t: float, delta: float, seed: int = 0) -> IncidenceInstance:
    """Random instance with Katz-Tao (delta, t) anchors and Katz-Tao (delta, s) families.

    Anchors come from random_katz_tao_squares. Parabola anchors are the square centres;
    tube anchors are the width-delta tubes around y = a x + b with (a, b) the centre.
    Each family thins the anchor's full neighbourhood (inside [0, 1)^2 for tubes) by
    column branching. C1 and C2 are the audited dyadic Katz-Tao constants.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if s + t > 2.0 + 1e-12:
        raise ValueError("s + t must not exceed 2")
    anchors_sq = random_katz_tao_squares(t, delta, 1.0, seed)
    rng = np.random.default_rng([seed, 7919])
    level = anchors_sq.level
    anchors = []
    families = []
    for c in anchors_sq.centers():
        if kind == "tube":
            anchor = Tube(GrassmannLine(c[0], c[1]), delta)
            full = tube_candidates(anchor, level)
        else:
            anchor = (float(c[0]), float(c[1]))
            full = parabola_candidates(anchor, level)
        anchors.append(anchor)
        families.append(katz_tao_subfamily(full, s, rng))
    c1 = dyadic_katz_tao_constant(anchors_sq, t)
    c2 = max((dyadic_katz_tao_constant(f, s) for f in families if len(f)), default=1.0)
    return IncidenceInstance(delta, kind, tuple(anchors), tuple(families), c1, c2)


def lattice_furstenberg_instance(s: float, delta: float, anchor_count: int | None = None,
                                 t: float | None = None) -> IncidenceInstance:
    """Parabola instance built from the lattice set K = {(x, x^2) : x in delta^s Z}.

    Anchors are the squares containing points of K (or the first ``anchor_count`` of
    them); each family covers p + K, so the union covers K + K-like sums.
    """
    level = level_of(delta)
    K = lattice_parabola_measure(delta, s).points
    anchor_sq = SquareFamily.covering(K, level)
    centres = anchor_sq.centers()
    if anchor_count is not None:
        pick = np.linspace(0, len(centres) - 1, anchor_count).round().astype(int)
        centres = centres[np.unique(pick)]
    families = [SquareFamily.covering(c + K, level) for c in centres]
    return IncidenceInstance(delta, "parabola", tuple(map(tuple, centres)), tuple(families))


@dataclass(frozen=True, eq=False)
class TransferResult:
    instance: IncidenceInstance
    constant: float
    per_anchor_source: np.ndarray
    per_anchor_image: np.ndarray
    max_discrepancy: float


def transfer_instance(inst: IncidenceInstance) -> TransferResult:
    """Map a parabola instance through Psi to a tube instance.

    Each anchor centre z becomes the tube of half-width C delta around the image line
    of z + parabola, with C = 1 + 2 max|x| over the box spanned by the family squares
    (Lipschitz constant of Psi) times the reach delta + half diagonal, plus one delta.
    Each family square is replaced by the square containing Psi of its centre.
    """
    if inst.kind != "parabola":
        raise ValueError("only parabola instances can be transferred")
    level = inst.level
    delta = inst.delta
    union = inst.union()
    if len(union):
        lo = union.indices.min(axis=0) * delta
        hi = (union.indices.max(axis=0) + 1) * delta
    else:
        lo = hi = np.zeros(2)
    box = ((lo[0], hi[0]), (lo[1], hi[1]))
    lip = lipschitz_bound(box)
    constant = lip * (1.0 + 1.0 / math.sqrt(2.0)) + 1.0
    anchors = []
    families = []
    for z, fam in zip(inst.anchors, inst.families):
        line = line_of_translated_parabola(z)
        anchors.append(Tube(line, 2.0 * constant * delta))
        families.append(SquareFamily.covering(psi(fam.centers()), level))
    image = IncidenceInstance(delta, "tube", tuple(anchors), tuple(families), inst.C1, inst.C2, check=False)
    src = np.array([len(f) for f in inst.families])
    img = np.array([len(f) for f in families])
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.where(src > 0, np.abs(src - img) / np.maximum(src, 1), 0.0)
    return TransferResult(image, constant, src, img, float(disc.max()) if len(disc) else 0.0)
