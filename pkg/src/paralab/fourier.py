"""Mollified grids, convolution powers, Fourier L^p norms and Riesz energies.

Fourier convention: f-hat(xi) = integral of f(x) exp(-2 pi i x . xi) dx.
"""

from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sfft
from scipy import integrate, ndimage, signal, special
from scipy.spatial import cKDTree

from .measures import AtomicMeasure
from .mollifier import MollifierSpec, default_mollifier

__all__ = [
    "GridField",
    "SpectrumField",
    "FourierEnergy",
    "mollify",
    "convolve_power",
    "power_spectrum",
    "l2_norm_sq",
    "disk_weights",
    "spectrum_l2_on_disk",
    "fourier_transform_atomic",
    "fourier_lp_norm",
    "riesz_energy_fourier",
    "spatial_energy_grid",
    "cell_self_energy",
    "mollified_power_l2",
    "convolution_power_atoms",
    "flattening_sequence",
    "SandwichReport",
    "discretization_sandwich",
]

GRID_MAGIC = b"PLGF"
GRID_VERSION = 1
DIRECT_ENERGY_LIMIT = 256 * 256


@dataclass(frozen=True, eq=False)
class GridField:
    """Density values on the nodes origin + h * (i, j), i < nx, j < ny."""

    origin: tuple[float, float]
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("grid values must be two-dimensional")
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        if np.any(vals < 0):
            raise ValueError("grid values must be nonnegative")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(self.values.shape)  # type: ignore[return-value]

    @property
    def half_width(self) -> tuple[float, float]:
        return (self.shape[0] * self.h / 2.0, self.shape[1] * self.h / 2.0)

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.h * self.h)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.shape
        return (self.origin[0] + self.h * np.arange(nx), self.origin[1] + self.h * np.arange(ny))

    def save(self, path: str | Path) -> None:
        nx, ny = self.shape
        sx, sy = self.half_width
        header = GRID_MAGIC + struct.pack("<I5d2Q", GRID_VERSION, self.origin[0], self.origin[1], self.h,
                                          sx, sy, nx, ny)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "GridField":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != GRID_MAGIC:
                raise ValueError(f"{path} is not a grid dump")
            version, ox, oy, h, _sx, _sy, nx, ny = struct.unpack("<I5d2Q", fh.read(4 + 5 * 8 + 2 * 8))
            if version != GRID_VERSION:
                raise ValueError(f"unsupported grid dump version {version}")
            data = np.frombuffer(fh.read(), dtype="<f8")
        if data.size != nx * ny:
            raise ValueError("truncated grid dump")
        return cls((ox, oy), h, data.reshape(nx, ny).astype(float))


@dataclass(frozen=True, eq=False)
class SpectrumField:
    """Complex values on the centred frequency grid freq_spacing * (k1, k2)."""

    freq_spacing: float
    freqs_x: np.ndarray = field(repr=False)
    freqs_y: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def value_at_zero(self) -> complex:
        i = int(np.argmin(np.abs(self.freqs_x)))
        j = int(np.argmin(np.abs(self.freqs_y)))
        return complex(self.values[i, j])


@dataclass(frozen=True)
class FourierEnergy:
    """Fourier-side energy (without the constant c_{2,u}) and its divergence diagnostics."""

    value: float
    outer_share: float
    diverging: bool
    freq_extent: float


def _check_u(u: float) -> float:
    u = float(u)
    if not (0.0 < u < 2.0):
        raise ValueError(f"u={u} outside (0, 2)")
    return u


def _kernel_stencil(delta: float, h: float, psi: MollifierSpec) -> np.ndarray:
    """psi_delta sampled on the grid and renormalized so h^2 * sum = 1."""
    rad = int(math.ceil(psi.outer * delta / h))
    offs = np.arange(-rad, rad + 1) * h
    xx, yy = np.meshgrid(offs, offs, indexing="ij")
    k = psi.profile(np.sqrt(xx**2 + yy**2) / delta)
    total = k.sum() * h * h
    if total <= 0:
        raise ValueError("grid too coarse to resolve the mollifier")
    return k / total


def _deposit(points: np.ndarray, masses: np.ndarray, origin: np.ndarray, h: float,
             shape: tuple[int, int]) -> np.ndarray:
    """Cloud-in-cell deposit of point masses onto grid nodes (masses, not densities)."""
    f = (points - origin) / h
    base = np.floor(f).astype(np.int64)
    t = f - base
    snap = t < 1e-9
    t[snap] = 0.0
    grid = np.zeros(shape)
    for dx, wx in ((0, 1.0 - t[:, 0]), (1, t[:, 0])):
        for dy, wy in ((0, 1.0 - t[:, 1]), (1, t[:, 1])):
            w = masses * wx * wy
            keep = w != 0
            ix = base[keep, 0] + dx
            iy = base[keep, 1] + dy
            if np.any(ix < 0) or np.any(iy < 0) or np.any(ix >= shape[0]) or np.any(iy >= shape[1]):
                raise ValueError("support escapes domain")
            np.add.at(grid, (ix, iy), w[keep])
    return grid


def mollify(m: AtomicMeasure, delta: float, S: float, h: float | None = None,
            psi: MollifierSpec | None = None) -> GridField:
    """m * psi_delta sampled on the square [-S, S)^2 with spacing h (default delta / 4)."""
    psi = psi or default_mollifier()
    h = delta / 4.0 if h is None else float(h)
    if h > delta / 4.0 * (1 + 1e-12):
        raise ValueError("grid spacing must be at most delta / 4")
    if np.any(np.abs(m.points) > S - delta):
        raise ValueError("support escapes domain")
    n = int(round(2.0 * S / h))
    origin = np.array([-S, -S])
    raster = _deposit(m.points, m.masses, origin, h, (n, n))
    kern = _kernel_stencil(delta, h, psi)
    vals = signal.fftconvolve(raster, kern, mode="same")
    return GridField((-S, -S), h, np.maximum(vals, 0.0))


def _power_layout(m: AtomicMeasure, n: int, h: float, margin_cells: int):
    lo, hi = m.bounding_box()
    base = h * np.floor(lo / h) - math.ceil(margin_cells / n) * h
    need = np.ceil((n * (hi - base) + margin_cells * h) / h).astype(int) + 2
    return base, need


def convolve_power(m: AtomicMeasure, n: int, delta: float, h: float | None = None,
                   shape: tuple[int, int] | None = None, margin: float | None = None,
                   psi: MollifierSpec | None = None) -> GridField:
    """(m^n) * psi_delta via spectral exponentiation of the rasterized atoms.

    The output origin is n times the raster origin, so the n-fold self-convolution
    needs no shifting. ``margin`` (default delta) widens the zero padding, which lets
    two mollification scales share one grid.
    """
    psi = psi or default_mollifier()
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    h = delta / 4.0 if h is None else float(h)
    reach = max(delta, margin or 0.0) * psi.outer
    margin_cells = int(math.ceil(reach / h)) + 2
    base, need = _power_layout(m, n, h, margin_cells)
    if shape is None:
        shape = (sfft.next_fast_len(int(need[0]), real=True), sfft.next_fast_len(int(need[1]), real=True))
    elif shape[0] < need[0] or shape[1] < need[1]:
        raise ValueError(f"wraparound risk: grid {shape} smaller than required {tuple(int(v) for v in need)}")
    raster = _deposit(m.points, m.masses, base, h, shape)
    spec = sfft.rfft2(raster, s=shape, workers=-1)
    del raster
    spec = spec**n if n > 1 else spec
    kern = _kernel_stencil(delta, h, psi)
    rad = kern.shape[0] // 2
    wrapped = np.zeros(shape)
    idx = np.arange(-rad, rad + 1)
    wrapped[np.ix_(idx % shape[0], idx % shape[1])] = kern
    spec *= sfft.rfft2(wrapped, workers=-1)
    del wrapped
    out = sfft.irfft2(spec, s=shape, workers=-1)
    del spec
    np.maximum(out, 0.0, out=out)
    return GridField((n * base[0], n * base[1]), h, out)


def power_spectrum(m: AtomicMeasure, n: int, h: float, pad: float = 2.0) -> SpectrumField:
    """DFT-grid samples of (m^n)-hat for the rasterized measure (no mollifier).

    The raster is zero padded so the grid covers the support of m^n with room to
    spare; frequencies lie on multiples of 1 / (N h) up to the Nyquist limit 1 / (2h).
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    base, need = _power_layout(m, n, h, 2)
    size = int(2 ** math.ceil(math.log2(max(need.max() * pad, 8))))
    raster = _deposit(m.points, m.masses, base, h, (size, size))
    spec = sfft.fft2(raster, workers=-1) ** n
    freqs = sfft.fftfreq(size, d=h)
    phase = np.exp(-2j * np.pi * n * (base[0] * freqs[:, None] + base[1] * freqs[None, :]))
    spec = sfft.fftshift(spec * phase)
    freqs = sfft.fftshift(freqs)
    return SpectrumField(1.0 / (size * h), freqs, freqs, spec)


def l2_norm_sq(f: GridField) -> float:
    """h^2 * sum of squared values."""
    return float(np.sum(f.values * f.values) * f.h * f.h)


def disk_weights(fx: np.ndarray, fy: np.ndarray, spacing: float, R: float, sub: int = 16) -> np.ndarray:
    """Fraction of each frequency cell (centred at the nodes) lying inside the disk of radius R."""
    fx = np.asarray(fx, dtype=float)
    fy = np.asarray(fy, dtype=float)
    rr = np.sqrt(fx[:, None] ** 2 + fy[None, :] ** 2)
    half_diag = spacing / math.sqrt(2.0)
    w = (rr + half_diag <= R).astype(float)
    edge = np.nonzero((rr - half_diag < R) & (rr + half_diag > R))
    if edge[0].size:
        offs = (np.arange(sub) + 0.5) / sub - 0.5
        ox, oy = np.meshgrid(offs * spacing, offs * spacing, indexing="ij")
        px = fx[edge[0]][:, None] + ox.reshape(1, -1)
        py = fy[edge[1]][:, None] + oy.reshape(1, -1)
        w[edge] = np.mean(px**2 + py**2 <= R * R, axis=1)
    return w


def spectrum_l2_on_disk(spec: SpectrumField, R: float, power: int = 1) -> float:
    """Integral over B(R) of |values|^(2 power), as a weighted Riemann sum on the grid."""
    if R > np.abs(spec.freqs_x).max() or R > np.abs(spec.freqs_y).max():
        raise ValueError("disk exceeds the frequency grid")
    w = disk_weights(spec.freqs_x, spec.freqs_y, spec.freq_spacing, R)
    vals = np.abs(spec.values) ** (2 * power)
    return float(np.sum(w * vals) * spec.freq_spacing**2)


def _exp_matrix(coord: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    return np.exp(-2j * np.pi * np.outer(coord, freqs))


def _default_spacing(m: AtomicMeasure, R: float) -> float:
    diam = m.diameter
    if diam == 0.0:
        return R / 32.0
    return min(1.0 / (4.0 * diam), R / 32.0)


def fourier_transform_atomic(m: AtomicMeasure, R: float, freq_spacing: float | None = None) -> SpectrumField:
    """Exact exponential sums m-hat(xi) on the grid spacing * Z^2 cap [-R, R]^2."""
    df = _default_spacing(m, R) if freq_spacing is None else float(freq_spacing)
    k = int(math.ceil(R / df))
    freqs = np.arange(-k, k + 1) * df
    ex = _exp_matrix(m.points[:, 0], freqs) * m.masses[:, None]
    ey = _exp_matrix(m.points[:, 1], freqs)
    return SpectrumField(df, freqs, freqs.copy(), ex.T @ ey)


def fourier_lp_norm(m: AtomicMeasure, p: float, R: float, freq_spacing: float | None = None,
                    chunk: int = 256) -> float:
    """(integral over B(R) of |m-hat|^p)^(1/p) from exact exponential sums.

    Uses |m-hat(-xi)| = |m-hat(xi)| to sweep only xi_1 >= 0.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if R < 1:
        raise ValueError("R must be at least 1")
    df = _default_spacing(m, R) if freq_spacing is None else float(freq_spacing)
    k = int(math.ceil(R / df)) + 1
    fx_all = np.arange(0, k + 1) * df
    fy = np.arange(-k, k + 1) * df
    ey = _exp_matrix(m.points[:, 1], fy)
    total = 0.0
    for start in range(0, len(fx_all), chunk):
        fx = fx_all[start:start + chunk]
        ex = _exp_matrix(m.points[:, 0], fx) * m.masses[:, None]
        vals = np.abs(ex.T @ ey) ** p
        w = disk_weights(fx, fy, df, R)
        w[fx > 0] *= 2.0
        total += float(np.sum(w * vals))
    return (total * df * df) ** (1.0 / p)


@functools.lru_cache(maxsize=32)
def cell_self_energy(u: float) -> float:
    """c(u): integral over [0,1]^2 x [0,1]^2 of |x - y|^-u."""
    u = _check_u(u)

    def inner(theta: float) -> float:
        c, s = math.cos(theta), math.sin(theta)
        L = 1.0 / c
        return L ** (2 - u) / (2 - u) - (c + s) * L ** (3 - u) / (3 - u) + c * s * L ** (4 - u) / (4 - u)

    val, _ = integrate.quad(inner, 0.0, math.pi / 4.0, epsabs=1e-13, epsrel=1e-12)
    return 8.0 * val


def spatial_energy_grid(f: GridField, u: float, use_fft: bool = False, chunk: int = 1024) -> float:
    """Double Riemann sum of f(x) f(y) |x - y|^-u with the exact same-cell term."""
    u = _check_u(u)
    h = f.h
    cells = f.values * h * h
    self_term = float(np.sum(cells**2)) * cell_self_energy(u) * h ** (-u)
    nx, ny = f.shape
    if use_fft:
        ix = np.arange(-(nx - 1), nx) * h
        iy = np.arange(-(ny - 1), ny) * h
        d = np.sqrt(ix[:, None] ** 2 + iy[None, :] ** 2)
        with np.errstate(divide="ignore"):
            ker = np.where(d > 0, d ** (-u), 0.0)
        conv = signal.fftconvolve(cells, ker, mode="full")
        conv = conv[nx - 1: 2 * nx - 1, ny - 1: 2 * ny - 1]
        return float(np.sum(cells * conv)) + self_term
    if nx * ny > DIRECT_ENERGY_LIMIT:
        raise ValueError("grid too large for the direct route; pass use_fft=True")
    xs, ys = f.axes()
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    keep = cells > 0
    pts = np.column_stack([xx[keep], yy[keep]])
    w = cells[keep]
    total = 0.0
    for start in range(0, len(w), chunk):
        blk = pts[start:start + chunk]
        d = np.sqrt(((blk[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        with np.errstate(divide="ignore"):
            k = np.where(d > 0, d ** (-u), 0.0)
        total += float(w[start:start + chunk] @ (k @ w))
    return total + self_term


def _radial_nodes(u: float, extent: float, max_dist: float, head: float = 1.0):
    """Quadrature for integral_0^extent rho^(u-1) g(rho) d rho, absorbing the singular power."""
    head = min(head, extent)
    x, w = np.polynomial.legendre.leggauss(64)
    # rho = t^(1/u) on [0, head]: rho^(u-1) d rho = dt / u
    t = 0.5 * head**u * (x + 1.0)
    nodes = [t ** (1.0 / u)]
    weights = [0.5 * head**u * w / u]
    if extent > head:
        width = 1.0 / (8.0 * max(max_dist, 1e-12))
        panels = int(math.ceil((extent - head) / min(width, extent - head)))
        tail_n, tail_w = np.polynomial.legendre.leggauss(8)
        edges = np.linspace(head, extent, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        rr = (mid[:, None] + half[:, None] * tail_n[None, :]).reshape(-1)
        ww = (half[:, None] * tail_w[None, :]).reshape(-1)
        nodes.append(rr)
        weights.append(ww * rr ** (u - 1.0))
    return np.concatenate(nodes), np.concatenate(weights)


def _pair_distances(m: AtomicMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Distinct pair distances with the summed products of masses (ordered pairs)."""
    pts, w = m.points, m.masses
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)).reshape(-1)
    ww = np.outer(w, w).reshape(-1)
    key = np.round(d, 12)
    uniq, inv = np.unique(key, return_inverse=True)
    return uniq, np.bincount(inv.reshape(-1), weights=ww)


def riesz_energy_fourier(m: AtomicMeasure, u: float, delta: float | None, method: str = "radial",
                         freq_extent: float | None = None, freq_spacing: float | None = None,
                         psi: MollifierSpec | None = None, power: int = 1) -> FourierEnergy:
    """Integral of |m-hat|^(2 power) |psi_delta-hat|^2 |xi|^(u-2), reported without c_{2,u}.

    ``power`` = k gives the energy of the k-fold convolution power of m (grid method only).

    ``radial`` integrates the angle exactly: the integrand reduces to a sum over
    pair distances d of 2 pi rho^(u-1) |psi-hat(delta rho)|^2 J0(2 pi rho d).
    ``grid`` sums exact exponential sums on a square frequency grid.
    The frequency integral is truncated at ``freq_extent`` (default 16 / delta);
    ``diverging`` is set when the outer shell [extent/2, extent] carries more than
    10% of the total.
    """
    u = _check_u(u)
    psi = psi or default_mollifier()
    if delta is None or delta == 0:
        if freq_extent is None:
            raise ValueError("an unmollified energy needs an explicit freq_extent")
        extent = float(freq_extent)
    else:
        extent = 16.0 / delta if freq_extent is None else float(freq_extent)

    def damp(rho: np.ndarray) -> np.ndarray:
        if delta is None or delta == 0:
            return np.ones_like(rho)
        return psi.fourier(delta * rho) ** 2

    power = int(power)
    if power < 1:
        raise ValueError(f"power must be >= 1, got {power}")
    if method == "radial" and power != 1:
        raise ValueError("the radial method supports power=1 only; use method='grid'")
    if method == "radial":
        dists, ww = _pair_distances(m)
        nodes, weights = _radial_nodes(u, extent, float(dists.max()) if len(dists) else 0.0)
        g = damp(nodes) * weights
        kern = np.zeros_like(nodes)
        step = max(1, 4_000_000 // max(len(dists), 1))
        for i in range(0, len(nodes), step):
            kern[i:i + step] = special.j0(2.0 * np.pi * np.outer(nodes[i:i + step], dists)) @ ww
        contrib = 2.0 * np.pi * g * kern
        total = float(contrib.sum())
        outer = float(contrib[nodes >= extent / 2.0].sum())
    elif method == "grid":
        # psi-hat is radial and smooth: tabulate it once instead of at every grid node
        table_r = np.linspace(0.0, extent * math.sqrt(2.0) + 1.0, 40001)
        table_v = damp(table_r)
        df = _default_spacing(m, extent) if freq_spacing is None else float(freq_spacing)
        k = int(math.ceil(extent / df))
        fx_all = np.arange(0, k + 1) * df
        fy = np.arange(-k, k + 1) * df
        ey = _exp_matrix(m.points[:, 1], fy)
        total = outer = 0.0
        for start in range(0, len(fx_all), 256):
            fx = fx_all[start:start + 256]
            ex = _exp_matrix(m.points[:, 0], fx) * m.masses[:, None]
            vals = np.abs(ex.T @ ey) ** (2 * power)
            rr = np.sqrt(fx[:, None] ** 2 + fy[None, :] ** 2)
            w = disk_weights(fx, fy, df, extent)
            w[fx > 0] *= 2.0
            with np.errstate(divide="ignore"):
                radial = np.where(rr > 0, rr ** (u - 2.0), 0.0)
            dens = vals * np.interp(rr, table_r, table_v) * radial * w * df * df
            at_zero = rr == 0
            if np.any(at_zero):
                dens[at_zero] = vals[at_zero] * df**u * _origin_cell(u)
            total += float(dens.sum())
            outer += float(dens[rr >= extent / 2.0].sum())
    else:
        raise ValueError(f"unknown method {method!r}")
    share = abs(outer) / abs(total) if total != 0 else 1.0
    return FourierEnergy(total, share, share > 0.10, extent)


@functools.lru_cache(maxsize=32)
def _origin_cell(u: float) -> float:
    """Integral of |xi|^(u-2) over the centred unit square."""
    def inner(theta: float) -> float:
        return (0.5 / math.cos(theta)) ** u / u
    val, _ = integrate.quad(inner, 0.0, math.pi / 4.0, epsabs=1e-13)
    return 8.0 * val


def convolution_power_atoms(m: AtomicMeasure, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct integer lattice points of m^n with their masses (requires a lattice)."""
    idx = m.lattice_indices()
    w = m.masses
    cur_idx, cur_w = idx, w
    for _ in range(int(n) - 1):
        sums = (cur_idx[:, None, :] + idx[None, :, :]).reshape(-1, 2)
        ws = (cur_w[:, None] * w[None, :]).reshape(-1)
        cur_idx, inv = np.unique(sums, axis=0, return_inverse=True)
        cur_w = np.bincount(inv.reshape(-1), weights=ws)
    return cur_idx, cur_w


def _columns(idx: np.ndarray, w: np.ndarray) -> dict[int, tuple[int, np.ndarray]]:
    """Group lattice points by first index into dense columns (start row, weights)."""
    order = np.lexsort((idx[:, 1], idx[:, 0]))
    idx, w = idx[order], w[order]
    cols: dict[int, tuple[int, np.ndarray]] = {}
    bounds = np.flatnonzero(np.diff(idx[:, 0])) + 1
    for seg in np.split(np.arange(len(w)), bounds):
        if not len(seg):
            continue
        i = int(idx[seg[0], 0])
        j = idx[seg, 1]
        j0 = int(j.min())
        dense = np.zeros(int(j.max()) - j0 + 1)
        np.add.at(dense, j - j0, w[seg])
        cols[i] = (j0, dense)
    return cols


def _power_columns(m: AtomicMeasure, n: int) -> dict[int, tuple[int, np.ndarray]]:
    """Columns of m^n built by shifting and adding columns of m^(n-1)."""
    base = _columns(m.lattice_indices(), m.masses)
    cur = base
    for _ in range(int(n) - 1):
        nxt: dict[int, list] = {}
        for i1, (j1, c1) in base.items():
            for i2, (j2, c2) in cur.items():
                nxt.setdefault(i1 + i2, []).append((j1, c1, j2, c2))
        merged: dict[int, tuple[int, np.ndarray]] = {}
        for i, parts in nxt.items():
            lo = min(j1 + j2 for j1, _, j2, _ in parts)
            hi = max(j1 + len(c1) - 1 + j2 + len(c2) - 1 for j1, c1, j2, c2 in parts)
            acc = np.zeros(hi - lo + 1)
            for j1, c1, j2, c2 in parts:
                conv = np.convolve(c1, c2) if min(len(c1), len(c2)) < 64 else signal.fftconvolve(c1, c2)
                start = j1 + j2 - lo
                acc[start:start + len(conv)] += conv
            nz = np.flatnonzero(acc > 1e-300)
            if len(nz):
                merged[i] = (lo + int(nz[0]), acc[nz[0]:nz[-1] + 1])
        cur = merged
    return cur


def mollified_power_l2(m: AtomicMeasure, n: int, delta: float, psi: MollifierSpec | None = None) -> float:
    """Exact ||m^n * psi_delta||_2^2 = sum over atom pairs a, b of w_a w_b Phi_delta(a - b).

    Phi_delta is the autocorrelation of psi_delta. For lattice measures the pair sum
    runs column by column over the lattice; otherwise a k-d tree finds close pairs.
    """
    psi = psi or default_mollifier()
    reach = 2.0 * psi.outer * delta
    if m.lattice is not None:
        hx, hy = m.lattice
        wi = int(math.floor(reach / hx))
        wj = int(math.floor(reach / hy))
        if wj <= 256:
            cols = _power_columns(m, n)
            dj = np.arange(-wj, wj + 1)
            kernels = {}
            for di in range(-wi, wi + 1):
                dist = np.sqrt((di * hx) ** 2 + (dj * hy) ** 2)
                kernels[di] = psi.scaled_autocorrelation(dist, delta)
            total = 0.0
            for i, (ja, ca) in cols.items():
                for di in range(-wi, wi + 1):
                    other = cols.get(i + di)
                    if other is None:
                        continue
                    jb, cb = other
                    ker = kernels[di]
                    # sum_j ca[j] * sum_k cb[k] ker[(jb + k) - (ja + j) + wj]
                    smooth = signal.fftconvolve(cb, ker) if len(cb) * len(ker) > 1 << 16 else np.convolve(cb, ker)
                    # smooth[t] corresponds to row offset jb + t - wj
                    start = ja - (jb - wj)
                    lo = max(start, 0)
                    hi = min(start + len(ca), len(smooth))
                    if hi > lo:
                        total += float(ca[lo - start:hi - start] @ smooth[lo:hi])
            return total
    pts, w = _power_points(m, n)
    tree = cKDTree(pts)
    total = float(np.sum(w * w)) * float(psi.scaled_autocorrelation(0.0, delta))
    chunk = 20000
    for start in range(0, len(w), chunk):
        sub = cKDTree(pts[start:start + chunk])
        pairs = sub.sparse_distance_matrix(tree, reach, output_type="coo_matrix")
        rows = pairs.row + start
        # the coo output keeps zero-distance entries; the self pairs are already counted
        off = rows != pairs.col
        total += float(np.sum(w[rows[off]] * w[pairs.col[off]]
                              * psi.scaled_autocorrelation(pairs.data[off], delta)))
    return total


def _power_points(m: AtomicMeasure, n: int) -> tuple[np.ndarray, np.ndarray]:
    if m.lattice is not None:
        idx, w = convolution_power_atoms(m, n)
        return idx * np.asarray(m.lattice), w
    pts, w = m.points, m.masses
    cur_p, cur_w = pts, w
    for _ in range(int(n) - 1):
        cur_p = (cur_p[:, None, :] + pts[None, :, :]).reshape(-1, 2)
        cur_w = (cur_w[:, None] * w[None, :]).reshape(-1)
    return cur_p, cur_w


def flattening_sequence(m: AtomicMeasure, r: float, kmax: int, h: float | None = None) -> list[float]:
    """J_r(k) = ||(m^(2^k)) * psi_r||_2 for k = 0..kmax."""
    return [math.sqrt(l2_norm_sq(convolve_power(m, 2**k, r, h=h))) for k in range(kmax + 1)]


@dataclass(frozen=True)
class SandwichReport:
    """Worst-case ratios in the two-sided comparison of a field with its dyadic staircase."""

    lower_ratio: float
    upper_ratio: float
    core_ratio: float
    lower_ok: bool
    upper_ok: bool
    core_ok: bool

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok and self.core_ok


def discretization_sandwich(fine: GridField, coarse: GridField, r: float, constant: float = 64.0,
                            tol: float = 1e-9, noise_floor: float = 1e-12) -> SandwichReport:
    """Compare a field F_r with its dyadic staircase S and with constant * F_{8r} on one grid.

    For each dyadic r-square Q let a_Q be the maximum of F_r over the nodes in Q.
    S equals 2^j on squares with 2^(j-1) < a_Q <= 2^j (j >= 1) and 1 on squares with
    a_Q <= 1. Three checks are made:

    * lower: F_r <= S at every node;
    * upper: S <= constant * F_{8r} on squares with a_Q > 1;
    * core: a_Q <= constant * F_{8r} on every occupied square, i.e. with a_Q above
      ``noise_floor`` times the largest a_Q (FFT round-off leaves tiny positive values
      where the exact field vanishes).

    One grid cell of slack is granted by replacing F_{8r} at each node with its
    maximum over the 3 x 3 node neighbourhood.
    """
    if fine.shape != coarse.shape or fine.origin != coarse.origin or fine.h != coarse.h:
        raise ValueError("fields must share one grid")
    xs, ys = fine.axes()
    qx = np.floor(xs / r + 1e-9).astype(np.int64)
    qy = np.floor(ys / r + 1e-9).astype(np.int64)
    _, ix = np.unique(qx, return_inverse=True)
    _, iy = np.unique(qy, return_inverse=True)
    shape = (int(ix.max()) + 1, int(iy.max()) + 1)
    cell = (ix[:, None], iy[None, :])
    a_q = np.zeros(shape)
    np.maximum.at(a_q, cell, fine.values)
    with np.errstate(divide="ignore"):
        expo = np.ceil(np.log2(np.where(a_q > 0, a_q, 1.0)))
    stair = 2.0 ** np.maximum(expo, 0.0)
    lower = fine.values / stair[cell]
    lower_ratio = float(lower.max())
    slack = ndimage.maximum_filter(coarse.values, size=3, mode="nearest")
    c_min = np.full(shape, np.inf)
    np.minimum.at(c_min, cell, slack)
    c_min = np.maximum(c_min, 1e-300)
    rich = a_q > 1.0
    upper_ratio = float((stair[rich] / (constant * c_min[rich])).max()) if np.any(rich) else 0.0
    occ = a_q > noise_floor * float(a_q.max())
    core_ratio = float((a_q[occ] / (constant * c_min[occ])).max()) if np.any(occ) else 0.0
    return SandwichReport(lower_ratio, upper_ratio, core_ratio, lower_ratio <= 1.0 + tol,
                          upper_ratio <= 1.0 + tol, core_ratio <= 1.0 + tol)
