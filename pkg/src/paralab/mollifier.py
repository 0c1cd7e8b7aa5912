"""Radial trapezoid bump psi with unit integral, its Fourier transform and autocorrelation."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

__all__ = ["MollifierSpec", "default_mollifier"]

INNER = 0.5


def _trapezoid_integral(rho: float, a: float = INNER) -> float:
    """Integral over the plane of the profile equal to 1 on B(a), linear down to 0 at radius rho."""
    ramp = (rho * (rho**2 - a**2) / 2.0 - (rho**3 - a**3) / 3.0) / (rho - a)
    return math.pi * a * a + 2.0 * math.pi * ramp


def _gauss_panels(a: float, b: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    return nodes, weights


@dataclass(frozen=True)
class MollifierSpec:
    """psi(x) = 1 for |x| <= 1/2, (rho - |x|)/(rho - 1/2) up to rho, and 0 beyond."""

    inner: float
    outer: float
    height: float = 1.0

    @property
    def normalization(self) -> float:
        return _trapezoid_integral(self.outer, self.inner) * self.height

    def profile(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        ramp = (self.outer - r) / (self.outer - self.inner)
        return self.height * np.clip(np.where(r <= self.inner, 1.0, ramp), 0.0, 1.0)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self.profile(np.sqrt((pts**2).sum(axis=-1)))

    def scaled(self, points, delta: float) -> np.ndarray:
        """psi_delta(x) = delta^-2 psi(x / delta)."""
        return self(np.asarray(points, dtype=float) / delta) / (delta * delta)

    def l2_norm_sq(self) -> float:
        """Integral of psi^2 in closed form."""
        a, rho = self.inner, self.outer
        c = 1.0 / (rho - a) ** 2
        # integral over [a, rho] of (rho - r)^2 r dr
        ramp = (rho**4 / 12.0) - (rho**2 * a**2 / 2.0) + (2.0 * rho * a**3 / 3.0) - (a**4 / 4.0)
        return self.height**2 * (math.pi * a * a + 2.0 * math.pi * c * ramp)

    def fourier(self, freq) -> np.ndarray:
        """psi-hat at radial frequency |xi|, convention exp(-2 pi i x . xi)."""
        k = np.abs(np.asarray(freq, dtype=float))
        shape = k.shape
        k = k.reshape(-1)
        out = np.empty_like(k)
        a, rho = self.inner, self.outer
        small = k < 1e-12
        out[small] = self.normalization
        kk = k[~small]
        if kk.size:
            plateau = a * special.j1(2.0 * math.pi * kk * a) / kk
            panels = max(8, int(math.ceil(float(kk.max()) * (rho - a) * 2.0)))
            nodes, weights = _gauss_panels(a, rho, panels, 8)
            ramp_vals = self.profile(nodes) * nodes * weights
            ramp = np.empty_like(kk)
            step = max(1, 2_000_000 // len(nodes))
            for i in range(0, len(kk), step):
                arg = 2.0 * math.pi * np.outer(kk[i:i + step], nodes)
                ramp[i:i + step] = special.j0(arg) @ ramp_vals
            out[~small] = self.height * plateau + 2.0 * math.pi * ramp
        return out.reshape(shape)

    def autocorrelation(self, dist) -> np.ndarray:
        """Phi(d) = integral of psi(x) psi(x - z) dx for |z| = d (zero for d >= 2 rho)."""
        table = _autocorrelation_table(self.inner, self.outer, self.height)
        d = np.abs(np.asarray(dist, dtype=float))
        out = table(np.minimum(d, 2.0 * self.outer))
        return np.where(d >= 2.0 * self.outer, 0.0, np.maximum(out, 0.0))

    def scaled_autocorrelation(self, dist, delta: float) -> np.ndarray:
        """Autocorrelation of psi_delta, equal to delta^-2 Phi(d / delta)."""
        return self.autocorrelation(np.asarray(dist, dtype=float) / delta) / (delta * delta)


@functools.lru_cache(maxsize=8)
def _autocorrelation_table(inner: float, outer: float, height: float) -> CubicSpline:
    """Tabulate Phi on [0, 2 rho] by direct polar quadrature of psi(x) psi(x - d e1)."""
    spec = MollifierSpec(inner, outer, height)
    d_grid = np.linspace(0.0, 2.0 * outer, 401)
    r_nodes, r_w = _gauss_panels(0.0, outer, 60, 8)
    t_nodes, t_w = _gauss_panels(0.0, math.pi, 120, 8)
    psi_r = spec.profile(r_nodes)
    cos_t = np.cos(t_nodes)
    vals = np.empty_like(d_grid)
    for i, d in enumerate(d_grid):
        dist = np.sqrt(r_nodes[:, None] ** 2 + d * d - 2.0 * d * r_nodes[:, None] * cos_t[None, :])
        inner_int = spec.profile(dist) @ t_w
        vals[i] = 2.0 * float(np.sum(psi_r * r_nodes * r_w * inner_int))
    vals[-1] = 0.0
    return CubicSpline(d_grid, vals, bc_type=("clamped", "not-a-knot"))


@functools.lru_cache(maxsize=1)
def default_mollifier() -> MollifierSpec:
    """The trapezoid with inner radius 1/2 whose outer radius makes the integral one."""
    rho = brentq(lambda r: _trapezoid_integral(r) - 1.0, INNER + 1e-12, 1.0, xtol=1e-15, rtol=1e-15)
    return MollifierSpec(INNER, float(rho))
