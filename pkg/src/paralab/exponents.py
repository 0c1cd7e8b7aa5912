"""Closed-form exponent formulas for parabola convolution and Furstenberg bounds."""

from __future__ import annotations

import math

__all__ = [
    "gamma_exponent",
    "zeta_exponent",
    "sumset_exponent",
    "iterate_gamma",
    "sharp_exponent",
]


def _check_real(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"{name} must be a finite real, got {value!r}")
    return value


def _check_range(name: str, value: float, lo: float, hi: float, *, lo_open: bool = False,
                 hi_open: bool = False) -> float:
    value = _check_real(name, value)
    below = value <= lo if lo_open else value < lo
    above = value >= hi if hi_open else value > hi
    if below or above:
        left = "(" if lo_open else "["
        right = ")" if hi_open else "]"
        raise ValueError(f"{name}={value} outside {left}{lo}, {hi}{right}")
    return value


def gamma_exponent(s: float, t: float) -> float:
    """Furstenberg lower bound min{s + t, (3s + t)/2, s + 1}."""
    s = _check_range("s", s, 0.0, 1.0, lo_open=True)
    t = _check_range("t", t, 0.0, 2.0)
    return min(s + t, (3.0 * s + t) / 2.0, s + 1.0)


def zeta_exponent(s: float, t: float) -> float:
    """Smoothing exponent min{t + 2s - 1, s + 1} for s in (1/2, 1], t in (0, 2)."""
    s = _check_range("s", s, 0.5, 1.0, lo_open=True)
    t = _check_range("t", t, 0.0, 2.0, lo_open=True, hi_open=True)
    return min(t + 2.0 * s - 1.0, s + 1.0)


def sumset_exponent(s: float, n: int) -> float:
    """Box dimension lower bound min{3s - s 2^{-(n-2)}, s + 1} for the n-fold sumset."""
    s = _check_range("s", s, 0.0, 1.0)
    if isinstance(n, bool) or int(n) != n:
        raise ValueError(f"n must be an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return min(3.0 * s - s * 2.0 ** (-(n - 2)), s + 1.0)


def iterate_gamma(s: float, n: int) -> float:
    """Run t_1 = s, t_{j+1} = min{(3s + t_j)/2, s + 1} for n - 1 steps."""
    s = _check_range("s", s, 0.0, 1.0, lo_open=True)
    if isinstance(n, bool) or int(n) != n or int(n) < 1:
        raise ValueError(f"n must be an integer >= 1, got {n!r}")
    t = s
    for _ in range(int(n) - 1):
        t = min((3.0 * s + t) / 2.0, s + 1.0)
    return t


def sharp_exponent(s: float) -> float:
    """Optimal decay threshold min{3s, s + 1}: the largest t with gamma(s, t) >= t."""
    s = _check_range("s", s, 0.0, 1.0, lo_open=True)
    return min(3.0 * s, s + 1.0)
