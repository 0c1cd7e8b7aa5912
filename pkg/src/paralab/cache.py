"""On-disk cache of convolution-power grids keyed by a content hash."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path

from .fourier import GridField, convolve_power
from .measures import AtomicMeasure

__all__ = ["cache_dir", "cache_key", "cached_convolve_power"]

logger = logging.getLogger(__name__)

ENV_VAR = "PARALAB_CACHE"


def cache_dir() -> Path | None:
    """Directory named by PARALAB_CACHE, or None when caching is off."""
    value = os.environ.get(ENV_VAR)
    if not value:
        return None
    path = Path(value).expanduser()
    path.mkdir(parents=True, exist_ok=True)
    return path


def cache_key(m: AtomicMeasure, n: int, delta: float, h: float | None, margin: float | None) -> str:
    payload = json.dumps({"measure": json.loads(m.to_json()), "n": int(n), "delta": float(delta),
                          "h": None if h is None else float(h),
                          "margin": None if margin is None else float(margin), "format": 1},
                         sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def cached_convolve_power(m: AtomicMeasure, n: int, delta: float, h: float | None = None,
                          margin: float | None = None) -> GridField:
    """convolve_power with a read-through cache under PARALAB_CACHE."""
    root = cache_dir()
    if root is None:
        return convolve_power(m, n, delta, h=h, margin=margin)
    path = root / f"{cache_key(m, n, delta, h, margin)}.grid"
    if path.exists():
        try:
            return GridField.load(path)
        except ValueError:
            logger.warning("discarding unreadable cache entry %s", path)
    field_ = convolve_power(m, n, delta, h=h, margin=margin)
    tmp = path.with_suffix(".tmp")
    field_.save(tmp)
    tmp.replace(path)
    return field_
