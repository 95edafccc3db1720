"""Distances and summary statistics for output distributions."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .simulator import Distribution


def _as_probs(p) -> np.ndarray:
    return p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=float)


def tvd(p, q) -> float:
    """Total variation distance, half the L1 distance between distributions."""
    if isinstance(p, Distribution) and isinstance(q, Distribution) and p.qubits != q.qubits:
        raise ValueError("mismatched outcome spaces")
    a, b = _as_probs(p), _as_probs(q)
    if a.shape != b.shape:
        raise ValueError("mismatched outcome spaces")
    return float(0.5 * np.abs(a - b).sum())


def tvd_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise TVD of two (K, d) arrays."""
    if p.shape != q.shape:
        raise ValueError("mismatched outcome spaces")
    return 0.5 * np.abs(p - q).sum(axis=1)


def improvement_factor(tvd_none: float, tvd_mode: float) -> float:
    """``tvd_none / tvd_mode``; ``inf`` when the suppressed TVD is zero."""
    if tvd_mode < 0 or tvd_none < 0:
        raise ValueError("TVD values must be non-negative")
    if tvd_mode == 0:
        return math.inf
    return tvd_none / tvd_mode


def normal_fit(samples: Sequence[float]) -> tuple[float, float]:
    """Maximum-likelihood normal parameters (population standard deviation)."""
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if x.size < 2:
        raise ValueError("normal_fit needs at least 2 finite samples")
    return float(x.mean()), float(x.std())


def correlation(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.std() == 0 or y.std() == 0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])
