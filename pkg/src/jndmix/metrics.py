"""SRCC and PLCC between predicted and subjective quality scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricReport:
    srcc: float
    plcc: float
    n: int
    split_seed: int = 0
    train_fraction: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"a metric report needs n >= 2, got {self.n}")
        for name in ("srcc", "plcc"):
            value = getattr(self, name)
            if not -1.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [-1, 1], got {value}")


def _as_series(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size < 2:
        raise ValueError(f"{name} needs at least 2 scores, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite scores")
    return arr


def _paired(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    p = _as_series(pred, "pred")
    g = _as_series(gt, "gt")
    if p.size != g.size:
        raise ValueError(f"length mismatch: pred has {p.size} scores, gt has {g.size}")
    return p, g


def rank_with_ties(series) -> np.ndarray:
    """Ranks 1..n, tied values sharing the mean of the positions they span."""
    values = np.asarray(series, dtype=np.float64)
    n = values.size
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(n, dtype=np.float64)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and sorted_vals[stop] == sorted_vals[start]:
            stop += 1
        # positions start+1 .. stop, averaged
        ranks[order[start:stop]] = (start + 1 + stop) / 2.0
        start = stop
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    # test constancy directly: x - x.mean() can be nonzero rounding noise
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise ValueError("zero variance: correlation is undefined for a constant series")
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.dot(dx, dy)) / np.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    return min(1.0, max(-1.0, r))


def plcc(pred, gt) -> float:
    """Pearson linear correlation coefficient."""
    p, g = _paired(pred, gt)
    return _pearson(p, g)


def srcc(pred, gt) -> float:
    """Spearman rank-order correlation (Pearson on average ranks)."""
    p, g = _paired(pred, gt)
    return _pearson(rank_with_ties(p), rank_with_ties(g))


def evaluate(pred, gt, split_seed: int = 0, train_fraction: float = 1.0) -> MetricReport:
    p, g = _paired(pred, gt)
    return MetricReport(srcc(p, g), plcc(p, g), p.size, split_seed, train_fraction)
