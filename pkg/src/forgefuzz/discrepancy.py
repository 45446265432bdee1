"""Star discrepancy of point sets in the unit cube.

:func:`star_discrepancy_approx` evaluates origin-anchored boxes only at a
finite set of corners (a regular grid, optionally joined with the point
coordinates) and is what the evolutionary loop uses. Since every box it
tests is a legitimate box, it can only under-estimate D*.
:func:`star_discrepancy_exact` is a brute-force reference for small ``n``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

EXACT_MAX_POINTS = 64


@dataclass(frozen=True)
class DiscrepancyConfig:
    grid_divisions: int = 16
    include_point_coordinates: bool = False

    def __post_init__(self):
        if self.grid_divisions < 1:
            raise ValueError("grid_divisions must be >= 1")


def _as_points(points) -> np.ndarray:
    pts = getattr(points, "points", points)
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise ValueError("star discrepancy of an empty point set")
    if np.any(pts < 0) or np.any(pts > 1):
        raise ValueError("points must lie in [0, 1]^d")
    return pts


def _corner_axes(pts: np.ndarray, cfg: DiscrepancyConfig) -> list[np.ndarray]:
    grid = np.arange(1, cfg.grid_divisions + 1) / cfg.grid_divisions
    if not cfg.include_point_coordinates:
        return [grid] * pts.shape[1]
    return [np.unique(np.concatenate([grid, pts[:, j]])) for j in range(pts.shape[1])]


def _cumulative_counts(pts: np.ndarray, axes: list[np.ndarray], side: str) -> np.ndarray:
    # Bin each point at the first corner index whose box contains it, then
    # an inclusive prefix sum along every axis gives the box counts.
    # side="left": first corner >= x (closed boxes); "right": first corner > x (open).
    shape = tuple(len(a) + 1 for a in axes)
    idx = tuple(np.searchsorted(a, pts[:, j], side=side) for j, a in enumerate(axes))
    hist = np.zeros(shape, dtype=np.int64)
    np.add.at(hist, idx, 1)
    for ax in range(len(axes)):
        np.cumsum(hist, axis=ax, out=hist)
    return hist[tuple(slice(0, len(a)) for a in axes)]


def _volumes(axes: list[np.ndarray]) -> np.ndarray:
    vol = axes[0]
    for a in axes[1:]:
        vol = np.multiply.outer(vol, a)
    return vol


def star_discrepancy_approx(points, cfg: DiscrepancyConfig = DiscrepancyConfig()) -> float:
    """Largest |fraction inside - volume| over the tested corners.

    Both the closed box ``[0, b]`` and the open box ``[0, b)`` are checked
    at every corner ``b``. Accepts an ``(n, d)`` array or anything with a
    ``points`` attribute.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    axes = _corner_axes(pts, cfg)
    vol = _volumes(axes)
    closed = _cumulative_counts(pts, axes, "left") / n
    opened = _cumulative_counts(pts, axes, "right") / n
    return float(max(np.abs(closed - vol).max(), np.abs(opened - vol).max()))


def star_discrepancy_exact(points) -> float:
    """Exact D* by enumerating every critical corner; ``n <= 64`` only.

    Candidate coordinates per axis are the point coordinates plus 1. Each
    corner's open and closed counts are taken by direct comparison.
    """
    pts = _as_points(points)
    n, d = pts.shape
    if n > EXACT_MAX_POINTS:
        raise ValueError(f"exact star discrepancy is limited to {EXACT_MAX_POINTS} points, got {n}")
    cands = [sorted(set(pts[:, j].tolist()) | {1.0}) for j in range(d)]
    best = 0.0
    for corner in itertools.product(*cands):
        b = np.array(corner)
        vol = corner[0]
        for c in corner[1:]:
            vol = vol * c
        closed = np.count_nonzero(np.all(pts <= b, axis=1)) / n
        opened = np.count_nonzero(np.all(pts < b, axis=1)) / n
        best = max(best, abs(closed - vol), abs(opened - vol))
    return float(best)
