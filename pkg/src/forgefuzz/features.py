"""Per-user features: degree centrality, PageRank and event-type code.

Features are computed on the full interaction graph (users and repos), then
only the user nodes are kept and scaled into the unit cube.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dataset import EdgeList
from .followgraph import InteractionGraph


@dataclass(frozen=True)
class PageRankConfig:
    damping: float = 0.85
    tolerance: float = 1e-10
    max_iterations: int = 200

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")
        if self.tolerance <= 0 or self.max_iterations < 1:
            raise ValueError("tolerance must be > 0 and max_iterations >= 1")


@dataclass(frozen=True)
class PageRankResult:
    scores: np.ndarray
    converged: bool
    iterations: int


def degree_raw(g: InteractionGraph) -> np.ndarray:
    """In + out degree per node, counting multiplicity and follow arcs."""
    n = g.n_nodes
    return np.bincount(g.src, weights=g.weight, minlength=n) + np.bincount(
        g.dst, weights=g.weight, minlength=n
    )


def pagerank(g: InteractionGraph, cfg: PageRankConfig = PageRankConfig()) -> PageRankResult:
    """Damped PageRank by power iteration, arc multiplicity as weight.

    Dangling nodes spread their mass uniformly over all nodes. Iteration
    stops once the L1 change drops below ``cfg.tolerance``.
    """
    n = g.n_nodes
    if n == 0:
        raise ValueError("pagerank of an empty graph")
    out_w = np.bincount(g.src, weights=g.weight, minlength=n)
    dangling = out_w == 0
    inv = np.zeros(n)
    inv[~dangling] = 1.0 / out_w[~dangling]
    # column-oriented transition: x_new = P^T x
    pt = sp.csr_matrix((g.weight * inv[g.src], (g.dst, g.src)), shape=(n, n))
    d = cfg.damping
    x = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        x_new = d * (pt @ x + x[dangling].sum() / n) + (1.0 - d) / n
        x_new /= x_new.sum()
        delta = np.abs(x_new - x).sum()
        x = x_new
        if delta < cfg.tolerance:
            converged = True
            break
    return PageRankResult(x, converged, it)


def event_type_code(e: EdgeList) -> np.ndarray:
    """Per-user OR of type bits: Push=8, Watch=4, PullRequest=2, Fork=1."""
    bits = np.left_shift(1, 3 - e.etype)
    codes = np.zeros(e.n_users, dtype=np.int64)
    np.bitwise_or.at(codes, e.src, bits)
    if np.any(codes == 0):
        bad = [e.users[i] for i in np.flatnonzero(codes == 0)[:5]]
        raise ValueError(f"users without non-Follow events: {bad}")
    return codes


def minmax(x: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant vector maps to zeros."""
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x, dtype=np.float64)
    return (x - lo) / (hi - lo)


@dataclass(frozen=True, eq=False)
class FeaturePoints:
    """One row per user. ``points`` columns: centrality, PageRank, event code."""

    users: tuple[str, ...]
    centrality: np.ndarray
    pagerank: np.ndarray
    event_code: np.ndarray
    points: np.ndarray
    pagerank_converged: bool = True

    def __len__(self) -> int:
        return len(self.users)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["user", "centrality", "pagerank", "event_code", "c_scaled", "p_scaled", "t_scaled"])
        for i, u in enumerate(self.users):
            w.writerow(
                [u, repr(float(self.centrality[i])), repr(float(self.pagerank[i])), int(self.event_code[i])]
                + [repr(float(v)) for v in self.points[i]]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, content: str) -> "FeaturePoints":
        rows = list(csv.DictReader(io.StringIO(content)))
        users = tuple(r["user"] for r in rows)
        col = lambda k, t=float: np.array([t(r[k]) for r in rows])  # noqa: E731
        pts = np.column_stack([col("c_scaled"), col("p_scaled"), col("t_scaled")]) if rows else np.zeros((0, 3))
        return cls(users, col("centrality"), col("pagerank"), col("event_code", int), pts)


def feature_points(g: InteractionGraph, cfg: PageRankConfig = PageRankConfig()) -> FeaturePoints:
    e = g.base
    R = e.n_repos
    deg = degree_raw(g)[R:]
    pr = pagerank(g, cfg)
    prv = pr.scores[R:]
    code = event_type_code(e)
    pts = np.column_stack([minmax(deg), minmax(prv), (code - 1) / 14.0])
    return FeaturePoints(e.users, deg, prv, code, pts, pr.converged)
