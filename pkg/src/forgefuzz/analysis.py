"""Rank correlations between user features and load, and dataset comparison tables."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dataset import EdgeList, summarize
from .discrepancy import DiscrepancyConfig, star_discrepancy_approx
from .features import FeaturePoints, feature_points
from .followgraph import build_count_matrix, derive_follows, graph_from_parts


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    p_value: float
    n: int
    method: str = "t"

    @property
    def defined(self) -> bool:
        return not math.isnan(self.rho)


def spearman(x, y, method: str = "t", permutations: int = 10_000, seed: int = 0) -> SpearmanResult:
    """Spearman's rho with average ranks for ties.

    ``method="t"`` gives the two-sided p-value from Student's t with
    ``n - 2`` degrees of freedom; ``method="permutation"`` estimates it by
    shuffling ``y``. A constant input yields ``rho = p = nan``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d and of equal length")
    n = len(x)
    if n < 3:
        raise ValueError("spearman needs at least 3 observations")
    rx, ry = stats.rankdata(x), stats.rankdata(y)
    rho = _pearson(rx, ry)
    if math.isnan(rho):
        return SpearmanResult(math.nan, math.nan, n, method)
    if method == "t":
        if abs(rho) >= 1.0:
            p = 0.0
        else:
            t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
            p = float(2.0 * stats.t.sf(abs(t), n - 2))
    elif method == "permutation":
        rng = np.random.default_rng(seed)
        hits = sum(abs(_pearson(rx, rng.permutation(ry))) >= abs(rho) - 1e-12 for _ in range(permutations))
        p = (hits + 1) / (permutations + 1)
    else:
        raise ValueError(f"unknown p-value method {method!r}")
    return SpearmanResult(float(rho), min(max(p, 0.0), 1.0), n, method)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da, db = a - a.mean(), b - b.mean()
    den = math.sqrt(float(da @ da) * float(db @ db))
    if den == 0.0:
        return math.nan
    return max(-1.0, min(1.0, float(da @ db) / den))


FEATURES = ("centrality", "pagerank", "event_code")
LOADS = ("cpu", "memory", "latency")


@dataclass(frozen=True)
class UserLoad:
    """Per-user load figures keyed by user name."""

    cpu: dict
    memory: dict
    latency: dict

    @classmethod
    def from_request_log_csv(cls, content: str, aggregate: str = "mean") -> "UserLoad":
        """Aggregate a ``seq,user,op,cpu,mem,latency,outcome`` log per user.

        ``aggregate`` is ``"mean"`` (per-request average) or ``"total"``.
        """
        sums: dict[str, list[float]] = {}
        for row in csv.DictReader(io.StringIO(content)):
            s = sums.setdefault(row["user"], [0, 0.0, 0.0, 0.0])
            s[0] += 1
            s[1] += float(row["cpu"])
            s[2] += float(row["mem"])
            s[3] += float(row["latency"])
        return cls._from_sums(sums, aggregate)

    @classmethod
    def from_metrics(cls, per_user: dict, aggregate: str = "mean") -> "UserLoad":
        sums = {u: [m.requests, m.cpu, m.mem, m.latency] for u, m in per_user.items()}
        return cls._from_sums(sums, aggregate)

    @classmethod
    def _from_sums(cls, sums, aggregate):
        if aggregate not in ("mean", "total"):
            raise ValueError(f"unknown aggregate {aggregate!r}")
        div = (lambda s: s[0] or 1) if aggregate == "mean" else (lambda s: 1)
        return cls(
            {u: s[1] / div(s) for u, s in sums.items()},
            {u: s[2] / div(s) for u, s in sums.items()},
            {u: s[3] / div(s) for u, s in sums.items()},
        )

    def users(self) -> set:
        return set(self.cpu)


@dataclass(frozen=True)
class CorrelationCell:
    feature: str
    load: str
    result: SpearmanResult


def correlation_report(points: FeaturePoints, load: UserLoad, method: str = "t") -> list[CorrelationCell]:
    """Spearman rho and p for every (feature, load) pair over the common user set.

    Raises ``ValueError`` when the two user sets differ.
    """
    users = list(points.users)
    if set(users) != load.users():
        missing = sorted(set(users) ^ load.users())[:5]
        raise ValueError(f"feature and load user sets differ, e.g. {missing}")
    feats = {"centrality": points.centrality, "pagerank": points.pagerank, "event_code": points.event_code}
    cells = []
    for f in FEATURES:
        for name in LOADS:
            series = getattr(load, name)
            y = np.array([series[u] for u in users])
            cells.append(CorrelationCell(f, name, spearman(feats[f], y, method)))
    return cells


def correlation_csv(cells: list[CorrelationCell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "load", "rho", "p_value", "n", "p_method"])
    for c in cells:
        w.writerow([c.feature, c.load, repr(c.result.rho), repr(c.result.p_value), c.result.n, c.result.method])
    return buf.getvalue()


def scatter_csv(points: FeaturePoints, load: UserLoad) -> str:
    """Per-user feature and load columns: the data behind feature/load scatter panels."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["user", *FEATURES, *LOADS])
    for i, u in enumerate(points.users):
        w.writerow([u, repr(float(points.centrality[i])), repr(float(points.pagerank[i])),
                    int(points.event_code[i]), repr(load.cpu[u]), repr(load.memory[u]), repr(load.latency[u])])
    return buf.getvalue()


PROJECTIONS = {"cp": (0, 1), "ct": (0, 2), "pt": (1, 2)}


def projection_csvs(points: FeaturePoints) -> dict[str, str]:
    """The full feature cube plus its three 2-d projections as CSV texts."""
    out = {}
    names = ("c_scaled", "p_scaled", "t_scaled")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["user", "x", "y", "z"])
    for u, p in zip(points.users, points.points):
        w.writerow([u, *(repr(float(v)) for v in p)])
    out["cube"] = buf.getvalue()
    for key, (a, b) in PROJECTIONS.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["user", f"x:{names[a]}", f"y:{names[b]}"])
        for u, p in zip(points.users, points.points):
            w.writerow([u, repr(float(p[a])), repr(float(p[b]))])
        out[key] = buf.getvalue()
    return out


@dataclass(frozen=True)
class DatasetRow:
    name: str
    counts: object
    discrepancy: float | None


def dataset_summary(
    sets: dict[str, EdgeList], cfg: DiscrepancyConfig = DiscrepancyConfig()
) -> list[DatasetRow]:
    """Per-type counts and feature-space discrepancy for each named dataset.

    Datasets without a stored follow set get derived follows. Empty
    datasets yield a zero row with no discrepancy.
    """
    rows = []
    for name, e in sets.items():
        if len(e) == 0:
            rows.append(DatasetRow(name, summarize(e), None))
            continue
        fs = e.follows if e.follows is not None else derive_follows(build_count_matrix(e))
        pts = feature_points(graph_from_parts(e.without_follows(), fs))
        rows.append(DatasetRow(name, summarize(e, fs), star_discrepancy_approx(pts.points, cfg)))
    return rows


def dataset_summary_csv(rows: list[DatasetRow], cfg: DiscrepancyConfig = DiscrepancyConfig()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "FollowEvent", "PushEvent", "WatchEvent", "PullRequestEvent", "ForkEvent",
                "total", "users", "repos", f"discrepancy_G{cfg.grid_divisions}"])
    for r in rows:
        c = r.counts
        w.writerow([r.name, c.follow, c.push, c.watch, c.pull_request, c.fork, c.total, c.users, c.repos,
                    "" if r.discrepancy is None else repr(r.discrepancy)])
    return buf.getvalue()
