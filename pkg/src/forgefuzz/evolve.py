"""(1+lambda) EA minimizing the star discrepancy of user feature points.

The genome is the base edge list; follows are re-derived on every
evaluation. The per-edge mutation rate is adapted once per generation:
multiplied by ``rate_increase`` when the best offspring is not worse than the
parent, by ``rate_decrease`` otherwise.
"""
from __future__ import annotations

import csv
import io
import logging
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import EdgeList
from .discrepancy import DiscrepancyConfig, star_discrepancy_approx
from .features import feature_points
from .followgraph import assemble_graph, build_count_matrix, derive_follows

log = logging.getLogger(__name__)

MAX_DELETE_RESAMPLES = 100


@dataclass(frozen=True)
class EaConfig:
    """EA settings. ``None`` rates resolve against the seed's event count ``n``:
    ``initial_rate = min(1/n, rate_max)`` and ``rate_min = min(1/(10n), initial_rate)``.
    """

    generations: int = 1000
    lam: int = 20
    rate_increase: float = 2.0
    rate_decrease: float = 0.5
    initial_rate: float | None = None
    rate_min: float | None = None
    rate_max: float = 0.25
    min_mutations: int = 1
    rng_seed: int = 0
    strict_improvement: bool = False
    discrepancy: DiscrepancyConfig = field(default_factory=DiscrepancyConfig)

    def resolve(self, n: int) -> "EaConfig":
        if n < 1:
            raise ValueError("seed edge list has no events")
        init = self.initial_rate if self.initial_rate is not None else min(1.0 / n, self.rate_max)
        rmin = self.rate_min if self.rate_min is not None else min(1.0 / (10 * n), init)
        out = EaConfig(**{**asdict(self), "discrepancy": self.discrepancy, "initial_rate": init, "rate_min": rmin})
        out.check()
        return out

    def check(self) -> None:
        if self.generations < 0 or self.lam < 1 or self.min_mutations < 1:
            raise ValueError("generations >= 0, lam >= 1 and min_mutations >= 1 required")
        if not self.rate_increase > 1 or not 0 < self.rate_decrease < 1:
            raise ValueError("need rate_increase > 1 and 0 < rate_decrease < 1")
        if not (0 < self.rate_min <= self.initial_rate <= self.rate_max <= 1):
            raise ValueError("need 0 < rate_min <= initial_rate <= rate_max <= 1")


def mutate(
    parent: EdgeList, rate: float, rng: np.random.Generator, min_mutations: int = 1
) -> tuple[EdgeList, int]:
    """Apply ``max(Binomial(n, rate), min_mutations)`` add/delete mutations.

    Each mutation is an ADD or a DELETE with equal probability. ADD appends
    an event with a uniform user, repo and base type. DELETE removes a
    uniform event unless that would isolate its user or repo; such draws are
    resampled, and after 100 failed draws the mutation becomes an ADD.
    """
    n = len(parent)
    k = max(int(rng.binomial(n, rate)), min_mutations)
    src, dst, et = parent.src.tolist(), parent.dst.tolist(), parent.etype.tolist()
    ucount = np.bincount(parent.src, minlength=parent.n_users)
    rcount = np.bincount(parent.dst, minlength=parent.n_repos)
    for _ in range(k):
        add = rng.random() < 0.5
        if not add:
            for _ in range(MAX_DELETE_RESAMPLES):
                i = int(rng.integers(len(src)))
                if ucount[src[i]] > 1 and rcount[dst[i]] > 1:
                    ucount[src[i]] -= 1
                    rcount[dst[i]] -= 1
                    del src[i], dst[i], et[i]
                    break
            else:
                add = True
        if add:
            u = int(rng.integers(parent.n_users))
            r = int(rng.integers(parent.n_repos))
            src.append(u)
            dst.append(r)
            et.append(int(rng.integers(4)))
            ucount[u] += 1
            rcount[r] += 1
    return parent.replace_events(src, dst, et), k


def evaluate(e: EdgeList, cfg: DiscrepancyConfig = DiscrepancyConfig()) -> float:
    """Discrepancy of the user feature points of ``e``'s interaction graph."""
    return star_discrepancy_approx(feature_points(assemble_graph(e)).points, cfg)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    parent_score: float
    best_offspring: float
    accepted: bool
    rate_before: float
    rate_after: float
    mutations: float
    nonfollow_events: int
    follow_arcs: int


@dataclass
class EvolutionLog:
    initial_score: float
    records: list[GenerationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def parent_scores(self) -> np.ndarray:
        return np.array([r.parent_score for r in self.records])

    def to_csv(self) -> str:
        """Columns ``generation,parent_score,best_offspring,accepted,rate,mutations``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["generation", "parent_score", "best_offspring", "accepted", "rate", "mutations"])
        for r in self.records:
            w.writerow([r.generation, repr(r.parent_score), repr(r.best_offspring), int(r.accepted),
                        repr(r.rate_after), repr(r.mutations)])
        return buf.getvalue()


def offspring_rng(seed: int, generation: int, index: int) -> np.random.Generator:
    """Independent stream per (generation, offspring); order of evaluation is irrelevant."""
    return np.random.default_rng([seed, generation, index])


def _make_and_score(args):
    parent, rate, seed, gen, i, min_mut, evaluator, dcfg = args
    child, k = mutate(parent, rate, offspring_rng(seed, gen, i), min_mut)
    return child, k, evaluator(child, dcfg)


def run_ea(
    seed_list: EdgeList,
    cfg: EaConfig,
    evaluator: Callable[[EdgeList, DiscrepancyConfig], float] = evaluate,
    workers: int = 1,
    callback: Callable[[GenerationRecord], None] | None = None,
) -> tuple[EdgeList, EvolutionLog]:
    """Evolve ``seed_list`` for ``cfg.generations`` generations.

    ``workers > 1`` evaluates offspring in a process pool; results are
    identical to the serial run because every offspring owns its RNG stream.
    """
    seed_list = seed_list.without_follows()
    cfg = cfg.resolve(len(seed_list))
    parent = seed_list
    parent_score = evaluator(parent, cfg.discrepancy)
    history = EvolutionLog(parent_score)
    rate = cfg.initial_rate
    pool = ProcessPoolExecutor(workers) if workers > 1 and cfg.generations else None
    try:
        for gen in range(cfg.generations):
            jobs = [(parent, rate, cfg.rng_seed, gen, i, cfg.min_mutations, evaluator, cfg.discrepancy)
                    for i in range(cfg.lam)]
            results = list(pool.map(_make_and_score, jobs)) if pool else [_make_and_score(j) for j in jobs]
            scores = [s for _, _, s in results]
            best = int(np.argmin(scores))  # first index wins ties
            best_score = scores[best]
            ok = best_score < parent_score if cfg.strict_improvement else best_score <= parent_score
            before = rate
            if ok:
                parent, parent_score = results[best][0], best_score
                rate = min(rate * cfg.rate_increase, cfg.rate_max)
            else:
                rate = max(rate * cfg.rate_decrease, cfg.rate_min)
            rec = GenerationRecord(
                generation=gen,
                parent_score=parent_score,
                best_offspring=best_score,
                accepted=ok,
                rate_before=before,
                rate_after=rate,
                mutations=float(np.mean([k for _, k, _ in results])),
                nonfollow_events=len(parent),
                follow_arcs=len(derive_follows(build_count_matrix(parent))),
            )
            history.records.append(rec)
            if callback is not None:
                callback(rec)
            log.debug("gen %d score %.6f rate %.3g", gen, parent_score, rate)
    finally:
        if pool is not None:
            pool.shutdown()
    return parent, history
