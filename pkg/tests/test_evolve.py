import numpy as np
import pytest

from forgefuzz.dataset import EdgeList, write_edge_list
from forgefuzz.discrepancy import DiscrepancyConfig, star_discrepancy_exact
from forgefuzz.evolve import EaConfig, evaluate, mutate, offspring_rng, run_ea
from forgefuzz.features import feature_points
from forgefuzz.followgraph import assemble_graph

from .conftest import P, W


def test_rate_near_zero_still_mutates_once(small_community):
    child, k = mutate(small_community, 1e-12, np.random.default_rng(0))
    assert k == 1
    assert abs(len(child) - len(small_community)) == 1


def test_delete_never_isolates():
    # b holds a single event; with only a and b the deletes must avoid it
    e = EdgeList.from_events([("a", "r", P)] * 5 + [("b", "r", W)])
    rng = np.random.default_rng(1)
    cur = e
    for _ in range(200):
        cur, _ = mutate(cur, 0.5, rng)
        cur.validate()
        assert cur.users == e.users and cur.repos == e.repos


def test_delete_falls_back_to_add():
    # every event is the sole event of its user, so DELETE can never succeed
    e = EdgeList.from_events([("a", "r", P), ("b", "s", W)])
    for seed in range(20):
        child, k = mutate(e, 1e-12, np.random.default_rng(seed))
        assert k == 1 and len(child) == len(e) + 1


def test_mutation_is_deterministic(small_community):
    a, ka = mutate(small_community, 0.1, offspring_rng(5, 3, 2))
    b, kb = mutate(small_community, 0.1, offspring_rng(5, 3, 2))
    assert ka == kb and write_edge_list(a) == write_edge_list(b)


def test_single_user_single_repo_score():
    e = EdgeList.from_events([("a", "r", P)])
    pts = feature_points(assemble_graph(e)).points
    assert pts.tolist() == [[0.0, 0.0, 0.5]]
    exact = star_discrepancy_exact(pts)
    assert exact == 1.0
    assert evaluate(e, DiscrepancyConfig(16, True)) == exact
    # G=16 misses the degenerate corner; the smallest tested box holding the point has volume 1/512
    assert evaluate(e, DiscrepancyConfig(16)) == 1 - 1 / 512


def test_evaluate_deterministic(small_community):
    assert evaluate(small_community) == evaluate(small_community)


def test_zero_generations_returns_seed(small_community):
    best, log = run_ea(small_community, EaConfig(generations=0))
    assert best == small_community and len(log) == 0


def test_rate_doubles_until_cap_when_everything_improves(small_community):
    calls = iter(range(10**6))

    def always_better(e, cfg):
        return 1.0 / (2 + next(calls))

    n = len(small_community)
    _, log = run_ea(small_community, EaConfig(generations=12, lam=3), evaluator=always_better)
    rates = [r.rate_after for r in log.records]
    expected = [min((1 / n) * 2 ** (g + 1), 0.25) for g in range(12)]
    assert rates == pytest.approx(expected, rel=1e-12)
    assert all(r.accepted for r in log.records)


def test_rate_halves_to_floor_when_nothing_improves(small_community):
    _, log = run_ea(small_community, EaConfig(generations=8, lam=2, strict_improvement=True),
                    evaluator=lambda e, c: 0.5)
    n = len(small_community)
    assert [r.rate_after for r in log.records][-1] == pytest.approx(1 / (10 * n))
    assert not any(r.accepted for r in log.records)


def test_ties_are_accepted_by_default(small_community):
    _, log = run_ea(small_community, EaConfig(generations=3, lam=2), evaluator=lambda e, c: 0.5)
    assert all(r.accepted for r in log.records)


def test_short_run_properties(small_community):
    cfg = EaConfig(generations=25, lam=6, rng_seed=11, discrepancy=DiscrepancyConfig(8))
    best, log = run_ea(small_community, cfg)
    scores = log.parent_scores()
    assert np.all(np.diff(np.concatenate([[log.initial_score], scores])) <= 0)
    n = len(small_community)
    assert all(1 / (10 * n) <= r.rate_after <= 0.25 for r in log.records)
    assert best.users == small_community.users and best.repos == small_community.repos
    best.validate()
    assert evaluate(best, cfg.discrepancy) == scores[-1]
    best2, log2 = run_ea(small_community, cfg)
    assert best2 == best and log2.to_csv() == log.to_csv()


def test_parallel_matches_serial(small_community):
    cfg = EaConfig(generations=4, lam=4, rng_seed=2, discrepancy=DiscrepancyConfig(6))
    a, la = run_ea(small_community, cfg)
    b, lb = run_ea(small_community, cfg, workers=2)
    assert a == b and la.to_csv() == lb.to_csv()


def test_config_resolution_and_validation():
    cfg = EaConfig().resolve(200)
    assert cfg.initial_rate == 1 / 200 and cfg.rate_min == 1 / 2000
    # tiny seeds clamp the initial rate to rate_max
    assert EaConfig().resolve(2).initial_rate == 0.25
    with pytest.raises(ValueError):
        EaConfig(rate_increase=1.0).resolve(10)
    with pytest.raises(ValueError):
        EaConfig(rate_decrease=1.5).resolve(10)


def test_log_csv_header(small_community):
    _, log = run_ea(small_community, EaConfig(generations=1, lam=2, discrepancy=DiscrepancyConfig(4)))
    head, row = log.to_csv().splitlines()
    assert head == "generation,parent_score,best_offspring,accepted,rate,mutations"
    assert row.startswith("0,")
