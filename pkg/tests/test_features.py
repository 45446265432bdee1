import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forgefuzz.dataset import EdgeList, FollowSet, synthetic_community
from forgefuzz.features import (
    PageRankConfig,
    degree_raw,
    event_type_code,
    feature_points,
    minmax,
    pagerank,
)
from forgefuzz.followgraph import InteractionGraph, assemble_graph, graph_from_parts

from .conftest import F, P, PR, W


def dense_pagerank(g, d=0.85):
    """Stationary vector of the dense Google matrix by a linear solve."""
    n = g.n_nodes
    a = np.zeros((n, n))
    np.add.at(a, (g.src, g.dst), g.weight)
    out = a.sum(axis=1)
    t = np.where(out[:, None] > 0, a / np.where(out > 0, out, 1)[:, None], 1.0 / n)
    google = d * t + (1 - d) / n
    m = google.T - np.eye(n)
    m[-1] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(m, b)


def raw_graph(n, arcs):
    """Graph over n repo-less user nodes built directly from arcs."""
    users = tuple(f"n{i}" for i in range(n))
    e = EdgeList(users, (), [], [], [])
    src = np.array([a for a, _ in arcs], dtype=np.int64)
    dst = np.array([b for _, b in arcs], dtype=np.int64)
    return InteractionGraph(e, FollowSet(), src, dst, np.ones(len(arcs)))


def test_degree_counts_multiplicity_and_follows():
    # user with 3 pushes to one repo, 2 follows out and 2 in
    e = EdgeList.from_events([("a", "r", P)] * 3 + [("b", "s", P), ("c", "t", P)])
    fs = FollowSet([(0, 1), (0, 2), (1, 0), (2, 0)])
    g = graph_from_parts(e, fs)
    deg = degree_raw(g)
    assert deg[e.user_node(0)] == 7


def test_isolated_repo_has_degree_zero():
    e = EdgeList(("a",), ("r", "x"), [0], [0], [0])
    g = graph_from_parts(e, FollowSet())
    assert degree_raw(g)[1] == 0


def test_star_degrees():
    # k=3 users each with one event on the same repo: each follows the other two
    k = 3
    g = assemble_graph(EdgeList.from_events([(f"u{i}", "r", P) for i in range(k)]))
    deg = degree_raw(g)
    assert deg[0] == k
    assert deg[1:].tolist() == [1 + 2 * (k - 1)] * k


def test_pagerank_two_node_cycle():
    pr = pagerank(raw_graph(2, [(0, 1), (1, 0)]))
    assert pr.converged
    assert pr.scores == pytest.approx([0.5, 0.5], abs=1e-12)


def test_pagerank_single_node():
    pr = pagerank(raw_graph(1, []))
    assert pr.scores.tolist() == [1.0]


def test_pagerank_chain_matches_dense_oracle():
    g = raw_graph(3, [(0, 1), (1, 2)])
    pr = pagerank(g)
    assert np.max(np.abs(pr.scores - dense_pagerank(g))) < 1e-8


def test_pagerank_matches_networkx_on_community(small_community):
    g = assemble_graph(small_community)
    nxg = nx.DiGraph()
    nxg.add_nodes_from(range(g.n_nodes))
    nxg.add_weighted_edges_from(zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist()))
    ref = nx.pagerank(nxg, alpha=0.85, tol=1e-13, max_iter=1000)
    ours = pagerank(g).scores
    assert np.max(np.abs(ours - np.array([ref[i] for i in range(g.n_nodes)]))) < 1e-8


def test_pagerank_nonconvergence_flag():
    pr = pagerank(raw_graph(3, [(0, 1), (1, 2)]), PageRankConfig(max_iterations=2))
    assert not pr.converged and pr.iterations == 2


def test_pagerank_config_validation():
    with pytest.raises(ValueError):
        PageRankConfig(damping=1.0)


def test_event_codes():
    e = EdgeList.from_events([("a", "r", P), ("a", "r", P), ("b", "r", P), ("b", "r", W), ("b", "r", PR),
                              ("b", "r", F), ("c", "r", F), ("c", "r", PR)])
    assert event_type_code(e).tolist() == [8, 15, 3]


def test_event_code_rejects_silent_user():
    e = EdgeList(("a", "b"), ("r",), [0], [0], [0])
    with pytest.raises(ValueError, match="b"):
        event_type_code(e)


def test_minmax_degenerate():
    assert minmax(np.array([5.0, 5.0])).tolist() == [0.0, 0.0]
    assert minmax(np.array([5.0, 10.0])).tolist() == [0.0, 1.0]


def test_identical_users_collapse():
    e = EdgeList.from_events([("a", "r", W), ("b", "r", W)])
    fp = feature_points(assemble_graph(e))
    assert fp.points.tolist() == [[0.0, 0.0, 3 / 14], [0.0, 0.0, 3 / 14]]


# Frozen from a by-hand recomputation (dense linear solve for PageRank).
FIVE_DEGREE = [5, 6, 3, 6, 3]
FIVE_CODE = [12, 5, 2, 15, 8]
FIVE_PAGERANK = [0.09758692083626123, 0.13179264566546614, 0.09758692083626119,
                 0.10687459086617966, 0.08774966407960007]
FIVE_P_SCALED = [0.22335583110971902, 1.0, 0.22335583110971807, 0.43423324438863636, 0.0]


def test_five_user_table(five_users):
    g = assemble_graph(five_users)
    assert dense_pagerank(g)[3:] == pytest.approx(FIVE_PAGERANK, abs=1e-14)
    fp = feature_points(g)
    assert fp.users == ("u1", "u2", "u3", "u4", "u5")
    assert fp.centrality.tolist() == FIVE_DEGREE
    assert fp.event_code.tolist() == FIVE_CODE
    assert fp.pagerank == pytest.approx(FIVE_PAGERANK, abs=1e-11)
    assert fp.points[:, 0] == pytest.approx([2 / 3, 1, 0, 1, 0], abs=1e-15)
    assert fp.points[:, 1] == pytest.approx(FIVE_P_SCALED, abs=1e-9)
    assert fp.points[:, 2] == pytest.approx([11 / 14, 4 / 14, 1 / 14, 1, 7 / 14], abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_scale_invariance(seed, k):
    g = assemble_graph(synthetic_community(20, 6, 70, seed=seed))
    a, b = feature_points(g), feature_points(g.scaled(k))
    assert np.max(np.abs(a.points[:, :2] - b.points[:, :2])) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_pagerank_sums_to_one_and_positive(seed):
    g = assemble_graph(synthetic_community(25, 6, 80, seed=seed))
    s = pagerank(g).scores
    assert abs(s.sum() - 1) < 1e-10 and np.all(s > 0)


def test_codes_ignore_multiplicity(small_community):
    e = small_community
    doubled = e.replace_events(np.tile(e.src, 2), np.tile(e.dst, 2), np.tile(e.etype, 2))
    assert np.array_equal(event_type_code(e), event_type_code(doubled))


def test_user_relabel_equivariance():
    events = [("a", "r", P), ("b", "r", W), ("b", "s", F), ("c", "s", PR), ("c", "s", P)]
    renamed = {"a": "z", "b": "y", "c": "x"}
    f1 = feature_points(assemble_graph(EdgeList.from_events(events)))
    f2 = feature_points(assemble_graph(EdgeList.from_events([(renamed[u], r, t) for u, r, t in events])))
    row2 = {u: p for u, p in zip(f2.users, f2.points)}
    for u, p in zip(f1.users, f1.points):
        assert np.allclose(p, row2[renamed[u]], atol=1e-12)


def test_feature_csv_round_trip(five_users):
    fp = feature_points(assemble_graph(five_users))
    back = type(fp).from_csv(fp.to_csv())
    assert back.users == fp.users
    assert np.array_equal(back.points, fp.points)
    assert np.array_equal(back.pagerank, fp.pagerank)
