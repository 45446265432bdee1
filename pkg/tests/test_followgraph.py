import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from forgefuzz.dataset import EdgeList, synthetic_community
from forgefuzz.followgraph import assemble_graph, build_count_matrix, derive_follows

from .conftest import F, P, W


def cosine_follows(m):
    """All-pairs cosine loop, the definition the fast path must match."""
    m = np.asarray(m, dtype=float)
    out = set()
    norms = np.sqrt((m * m).sum(axis=1))
    for u in range(len(m)):
        for v in range(len(m)):
            if u == v or norms[u] == 0 or norms[v] == 0:
                continue
            if m[u] @ m[v] / (norms[u] * norms[v]) > 0:
                out.add((u, v))
    return out


def test_count_matrix_counts_all_types():
    e = EdgeList.from_events([("a", "r1", P), ("a", "r1", W), ("b", "r2", F)])
    m = build_count_matrix(e).toarray()
    assert m.tolist() == [[2, 0], [0, 1]]


def test_count_matrix_four_events_on_one_repo():
    # one user with four events on repo_1 and nothing else, as in the sparse matrix excerpt
    events = [("user659", "repo1", t) for t in (P, P, W, F)] + [("user658", "repo2", P)]
    e = EdgeList.from_events(events)
    m = build_count_matrix(e).toarray()
    assert m[e.users.index("user659"), e.repos.index("repo1")] == 4
    assert m.sum(axis=1).tolist() == e.user_event_counts().tolist()


def test_count_matrix_empty():
    assert build_count_matrix(EdgeList.empty()).shape == (0, 0)


def test_shared_repo_gives_both_directions():
    e = EdgeList.from_events([("a", "r", P), ("b", "r", W)])
    assert derive_follows(build_count_matrix(e)).to_set() == {(0, 1), (1, 0)}


def test_disjoint_repos_give_no_follows():
    e = EdgeList.from_events([("a", "r1", P), ("b", "r2", W)])
    assert len(derive_follows(build_count_matrix(e))) == 0


def test_zero_rows_follow_nobody():
    m = np.array([[1, 0], [0, 0], [1, 1]])
    assert derive_follows(m).to_set() == {(0, 2), (2, 0)}


@settings(max_examples=80, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(1, 12), st.integers(1, 6)), elements=st.integers(0, 3)))
def test_support_intersection_equals_cosine(m):
    fs = derive_follows(m)
    assert fs.to_set() == cosine_follows(m)
    assert fs.is_symmetric() and not fs.has_self_pairs()


def test_community_matches_cosine_loop():
    e = synthetic_community(40, 9, 150, seed=5)
    m = build_count_matrix(e)
    assert derive_follows(m).to_set() == cosine_follows(m.toarray())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 14), st.integers(0, 4))
def test_adding_an_event_never_removes_follows(seed, u, r):
    e = synthetic_community(15, 5, 40, seed=seed)
    before = derive_follows(build_count_matrix(e)).to_set()
    grown = e.replace_events(list(e.src) + [u], list(e.dst) + [r], list(e.etype) + [0])
    after = derive_follows(build_count_matrix(grown)).to_set()
    assert before <= after


def test_single_push_graph():
    g = assemble_graph(EdgeList.from_events([("a", "r", P)]))
    assert g.n_arcs == 1 and len(g.follows) == 0


def test_two_users_shared_repo_graph():
    g = assemble_graph(EdgeList.from_events([("a", "r", P), ("b", "r", W)]))
    assert g.n_arcs == 4
    assert len(g.follows) == 2


def test_graph_is_deterministic(small_community):
    a, b = assemble_graph(small_community), assemble_graph(small_community)
    assert a.follows == b.follows
    assert np.array_equal(a.weight, b.weight)
    assert a.n_arcs == len(small_community) + len(a.follows)
