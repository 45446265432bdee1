"""User x repo interaction counts, derived follows and the interaction graph."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dataset import EdgeList, FollowSet


def build_count_matrix(e: EdgeList) -> sp.csr_matrix:
    """U x R matrix of event multiplicities; every event type weighs one."""
    data = np.ones(len(e), dtype=np.int64)
    m = sp.coo_matrix((data, (e.src, e.dst)), shape=(e.n_users, e.n_repos))
    return m.tocsr()  # duplicates are summed here


def derive_follows(m) -> FollowSet:
    """Follow pairs ``(u, v)``, ``u != v``, whose count rows have cosine > 0.

    Counts are non-negative, so a positive cosine is the same as the two
    rows sharing a repository. We use that support intersection directly;
    all-zero rows match nobody.
    """
    b = (sp.csr_matrix(m) > 0).astype(np.int64)
    shared = (b @ b.T).tocoo()
    keep = shared.row != shared.col
    pairs = np.column_stack([shared.row[keep], shared.col[keep]]).astype(np.int64)
    return FollowSet(pairs)


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    """Weighted directed multigraph over ``R + U`` nodes.

    Arcs are aggregated: ``weight`` is the multiplicity of ``src -> dst``.
    Node numbering follows :class:`EdgeList` (repos first, then users).
    """

    base: EdgeList
    follows: FollowSet
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.base.n_nodes

    @property
    def n_arcs(self) -> int:
        """Arc count with multiplicity: base events plus follow arcs."""
        return int(self.weight.sum())

    def scaled(self, k: float) -> "InteractionGraph":
        """Same graph with every arc multiplicity multiplied by ``k``."""
        return InteractionGraph(self.base, self.follows, self.src, self.dst, self.weight * k)

    def adjacency(self) -> sp.csr_matrix:
        n = self.n_nodes
        return sp.csr_matrix((self.weight, (self.src, self.dst)), shape=(n, n))


def graph_from_parts(e: EdgeList, follows: FollowSet) -> InteractionGraph:
    """Assemble a graph from a base edge list and an explicit follow set."""
    R = e.n_repos
    s = np.concatenate([R + e.src, R + follows.pairs[:, 0]]) if len(follows) else R + e.src
    d = np.concatenate([e.dst, R + follows.pairs[:, 1]]) if len(follows) else e.dst.copy()
    n = e.n_nodes
    if len(s):
        key, w = np.unique(s * n + d, return_counts=True)
        src, dst = np.divmod(key, n)
    else:
        src = dst = w = np.zeros(0, np.int64)
    return InteractionGraph(e, follows, src.astype(np.int64), dst.astype(np.int64), w.astype(np.float64))


def assemble_graph(e: EdgeList) -> InteractionGraph:
    """Base events plus follows derived from the user x repo counts."""
    return graph_from_parts(e, derive_follows(build_count_matrix(e)))
