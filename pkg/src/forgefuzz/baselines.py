"""Size-matched comparison datasets: event duplication ("simple") and
uniformly random new events ("random").

Both pad the original up to ``target_nonfollow`` base events, derive follows
and then adjust the follow set to exactly ``target_follow`` arcs.
"""
from __future__ import annotations

import numpy as np

from .dataset import EdgeList, FollowSet
from .followgraph import build_count_matrix, derive_follows


def adjust_follows(follows: FollowSet, n_users: int, target: int, rng: np.random.Generator) -> FollowSet:
    """Add or remove random symmetric user pairs until there are ``target`` arcs.

    Pairs move two arcs at a time. An odd ``target`` is met with one
    unpaired arc, so the result is symmetric only when ``target`` is even.
    """
    max_arcs = n_users * (n_users - 1)
    if not 0 <= target <= max_arcs:
        raise ValueError(f"target_follow must lie in [0, {max_arcs}] for {n_users} users")
    pairs = follows.pairs
    # work on unordered pairs (a < b); derived follow sets are symmetric
    und = pairs[pairs[:, 0] < pairs[:, 1]]
    have = {(int(a), int(b)) for a, b in und}
    half, odd = divmod(target, 2)
    if len(have) > half:
        order = sorted(have)
        drop = rng.choice(len(order), size=len(order) - half, replace=False)
        for i in drop:
            have.discard(order[i])
    elif len(have) < half:
        need = half - len(have)
        absent = n_users * (n_users - 1) // 2 - len(have)
        if need > absent // 2 and absent < 2_000_000:
            # dense regime: enumerate the complement and sample it
            iu = np.triu_indices(n_users, 1)
            cand = [(int(a), int(b)) for a, b in zip(*iu) if (int(a), int(b)) not in have]
            for i in rng.choice(len(cand), size=need, replace=False):
                have.add(cand[i])
        else:
            while need:
                a, b = (int(x) for x in rng.integers(n_users, size=2))
                if a == b:
                    continue
                p = (min(a, b), max(a, b))
                if p not in have:
                    have.add(p)
                    need -= 1
    out = [(a, b) for a, b in have] + [(b, a) for a, b in have]
    if odd:
        # one extra directed arc on a pair not yet connected; target <= max_arcs
        # guarantees such a pair exists
        while True:
            a, b = (int(x) for x in rng.integers(n_users, size=2))
            if a != b and (min(a, b), max(a, b)) not in have:
                out.append((a, b))
                break
    return FollowSet(out)


def _check_target(original: EdgeList, target_nonfollow: int) -> int:
    extra = target_nonfollow - len(original)
    if extra < 0:
        raise ValueError(f"target_nonfollow {target_nonfollow} is below the original size {len(original)}")
    return extra


def _finish(original: EdgeList, src, dst, et, target_follow: int, rng) -> EdgeList:
    grown = original.replace_events(src, dst, et)
    follows = derive_follows(build_count_matrix(grown))
    return grown.with_follows(adjust_follows(follows, grown.n_users, target_follow, rng))


def gen_simple(
    original: EdgeList, target_nonfollow: int, target_follow: int, rng: np.random.Generator
) -> EdgeList:
    """Append uniformly drawn copies of existing events (with replacement)."""
    extra = _check_target(original, target_nonfollow)
    pick = rng.integers(len(original), size=extra)
    src = np.concatenate([original.src, original.src[pick]])
    dst = np.concatenate([original.dst, original.dst[pick]])
    et = np.concatenate([original.etype, original.etype[pick]])
    return _finish(original, src, dst, et, target_follow, rng)


def gen_random(
    original: EdgeList, target_nonfollow: int, target_follow: int, rng: np.random.Generator
) -> EdgeList:
    """Append events with uniform existing user, repo and base type."""
    extra = _check_target(original, target_nonfollow)
    src = np.concatenate([original.src, rng.integers(original.n_users, size=extra)])
    dst = np.concatenate([original.dst, rng.integers(original.n_repos, size=extra)])
    et = np.concatenate([original.etype, rng.integers(4, size=extra)])
    return _finish(original, src, dst, et, target_follow, rng)
