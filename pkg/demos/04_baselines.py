"""
Size-matched comparison datasets
================================

A diversified dataset is only interesting against datasets of the same
size: one made by duplicating events and one by adding random events.
"""

import numpy as np

from forgefuzz import summarize
from forgefuzz.baselines import gen_random, gen_simple
from forgefuzz.dataset import bundled_path, read_edge_list
from forgefuzz.evolve import evaluate

desk = read_edge_list(bundled_path("desk_community.csv").read_text())
target_events, target_follows = 900, 1500

for name, gen in [("simple", gen_simple), ("random", gen_random)]:
    out = gen(desk, target_events, target_follows, np.random.default_rng(0))
    c = summarize(out)
    print(f"{name:>6}: {c.nonfollow} events, {c.follow} follows, "
          f"{len(out.support_pairs() - desk.support_pairs())} new user-repo pairs, D*={evaluate(out):.4f}")
