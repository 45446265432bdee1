"""
From event stream to feature space
==================================

Parse a small GitHub-Archive style event file, derive the follow graph and
place every user in the unit cube of (centrality, PageRank, event-type code).
"""

import numpy as np

from forgefuzz import assemble_graph, feature_points, parse_gharchive_lines, summarize
from forgefuzz.dataset import bundled_path

# the bundled file mixes accepted events, other event types and broken lines
lines = bundled_path("sample_events.jsonl").read_text().splitlines()
edges, stats = parse_gharchive_lines(lines)
print(f"{stats.lines} lines: {stats.accepted} accepted, {stats.skipped} skipped")

# users interacting with a common repository follow each other
graph = assemble_graph(edges)
print(summarize(edges, graph.follows))

points = feature_points(graph)
np.set_printoptions(precision=3, suppress=True)
for user, p in zip(points.users, points.points):
    print(f"{user:>6}  {p}")
