"""
Replaying a community and correlating load with features
========================================================

Replay the bundled community against the in-memory forge, then ask which
user features predict the load each user generated. Follows are the only
operation whose cost grows with the user's followee count here, so the
PageRank/CPU correlation should be clearly positive.
"""

from forgefuzz import assemble_graph, feature_points
from forgefuzz.analysis import UserLoad, correlation_report
from forgefuzz.dataset import bundled_path, read_edge_list
from forgefuzz.replay import CommitCorpus, replay
from forgefuzz.simforge import CostModel, SimForge

desk = read_edge_list(bundled_path("desk_community.csv").read_text())
cost = CostModel.zeros().with_op("follow", cpu=1.0, cpu_slope=0.05, latency=0.01)

# with the default limit some users cannot follow everyone they should
for limit in (20, None):
    forge = SimForge(follow_limit=limit, cost_model=cost)
    report = replay(desk, forge, CommitCorpus.from_edge_list(desk))
    print(f"follow limit {limit}: applied {report.applied}, errors {dict(report.error_tally)}")

load = UserLoad.from_metrics(forge.snapshot_metrics().per_user, aggregate="total")
points = feature_points(assemble_graph(desk))
for cell in correlation_report(points, load):
    if cell.load == "cpu":
        print(f"{cell.feature:>10} vs cpu: rho={cell.result.rho:+.3f}  p={cell.result.p_value:.2g}")
