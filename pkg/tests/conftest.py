import pytest

from forgefuzz.dataset import EdgeList, EventType, bundled_path, read_edge_list, synthetic_community

P, W, PR, F = EventType.PUSH, EventType.WATCH, EventType.PULL_REQUEST, EventType.FORK


@pytest.fixture
def five_users():
    """Hand-checked community: follows u1-u2 (r1), u2-u3 (r2), u4-u5 (r3)."""
    return EdgeList.from_events([
        ("u1", "r1", P), ("u1", "r1", P), ("u1", "r1", W),
        ("u2", "r1", W), ("u2", "r2", F),
        ("u3", "r2", PR),
        ("u4", "r3", P), ("u4", "r3", F), ("u4", "r3", PR), ("u4", "r3", W),
        ("u5", "r3", P),
    ])


@pytest.fixture
def sample_lines():
    return bundled_path("sample_events.jsonl").read_text().splitlines()


@pytest.fixture(scope="session")
def desk():
    return read_edge_list(bundled_path("desk_community.csv").read_text())


@pytest.fixture
def small_community():
    return synthetic_community(15, 5, 60, seed=3)


def run_pipeline(workdir, main):
    """Run every subcommand once on the bundled fixtures inside ``workdir``.

    Uses relative paths so that manifests do not depend on the location.
    Returns the list of exit codes.
    """
    import os
    import shutil

    shutil.copy(bundled_path("sample_events.jsonl"), workdir / "events.jsonl")
    shutil.copy(bundled_path("desk_community.csv"), workdir / "desk.csv")
    steps = [
        ["ingest", "events.jsonl", "-o", "edges.csv"],
        ["features", "edges.csv", "-o", "features.csv"],
        ["evolve", "desk.csv", "--out-dir", "evolved", "--generations", "5", "--lambda", "4", "--seed", "3"],
        ["baseline", "edges.csv", "--mode", "random", "--target-nonfollow", "30", "--target-follow", "12",
         "--seed", "1", "-o", "random.csv"],
        ["features", "evolved/evolved.csv", "-o", "evolved_features.csv"],
        ["replay", "evolved/evolved.csv", "--out-dir", "replay", "--order", "shuffle", "--seed", "2"],
        ["analyze", "--features", "evolved_features.csv", "--request-log", "replay/request_log.csv",
         "--dataset", "random=random.csv", "--out-dir", "analysis"],
    ]
    cwd = os.getcwd()
    os.chdir(workdir)
    try:
        return [main(s) for s in steps]
    finally:
        os.chdir(cwd)
