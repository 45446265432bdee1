import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forgefuzz.simforge import (
    CostModel,
    FollowLimitError,
    ForbiddenError,
    ForgeError,
    InvalidTransitionError,
    MergeError,
    OpCost,
    SimForge,
    UnknownEntityError,
)


def test_create_user_idempotent():
    f = SimForge()
    f.create_user("a")
    f.create_user("a")
    assert list(f.users) == ["a"]
    assert [r.outcome for r in f.log] == ["ok", "ok"]


def test_follow_limit_error_leaves_state():
    f = SimForge(follow_limit=2)
    for u in "abcd":
        f.create_user(u)
    f.follow("a", "b")
    f.follow("a", "c")
    with pytest.raises(FollowLimitError) as err:
        f.follow("a", "d")
    assert err.value.http_status == 304
    assert err.value.sample.outcome == "follow_limit"
    assert f.users["a"] == {"b", "c"}
    # re-following an existing followee is not a new follow
    f.follow("a", "b")


def test_unlimited_follows():
    f = SimForge(follow_limit=None)
    names = [f"u{i}" for i in range(400)]
    for n in names:
        f.create_user(n)
    for n in names[1:]:
        f.follow(names[0], n)
    assert len(f.users[names[0]]) == 399


def test_push_to_missing_repo():
    f = SimForge()
    f.create_user("a")
    with pytest.raises(UnknownEntityError):
        f.push("a", "nope/repo", "a", "x")


def test_push_requires_membership():
    f = SimForge()
    f.create_user("a")
    f.create_repo("a", "org/r")
    with pytest.raises(ForbiddenError):
        f.push("a", "org/r", "a", "x")
    f.ensure_member("a", "org/r")
    assert f.push("a", "org/r", "a", "one\ntwo") == (2, 0)
    assert f.push("a", "org/r", "a", "one\nthree") == (1, 1)


def test_fresh_metrics_are_zero():
    m = SimForge().snapshot_metrics()
    assert m.per_user == {} and m.total_cpu == 0 and len(m.requests_per_bucket) == 0


def test_pr_lifecycle_and_illegal_transitions():
    f = SimForge()
    f.create_user("a")
    f.create_repo("a", "a/r")
    f.push("a", "a/r", "feat", "hello")
    pid = f.open_pr("a", "a/r", "feat")
    with pytest.raises(InvalidTransitionError):
        f.open_pr("a", "a/r", "feat")
    with pytest.raises(InvalidTransitionError):
        f.reopen_pr("a", pid)
    f.close_pr("a", pid)
    f.reopen_pr("a", pid)
    f.merge_pr("a", pid)
    for op in (f.merge_pr, f.close_pr, f.reopen_pr):
        with pytest.raises(InvalidTransitionError):
            op("a", pid)
    assert f.prs[pid].history == ["open", "closed", "open", "merged"]
    assert f.invariant_violations() == []


def test_merge_without_changes_fails():
    f = SimForge()
    f.create_user("a")
    f.create_repo("a", "a/r")
    f.push("a", "a/r", "feat", "")
    pid = f.open_pr("a", "a/r", "feat")
    with pytest.raises(MergeError):
        f.merge_pr("a", pid)
    assert f.prs[pid].status == "open"


def test_fork_is_idempotent_and_acyclic():
    f = SimForge()
    for u in "ab":
        f.create_user(u)
    f.create_repo("a", "a/r")
    name = f.fork("b", "a/r")
    assert f.fork("b", "a/r") == name
    assert f.repos[name].forked_from == "a/r"
    # a second-level fork whose natural name is taken gets a suffix
    f.create_repo("a", "a/r2")
    f.create_user("c")
    f.create_repo("c", "c/r")
    assert f.fork("c", "a/r") == "c/r-fork2"
    assert f.fork("a", name) == "a/r-fork2"
    assert f.invariant_violations() == []


def test_reset():
    f = SimForge()
    f.create_user("a")
    f.reset()
    assert f.users == {} and f.log == [] and f.clock == 0.0


def test_apply_returns_sample():
    f = SimForge()
    resp, sample = f.apply("create_user", "a")
    assert resp is None and sample.op == "create_user" and sample.user == "a"
    with pytest.raises(ValueError):
        f.apply("drop_tables")


def test_costs_grow_with_followees():
    cm = CostModel.zeros().with_op("follow", cpu=1.0, cpu_slope=0.5)
    f = SimForge(follow_limit=None, cost_model=cm)
    for u in "abcd":
        f.create_user(u)
    for t in "bcd":
        f.follow("a", t)
    assert [r.cpu for r in f.log if r.op == "follow"] == [1.0, 1.5, 2.0]


def test_cost_model_file_round_trip():
    text = "# synthetic costs\nfollow.cpu_slope = 0.25\nstar.latency = 0.5  # slow stars\n"
    cm = CostModel.parse(text)
    assert cm.ops["follow"].cpu_slope == 0.25 and cm.ops["star"].latency == 0.5
    assert CostModel.parse(cm.dump()) == cm
    for bad in ("follow.cpu", "nope.cpu = 1", "follow.speed = 1", "follow.cpu = -1"):
        with pytest.raises(ValueError):
            CostModel.parse(bad)


def test_metrics_match_log_resummation():
    f = SimForge()
    rng = np.random.default_rng(0)
    users = [f"u{i}" for i in range(8)]
    for u in users:
        f.create_user(u)
    f.create_repo("u0", "u0/r")
    for _ in range(100):
        a, b = rng.choice(users, 2, replace=False)
        try:
            if rng.random() < 0.5:
                f.follow(a, b)
            else:
                f.star(a, "u0/r")
        except ForgeError:
            pass
    m = f.snapshot_metrics(bucket_width=1.0)
    sums = {}
    for row in csv.DictReader(io.StringIO(f.request_log_csv())):
        s = sums.setdefault(row["user"], [0, 0.0, 0.0, 0.0])
        s[0] += 1
        s[1] += float(row["cpu"])
        s[2] += float(row["mem"])
        s[3] += float(row["latency"])
    assert set(sums) == set(m.per_user)
    for u, (n, cpu, mem, lat) in sums.items():
        pm = m.per_user[u]
        assert (pm.requests, pm.cpu, pm.mem, pm.latency) == (n, pytest.approx(cpu), pytest.approx(mem),
                                                              pytest.approx(lat))
    assert m.requests_per_bucket.sum() == len(f.log)
    assert m.cpu_per_bucket.sum() == pytest.approx(sum(r.cpu for r in f.log))


OPS = st.sampled_from(["create_user", "create_repo", "star", "fork", "ensure_member", "push",
                       "open_pr", "merge_pr", "close_pr", "reopen_pr", "follow"])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(OPS, st.integers(0, 5), st.integers(0, 5), st.integers(0, 2)), max_size=120))
def test_random_operation_sequences_keep_invariants(ops):
    f = SimForge(follow_limit=3)
    users = [f"u{i}" for i in range(6)]
    repos = [f"o/r{i}" for i in range(6)]
    for op, i, j, k in ops:
        u, v, r, b = users[i], users[j], repos[j], f"b{k}"
        try:
            if op == "create_user":
                f.create_user(u)
            elif op == "create_repo":
                f.create_repo(u, r)
            elif op == "follow":
                f.follow(u, v)
            elif op == "push":
                f.push(u, r, b, f"line {i}\nline {k}")
            elif op == "open_pr":
                f.open_pr(u, r, b)
            elif op in ("merge_pr", "close_pr", "reopen_pr"):
                getattr(f, op)(u, j + 1)
            else:
                getattr(f, op)(u, r)
        except ForgeError:
            pass
        assert f.invariant_violations() == []
    assert all(r.cpu >= 0 and r.mem >= 0 and r.latency >= 0 for r in f.log)


def test_opcost_linear():
    assert OpCost(1, 2, 3, 0.5, 0.25, 0.125).at(4) == (3.0, 3.0, 3.5)
