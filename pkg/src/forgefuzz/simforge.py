"""In-memory Git forge with configurable limits and a synthetic cost model.

The simulator stands in for a real forge plus its monitoring stack. Every
mutating call is charged a deterministic (cpu, memory, latency) sample that
depends on the operation and on the size of the state it touches; the samples
form a request log from which per-user and time-bucketed metrics are built.
The costs are synthetic: they exist to make load/feature correlations
measurable, not to predict any real server.
"""
from __future__ import annotations

import csv
import difflib
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np


class ForgeError(Exception):
    code = "error"
    http_status = 500

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.sample: RequestRecord | None = None


class UnknownEntityError(ForgeError):
    code = "unknown_entity"
    http_status = 404


class ForbiddenError(ForgeError):
    code = "forbidden"
    http_status = 403


class InvalidArgumentError(ForgeError):
    code = "invalid_argument"
    http_status = 400


class FollowLimitError(ForgeError):
    """Following one more user would exceed the followee limit."""

    code = "follow_limit"
    http_status = 304


class InvalidTransitionError(ForgeError):
    code = "invalid_transition"
    http_status = 409


class MergeError(ForgeError):
    code = "merge_failed"
    http_status = 405


class ForgeUnavailableError(ForgeError):
    code = "unavailable"
    http_status = 503


class ForgeClient(Protocol):
    """Operations the replay workflow needs from a forge.

    ``*_exists``, ``find_open_pr`` and ``latest_pr`` are read-only lookups;
    all other calls mutate state, are charged to ``actor`` and raise a
    :class:`ForgeError` subclass on failure. ``create_*``, ``star``, ``fork``,
    ``ensure_member`` and ``follow`` are idempotent.
    """

    def user_exists(self, name: str) -> bool: ...
    def create_user(self, name: str, actor: str | None = None) -> None: ...
    def repo_exists(self, name: str) -> bool: ...
    def create_repo(self, actor: str, name: str) -> None: ...
    def star(self, user: str, repo: str) -> None: ...
    def fork(self, user: str, repo: str) -> str: ...
    def ensure_member(self, user: str, repo: str) -> None: ...
    def push(self, user: str, repo: str, branch: str, text: str) -> tuple[int, int]: ...
    def find_open_pr(self, repo: str, branch: str): ...
    def latest_pr(self, repo: str, branch: str) -> tuple[object, str] | None: ...
    def open_pr(self, user: str, repo: str, branch: str, text: str): ...
    def merge_pr(self, user: str, pr_id) -> None: ...
    def close_pr(self, user: str, pr_id) -> None: ...
    def reopen_pr(self, user: str, pr_id) -> None: ...
    def follow(self, user: str, target: str) -> None: ...


# ---------------------------------------------------------------- cost model

@dataclass(frozen=True)
class OpCost:
    cpu: float = 1.0
    mem: float = 1.0
    latency: float = 0.05
    cpu_slope: float = 0.0
    mem_slope: float = 0.0
    latency_slope: float = 0.0

    def at(self, size: float) -> tuple[float, float, float]:
        return (
            self.cpu + self.cpu_slope * size,
            self.mem + self.mem_slope * size,
            self.latency + self.latency_slope * size,
        )


#: What "size" means for each operation's slope terms.
SIZE_DRIVERS = {
    "create_user": "number of users on the forge",
    "create_repo": "number of repositories on the forge",
    "star": "stars on the repository",
    "fork": "forks of the repository",
    "ensure_member": "members of the repository",
    "push": "commits on the branch",
    "open_pr": "pull requests on the repository",
    "merge_pr": "pull requests on the repository",
    "close_pr": "pull requests on the repository",
    "reopen_pr": "pull requests on the repository",
    "follow": "followees of the acting user",
}

_DEFAULT_COSTS = {
    "create_user": OpCost(cpu=8.0, mem=6.0, latency=0.40, cpu_slope=0.004, mem_slope=0.002),
    "create_repo": OpCost(cpu=12.0, mem=10.0, latency=0.60, cpu_slope=0.01, mem_slope=0.01),
    "star": OpCost(cpu=1.0, mem=0.5, latency=0.05, cpu_slope=0.002),
    "fork": OpCost(cpu=10.0, mem=8.0, latency=0.80, cpu_slope=0.05),
    "ensure_member": OpCost(cpu=1.5, mem=0.5, latency=0.05, cpu_slope=0.005),
    "push": OpCost(cpu=4.0, mem=3.0, latency=0.30, cpu_slope=0.01, latency_slope=0.001),
    "open_pr": OpCost(cpu=5.0, mem=3.0, latency=0.35, cpu_slope=0.02),
    "merge_pr": OpCost(cpu=6.0, mem=4.0, latency=0.50, cpu_slope=0.02),
    "close_pr": OpCost(cpu=2.0, mem=1.0, latency=0.10),
    "reopen_pr": OpCost(cpu=2.0, mem=1.0, latency=0.10),
    "follow": OpCost(cpu=1.0, mem=0.5, latency=0.05, cpu_slope=0.05, mem_slope=0.02, latency_slope=0.002),
}


@dataclass(frozen=True)
class CostModel:
    """Per-operation ``base + slope * size`` costs; see :data:`SIZE_DRIVERS`."""

    ops: dict = field(default_factory=lambda: dict(_DEFAULT_COSTS))

    def cost(self, op: str, size: float) -> tuple[float, float, float]:
        return self.ops[op].at(size)

    @classmethod
    def zeros(cls) -> "CostModel":
        z = OpCost(0.0, 0.0, 0.0)
        return cls({op: z for op in _DEFAULT_COSTS})

    def with_op(self, op: str, **kw) -> "CostModel":
        if op not in self.ops:
            raise KeyError(op)
        return CostModel({**self.ops, op: replace(self.ops[op], **kw)})

    @classmethod
    def parse(cls, text: str) -> "CostModel":
        """Read ``op.field = value`` lines on top of the defaults; ``#`` starts a comment."""
        model = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            op, dot, fld = key.strip().partition(".")
            if not sep or not dot:
                raise ValueError(f"line {lineno}: expected 'op.field = value'")
            if op not in model.ops or fld not in OpCost.__dataclass_fields__:
                raise ValueError(f"line {lineno}: unknown key {key.strip()!r}")
            v = float(value)
            if v < 0 or not math.isfinite(v):
                raise ValueError(f"line {lineno}: costs must be finite and >= 0")
            model = model.with_op(op, **{fld: v})
        return model

    def dump(self) -> str:
        lines = []
        for op in sorted(self.ops):
            for fld in OpCost.__dataclass_fields__:
                lines.append(f"{op}.{fld} = {getattr(self.ops[op], fld)!r}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------- state types

PR_TRANSITIONS = {("open", "merged"), ("open", "closed"), ("closed", "open")}


@dataclass
class Branch:
    content: str = ""
    commits: int = 0


@dataclass
class Repo:
    name: str
    owner: str
    members: set = field(default_factory=set)
    stars: set = field(default_factory=set)
    forked_from: str | None = None
    forks: dict = field(default_factory=dict)  # user -> fork repo name
    branches: dict = field(default_factory=lambda: {"main": Branch()})
    prs: int = 0


@dataclass
class PullRequest:
    id: int
    repo: str
    branch: str
    author: str
    status: str = "open"
    history: list = field(default_factory=lambda: ["open"])


@dataclass(frozen=True)
class RequestRecord:
    seq: int
    user: str
    op: str
    cpu: float
    mem: float
    latency: float
    outcome: str
    start: float


@dataclass
class UserMetrics:
    requests: int = 0
    cpu: float = 0.0
    mem: float = 0.0
    latency: float = 0.0

    def mean(self) -> tuple[float, float, float]:
        if not self.requests:
            return (0.0, 0.0, 0.0)
        n = self.requests
        return (self.cpu / n, self.mem / n, self.latency / n)


@dataclass
class ForgeMetrics:
    per_user: dict
    bucket_width: float
    requests_per_bucket: np.ndarray
    cpu_per_bucket: np.ndarray
    mem_per_bucket: np.ndarray

    @property
    def total_cpu(self) -> float:
        return float(sum(m.cpu for m in self.per_user.values()))

    @property
    def total_mem(self) -> float:
        return float(sum(m.mem for m in self.per_user.values()))

    @property
    def total_latency(self) -> float:
        return float(sum(m.latency for m in self.per_user.values()))

    @property
    def total_requests(self) -> int:
        return sum(m.requests for m in self.per_user.values())


# ----------------------------------------------------------------- simulator

class SimForge:
    """Single-writer in-memory forge implementing :class:`ForgeClient`.

    ``follow_limit=None`` removes the followee cap.
    """

    def __init__(self, follow_limit: int | None = 300, cost_model: CostModel | None = None):
        if follow_limit is not None and follow_limit < 0:
            raise ValueError("follow_limit must be >= 0 or None")
        self.follow_limit = follow_limit
        self.cost_model = cost_model or CostModel()
        self.reset()

    def reset(self) -> None:
        """Drop all state and the request log."""
        self.users: dict[str, set] = {}
        self.repos: dict[str, Repo] = {}
        self.prs: dict[int, PullRequest] = {}
        self._pr_index: dict[tuple[str, str], list[int]] = defaultdict(list)
        self.log: list[RequestRecord] = []
        self.clock = 0.0

    # -- bookkeeping

    def _charge(self, op: str, actor: str, size: float, fn):
        cpu, mem, lat = self.cost_model.cost(op, size)
        try:
            result = fn()
        except ForgeError as exc:
            exc.sample = self._record(actor, op, cpu, mem, lat, exc.code)
            raise
        self._record(actor, op, cpu, mem, lat, "ok")
        return result

    def _record(self, actor, op, cpu, mem, lat, outcome) -> RequestRecord:
        rec = RequestRecord(len(self.log), actor, op, cpu, mem, lat, outcome, self.clock)
        self.log.append(rec)
        self.clock += lat
        return rec

    def _repo(self, name: str) -> Repo:
        try:
            return self.repos[name]
        except KeyError:
            raise UnknownEntityError(f"no repository {name!r}") from None

    def _need_user(self, name: str) -> None:
        if name not in self.users:
            raise UnknownEntityError(f"no user {name!r}")

    def _pr(self, pr_id) -> PullRequest:
        try:
            return self.prs[pr_id]
        except KeyError:
            raise UnknownEntityError(f"no pull request {pr_id!r}") from None

    def _transition(self, pr: PullRequest, new: str) -> None:
        if (pr.status, new) not in PR_TRANSITIONS:
            raise InvalidTransitionError(f"pull request {pr.id}: {pr.status} -> {new}")
        pr.status = new
        pr.history.append(new)

    # -- lookups (free)

    def user_exists(self, name: str) -> bool:
        return name in self.users

    def repo_exists(self, name: str) -> bool:
        return name in self.repos

    def find_open_pr(self, repo: str, branch: str):
        for pid in reversed(self._pr_index.get((repo, branch), ())):
            if self.prs[pid].status == "open":
                return pid
        return None

    def latest_pr(self, repo: str, branch: str):
        ids = self._pr_index.get((repo, branch))
        if not ids:
            return None
        return ids[-1], self.prs[ids[-1]].status

    # -- mutating operations

    def create_user(self, name: str, actor: str | None = None) -> None:
        def run():
            if not name:
                raise InvalidArgumentError("empty user name")
            self.users.setdefault(name, set())

        self._charge("create_user", actor or name, len(self.users), run)

    def create_repo(self, actor: str, name: str) -> None:
        def run():
            if not name:
                raise InvalidArgumentError("empty repository name")
            if name not in self.repos:
                owner = name.split("/", 1)[0] if "/" in name else actor
                self.repos[name] = Repo(name, owner)

        self._charge("create_repo", actor, len(self.repos), run)

    def star(self, user: str, repo: str) -> None:
        size = len(self.repos[repo].stars) if repo in self.repos else 0

        def run():
            self._need_user(user)
            self._repo(repo).stars.add(user)

        self._charge("star", user, size, run)

    def fork(self, user: str, repo: str) -> str:
        size = len(self.repos[repo].forks) if repo in self.repos else 0

        def run():
            self._need_user(user)
            src = self._repo(repo)
            if user in src.forks:
                return src.forks[user]
            base = repo.rsplit("/", 1)[-1]
            name, i = f"{user}/{base}", 1
            while name in self.repos:
                i += 1
                name = f"{user}/{base}-fork{i}"
            self.repos[name] = Repo(
                name, user, members={user}, forked_from=repo,
                branches={b: Branch(br.content, br.commits) for b, br in src.branches.items()},
            )
            src.forks[user] = name
            return name

        return self._charge("fork", user, size, run)

    def ensure_member(self, user: str, repo: str) -> None:
        size = len(self.repos[repo].members) if repo in self.repos else 0

        def run():
            self._need_user(user)
            self._repo(repo).members.add(user)

        self._charge("ensure_member", user, size, run)

    def push(self, user: str, repo: str, branch: str, text: str) -> tuple[int, int]:
        """Replace the branch's file with ``text``; returns (lines added, lines deleted)."""
        r = self.repos.get(repo)
        size = r.branches[branch].commits if r is not None and branch in r.branches else 0

        def run():
            self._need_user(user)
            rp = self._repo(repo)
            if user not in rp.members and user != rp.owner:
                raise ForbiddenError(f"{user} cannot push to {repo}")
            br = rp.branches.get(branch)
            if br is None:
                br = rp.branches[branch] = Branch(rp.branches["main"].content, 0)
            added = deleted = 0
            for line in difflib.ndiff(br.content.splitlines(), text.splitlines()):
                if line.startswith("+ "):
                    added += 1
                elif line.startswith("- "):
                    deleted += 1
            br.content = text
            br.commits += 1
            return added, deleted

        return self._charge("push", user, size, run)

    def open_pr(self, user: str, repo: str, branch: str, text: str = "") -> int:
        size = self.repos[repo].prs if repo in self.repos else 0

        def run():
            self._need_user(user)
            rp = self._repo(repo)
            if branch not in rp.branches or branch == "main":
                raise InvalidArgumentError(f"no source branch {branch!r} in {repo}")
            if self.find_open_pr(repo, branch) is not None:
                raise InvalidTransitionError(f"an open pull request already exists for {repo}:{branch}")
            pid = len(self.prs) + 1
            self.prs[pid] = PullRequest(pid, repo, branch, user)
            self._pr_index[(repo, branch)].append(pid)
            rp.prs += 1
            return pid

        return self._charge("open_pr", user, size, run)

    def _pr_size(self, pr_id) -> int:
        pr = self.prs.get(pr_id)
        return self.repos[pr.repo].prs if pr is not None else 0

    def merge_pr(self, user: str, pr_id) -> None:
        """Merge the branch into ``main``; fails when there is nothing to merge."""
        def run():
            self._need_user(user)
            pr = self._pr(pr_id)
            if pr.status != "open":
                raise InvalidTransitionError(f"pull request {pr_id} is {pr.status}")
            rp = self.repos[pr.repo]
            head, main = rp.branches[pr.branch], rp.branches["main"]
            if head.content == main.content:
                raise MergeError(f"pull request {pr_id} has no changes")
            main.content = head.content
            main.commits += 1
            self._transition(pr, "merged")

        self._charge("merge_pr", user, self._pr_size(pr_id), run)

    def close_pr(self, user: str, pr_id) -> None:
        def run():
            self._need_user(user)
            self._transition(self._pr(pr_id), "closed")

        self._charge("close_pr", user, self._pr_size(pr_id), run)

    def reopen_pr(self, user: str, pr_id) -> None:
        def run():
            self._need_user(user)
            pr = self._pr(pr_id)
            if self.find_open_pr(pr.repo, pr.branch) is not None:
                raise InvalidTransitionError(f"another pull request is open on {pr.repo}:{pr.branch}")
            self._transition(pr, "open")

        self._charge("reopen_pr", user, self._pr_size(pr_id), run)

    def follow(self, user: str, target: str) -> None:
        size = len(self.users.get(user, ()))

        def run():
            self._need_user(user)
            self._need_user(target)
            if user == target:
                raise InvalidArgumentError("users cannot follow themselves")
            followees = self.users[user]
            if target in followees:
                return
            if self.follow_limit is not None and len(followees) >= self.follow_limit:
                raise FollowLimitError(f"{user} already follows {len(followees)} users")
            followees.add(target)

        self._charge("follow", user, size, run)

    # -- generic entry point

    _OPS = ("create_user", "create_repo", "star", "fork", "ensure_member", "push",
            "open_pr", "merge_pr", "close_pr", "reopen_pr", "follow")

    def apply(self, op: str, *args):
        """Run one mutating operation by name; returns ``(response, sample)``.

        A failing call raises its :class:`ForgeError` with ``.sample`` set.
        """
        if op not in self._OPS:
            raise ValueError(f"unknown forge operation {op!r}")
        response = getattr(self, op)(*args)
        return response, self.log[-1]

    # -- metrics and checks

    def snapshot_metrics(self, bucket_width: float = 60.0) -> ForgeMetrics:
        """Per-user totals plus request/cpu/memory sums per clock bucket."""
        per_user: dict[str, UserMetrics] = {}
        for rec in self.log:
            m = per_user.setdefault(rec.user, UserMetrics())
            m.requests += 1
            m.cpu += rec.cpu
            m.mem += rec.mem
            m.latency += rec.latency
        nb = int(self.clock // bucket_width) + 1 if self.log else 0
        reqs, cpu, mem = np.zeros(nb, np.int64), np.zeros(nb), np.zeros(nb)
        for rec in self.log:
            b = int(rec.start // bucket_width)
            reqs[b] += 1
            cpu[b] += rec.cpu
            mem[b] += rec.mem
        return ForgeMetrics(dict(sorted(per_user.items())), bucket_width, reqs, cpu, mem)

    def request_log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["seq", "user", "op", "cpu", "mem", "latency", "outcome"])
        for r in self.log:
            w.writerow([r.seq, r.user, r.op, repr(r.cpu), repr(r.mem), repr(r.latency), r.outcome])
        return buf.getvalue()

    def invariant_violations(self) -> list[str]:
        """Empty when every state invariant holds."""
        bad = []
        if self.follow_limit is not None:
            for u, fs in self.users.items():
                if len(fs) > self.follow_limit:
                    bad.append(f"{u} follows {len(fs)} > {self.follow_limit}")
        for u, fs in self.users.items():
            if u in fs:
                bad.append(f"{u} follows itself")
            if not fs <= self.users.keys():
                bad.append(f"{u} follows unknown users")
        for name, r in self.repos.items():
            seen, cur = {name}, r.forked_from
            while cur is not None:
                if cur in seen or cur not in self.repos:
                    bad.append(f"fork chain of {name} is cyclic or dangling")
                    break
                seen.add(cur)
                cur = self.repos[cur].forked_from
        open_per_branch = defaultdict(int)
        for pid, pr in self.prs.items():
            if pid != pr.id:
                bad.append(f"pull request id mismatch {pid}")
            h = pr.history
            if h[0] != "open" or h[-1] != pr.status:
                bad.append(f"pull request {pid} history inconsistent")
            for a, b in zip(h, h[1:]):
                if (a, b) not in PR_TRANSITIONS:
                    bad.append(f"pull request {pid} illegal transition {a}->{b}")
            if pr.status == "open":
                open_per_branch[(pr.repo, pr.branch)] += 1
        bad += [f"{k} has {v} open pull requests" for k, v in open_per_branch.items() if v > 1]
        return bad
