"""Event streams, the canonical edge-list CSV format and dataset statistics.

An :class:`EdgeList` is an ordered multiset of typed events between users and
repositories. Events are stored column-wise as integer arrays so the
evolutionary loop can copy and mutate them cheaply; names live in two sorted
tuples. Node indices follow one fixed rule: repositories take ``0..R-1`` and
users ``R..R+U-1``, each block sorted lexicographically by name.
"""
from __future__ import annotations

import csv
import enum
import io
import json
from collections.abc import Iterable
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np


def bundled_path(name: str) -> Path:
    """Path of a data file shipped with the package (``sample_events.jsonl``, ``desk_community.csv``)."""
    return Path(str(resources.files("forgefuzz") / "data" / name))


class EventType(enum.IntEnum):
    PUSH = 0
    WATCH = 1
    PULL_REQUEST = 2
    FORK = 3
    FOLLOW = 4

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def bit(self) -> int:
        """Bit used by the event-type code (Push=8, Watch=4, PullRequest=2, Fork=1)."""
        if self is EventType.FOLLOW:
            raise ValueError("FollowEvent carries no event-type bit")
        return 1 << (3 - int(self))

    @classmethod
    def from_label(cls, label: str) -> "EventType":
        try:
            return _FROM_LABEL[label]
        except KeyError:
            raise ValueError(f"unknown event type {label!r}") from None


_LABELS = {
    EventType.PUSH: "PushEvent",
    EventType.WATCH: "WatchEvent",
    EventType.PULL_REQUEST: "PullRequestEvent",
    EventType.FORK: "ForkEvent",
    EventType.FOLLOW: "FollowEvent",
}
_FROM_LABEL = {v: k for k, v in _LABELS.items()}

#: The four event types an edge list may store; follows are always derived.
BASE_TYPES = (EventType.PUSH, EventType.WATCH, EventType.PULL_REQUEST, EventType.FORK)


class NodeKind(str, enum.Enum):
    USER = "User"
    REPO = "Repo"


@dataclass(frozen=True)
class NodeId:
    kind: NodeKind
    name: str
    index: int


class DatasetError(ValueError):
    """Base class for invalid dataset contents."""


class EmptyDatasetError(DatasetError):
    def __init__(self, message: str, stats: "ParseStats | None" = None):
        super().__init__(message)
        self.stats = stats


class EdgeListFormatError(DatasetError):
    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class FollowSet:
    """Directed user->user follow arcs, stored as sorted unique index pairs."""

    __slots__ = ("pairs",)

    def __init__(self, pairs: np.ndarray | Iterable[tuple[int, int]] = ()):
        arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if len(arr):
            arr = np.unique(arr, axis=0)
        self.pairs = arr
        self.pairs.setflags(write=False)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return (tuple(map(int, p)) for p in self.pairs)

    def __contains__(self, pair) -> bool:
        u, v = pair
        if not len(self.pairs):
            return False
        i = np.searchsorted(self.pairs[:, 0], u, side="left")
        j = np.searchsorted(self.pairs[:, 0], u, side="right")
        return bool(np.any(self.pairs[i:j, 1] == v))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FollowSet):
            return NotImplemented
        return self.pairs.shape == other.pairs.shape and bool(np.all(self.pairs == other.pairs))

    def __repr__(self) -> str:
        return f"FollowSet({len(self)} arcs)"

    def to_set(self) -> set[tuple[int, int]]:
        return set(iter(self))

    def is_symmetric(self) -> bool:
        if not len(self.pairs):
            return True
        return FollowSet(self.pairs[:, ::-1]) == self

    def has_self_pairs(self) -> bool:
        return bool(np.any(self.pairs[:, 0] == self.pairs[:, 1])) if len(self.pairs) else False

    def out_degree(self, n_users: int) -> np.ndarray:
        return np.bincount(self.pairs[:, 0], minlength=n_users) if len(self.pairs) else np.zeros(n_users, np.int64)

    def in_degree(self, n_users: int) -> np.ndarray:
        return np.bincount(self.pairs[:, 1], minlength=n_users) if len(self.pairs) else np.zeros(n_users, np.int64)


@dataclass(frozen=True, eq=False)
class EdgeList:
    """Ordered non-Follow events plus, optionally, a persisted follow set.

    ``src`` holds user indices (``0..U-1``), ``dst`` repo indices
    (``0..R-1``) and ``etype`` :class:`EventType` values. ``follows`` is only
    set for derived datasets (baselines, files read with follows); inside the
    evolutionary loop it is always ``None``.
    """

    users: tuple[str, ...]
    repos: tuple[str, ...]
    src: np.ndarray
    dst: np.ndarray
    etype: np.ndarray
    follows: FollowSet | None = None

    def __post_init__(self):
        for name in ("src", "dst", "etype"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.src) == len(self.dst) == len(self.etype)):
            raise DatasetError("event columns differ in length")

    @classmethod
    def empty(cls) -> "EdgeList":
        z = np.zeros(0, np.int64)
        return cls((), (), z, z, z)

    @classmethod
    def from_events(
        cls,
        events: Iterable[tuple[str, str, EventType]],
        follows: Iterable[tuple[str, str]] | None = None,
    ) -> "EdgeList":
        """Build from ``(user, repo, type)`` triples, assigning sorted indices.

        ``follows`` are ``(user, user)`` name pairs; their endpoints must also
        appear in some base event.
        """
        events = list(events)
        users = tuple(sorted({u for u, _, _ in events}))
        repos = tuple(sorted({r for _, r, _ in events}))
        uidx = {u: i for i, u in enumerate(users)}
        ridx = {r: i for i, r in enumerate(repos)}
        for _, _, t in events:
            if EventType(t) is EventType.FOLLOW:
                raise DatasetError("base edge lists cannot hold FollowEvents")
        src = np.array([uidx[u] for u, _, _ in events], dtype=np.int64)
        dst = np.array([ridx[r] for _, r, _ in events], dtype=np.int64)
        et = np.array([int(t) for _, _, t in events], dtype=np.int64)
        fs = None
        if follows is not None:
            pairs = []
            for a, b in follows:
                if a not in uidx or b not in uidx:
                    raise DatasetError(f"follow {a}->{b} references a user without base events")
                pairs.append((uidx[a], uidx[b]))
            fs = FollowSet(pairs)
        out = cls(users, repos, src, dst, et, fs)
        out.validate()
        return out

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_repos(self) -> int:
        return len(self.repos)

    @property
    def n_nodes(self) -> int:
        return len(self.users) + len(self.repos)

    def __len__(self) -> int:
        return len(self.src)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EdgeList):
            return NotImplemented
        return (
            self.users == other.users
            and self.repos == other.repos
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.etype, other.etype)
            and self.follows == other.follows
        )

    def __repr__(self) -> str:
        nf = "-" if self.follows is None else len(self.follows)
        return f"EdgeList(users={self.n_users}, repos={self.n_repos}, events={len(self)}, follows={nf})"

    def node_ids(self) -> list[NodeId]:
        r = self.n_repos
        return [NodeId(NodeKind.REPO, n, i) for i, n in enumerate(self.repos)] + [
            NodeId(NodeKind.USER, n, r + i) for i, n in enumerate(self.users)
        ]

    def user_node(self, u: int) -> int:
        return self.n_repos + u

    def events(self) -> Iterable[tuple[str, str, EventType]]:
        for s, d, t in zip(self.src, self.dst, self.etype):
            yield self.users[s], self.repos[d], EventType(int(t))

    def replace_events(self, src, dst, etype, follows: FollowSet | None = None) -> "EdgeList":
        """Same node set, new event columns."""
        return EdgeList(self.users, self.repos, src, dst, etype, follows)

    def without_follows(self) -> "EdgeList":
        return EdgeList(self.users, self.repos, self.src, self.dst, self.etype)

    def with_follows(self, follows: FollowSet) -> "EdgeList":
        return EdgeList(self.users, self.repos, self.src, self.dst, self.etype, follows)

    def user_event_counts(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n_users)

    def repo_event_counts(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n_repos)

    def support_pairs(self) -> set[tuple[int, int]]:
        """Distinct ``(user, repo)`` pairs with at least one event."""
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def validate(self) -> None:
        """Raise :class:`DatasetError` unless all edge-list invariants hold."""
        U, R = self.n_users, self.n_repos
        if len(set(self.users)) != U or len(set(self.repos)) != R:
            raise DatasetError("duplicate node names")
        if any(not n for n in self.users + self.repos):
            raise DatasetError("empty node name")
        if len(self):
            if self.src.min() < 0 or self.src.max() >= U or self.dst.min() < 0 or self.dst.max() >= R:
                raise DatasetError("event endpoint outside the node set")
            if self.etype.min() < 0 or self.etype.max() > int(EventType.FORK):
                raise DatasetError("base events must be Push, Watch, PullRequest or Fork")
        if U and np.any(self.user_event_counts() == 0):
            raise DatasetError("isolated user (no non-Follow events)")
        if R and np.any(self.repo_event_counts() == 0):
            raise DatasetError("isolated repo (no events)")
        if self.follows is not None and len(self.follows):
            p = self.follows.pairs
            if p.min() < 0 or p.max() >= U:
                raise DatasetError("follow endpoint outside the user set")
            if self.follows.has_self_pairs():
                raise DatasetError("self-follow")


@dataclass
class ParseStats:
    lines: int = 0
    accepted: int = 0
    filtered: int = 0
    malformed: int = 0
    missing_fields: int = 0
    blank: int = 0

    @property
    def skipped(self) -> int:
        return self.filtered + self.malformed + self.missing_fields


_ARCHIVE_TYPES = {
    "PushEvent": EventType.PUSH,
    "WatchEvent": EventType.WATCH,
    "PullRequestEvent": EventType.PULL_REQUEST,
    "ForkEvent": EventType.FORK,
}


def _archive_endpoints(obj: dict) -> tuple[str, str] | None:
    actor = obj.get("actor")
    login = actor.get("login") if isinstance(actor, dict) else actor
    repo = obj.get("repo")
    name = repo.get("name") if isinstance(repo, dict) else None
    if name is None:
        # pre-2015 timeline envelope: {"repository": {"owner": ..., "name": ...}}
        legacy = obj.get("repository")
        if isinstance(legacy, dict) and legacy.get("owner") and legacy.get("name"):
            name = f"{legacy['owner']}/{legacy['name']}"
    if not isinstance(login, str) or not login or not isinstance(name, str) or not name:
        return None
    return login, name


def parse_gharchive_lines(
    lines: Iterable[str], allow_empty: bool = False
) -> tuple[EdgeList, ParseStats]:
    """Parse GitHub-Archive JSON lines into an :class:`EdgeList`.

    Only Push, Watch, PullRequest and Fork events are kept, in input order;
    FollowEvents and every other type count as ``filtered``. Malformed lines
    and objects without ``actor.login``/``repo.name`` are counted and
    skipped. Raises :class:`EmptyDatasetError` when nothing survives, unless
    ``allow_empty`` is set.
    """
    stats = ParseStats()
    events = []
    for line in lines:
        stats.lines += 1
        if not line.strip():
            stats.blank += 1
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            stats.malformed += 1
            continue
        if not isinstance(obj, dict):
            stats.malformed += 1
            continue
        etype = _ARCHIVE_TYPES.get(obj.get("type"))
        if etype is None:
            stats.filtered += 1
            continue
        ends = _archive_endpoints(obj)
        if ends is None:
            stats.missing_fields += 1
            continue
        events.append((ends[0], ends[1], etype))
        stats.accepted += 1
    if not events and not allow_empty:
        raise EmptyDatasetError(f"no usable events in {stats.lines} lines", stats)
    return EdgeList.from_events(events), stats


CSV_HEADER = ["source_kind", "source_name", "target_kind", "target_name", "event_type"]


def write_edge_list(e: EdgeList) -> str:
    """Serialize to CSV text: base events in order, then follow arcs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for user, repo, t in e.events():
        w.writerow(["User", user, "Repo", repo, t.label])
    if e.follows is not None:
        for a, b in e.follows:
            w.writerow(["User", e.users[a], "User", e.users[b], EventType.FOLLOW.label])
    return buf.getvalue()


def read_edge_list(content: str, with_follows: bool = False) -> EdgeList:
    """Parse CSV text written by :func:`write_edge_list`.

    FollowEvent rows are rejected unless ``with_follows`` is set; when it is,
    the result always carries a (possibly empty) follow set.
    """
    reader = csv.reader(io.StringIO(content))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != CSV_HEADER:
        raise EdgeListFormatError(f"expected header {','.join(CSV_HEADER)}", 1)
    events, follows = [], []
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise EdgeListFormatError(f"expected 5 columns, got {len(row)}", rowno)
        sk, sn, tk, tn, label = row
        try:
            t = EventType.from_label(label)
        except ValueError as exc:
            raise EdgeListFormatError(str(exc), rowno) from None
        if not sn or not tn:
            raise EdgeListFormatError("empty node name", rowno)
        if t is EventType.FOLLOW:
            if not with_follows:
                raise EdgeListFormatError("FollowEvent row but follows were not enabled", rowno)
            if sk != "User" or tk != "User":
                raise EdgeListFormatError("FollowEvent endpoints must both be users", rowno)
            if sn == tn:
                raise EdgeListFormatError("self-follow", rowno)
            follows.append((sn, tn))
        else:
            if sk != "User" or tk != "Repo":
                raise EdgeListFormatError(f"{label} must go from a User to a Repo", rowno)
            events.append((sn, tn, t))
    if not events:
        raise EmptyDatasetError("edge list has no events")
    try:
        return EdgeList.from_events(events, follows if with_follows else None)
    except DatasetError as exc:
        raise EdgeListFormatError(str(exc)) from None


@dataclass(frozen=True)
class EventCounts:
    push: int = 0
    watch: int = 0
    pull_request: int = 0
    fork: int = 0
    follow: int = 0
    users: int = 0
    repos: int = 0

    @property
    def total(self) -> int:
        return self.push + self.watch + self.pull_request + self.fork + self.follow

    @property
    def nonfollow(self) -> int:
        return self.total - self.follow

    def by_type(self) -> dict[str, int]:
        return {
            EventType.FOLLOW.label: self.follow,
            EventType.PUSH.label: self.push,
            EventType.WATCH.label: self.watch,
            EventType.PULL_REQUEST.label: self.pull_request,
            EventType.FORK.label: self.fork,
        }


def summarize(e: EdgeList, follows: FollowSet | None = None) -> EventCounts:
    """Per-type event counts. Follows come from ``follows`` or ``e.follows``."""
    c = np.bincount(e.etype, minlength=4) if len(e) else np.zeros(4, np.int64)
    fs = follows if follows is not None else e.follows
    return EventCounts(
        push=int(c[EventType.PUSH]),
        watch=int(c[EventType.WATCH]),
        pull_request=int(c[EventType.PULL_REQUEST]),
        fork=int(c[EventType.FORK]),
        follow=0 if fs is None else len(fs),
        users=e.n_users,
        repos=e.n_repos,
    )


# Table-1 shares of the four base types in the reference community.
DEFAULT_TYPE_WEIGHTS = (4234, 1206, 852, 450)


def synthetic_community(
    n_users: int,
    n_repos: int,
    n_events: int,
    seed: int = 0,
    type_weights: tuple[float, ...] = DEFAULT_TYPE_WEIGHTS,
    popularity_exponent: float = 1.2,
) -> EdgeList:
    """A small, skewed user x repo community for tests and demos.

    Every user and repo gets at least one event; the remaining events pick
    users and repos with Zipf-like popularity, and event types follow
    ``type_weights``. Deterministic in ``seed``.
    """
    if n_events < max(n_users, n_repos):
        raise ValueError("need at least max(n_users, n_repos) events to avoid isolated nodes")
    rng = np.random.default_rng(seed)
    pu = 1.0 / np.arange(1, n_users + 1) ** popularity_exponent
    pr = 1.0 / np.arange(1, n_repos + 1) ** popularity_exponent
    pt = np.asarray(type_weights, float)
    pu, pr, pt = pu / pu.sum(), pr / pr.sum(), pt / pt.sum()
    users = [f"user{i:04d}" for i in range(n_users)]
    repos = [f"org{i % 3}/repo{i:03d}" for i in range(n_repos)]
    src = list(rng.permutation(n_users))
    dst = list(rng.permutation(n_repos))
    k = max(n_users, n_repos)
    src += list(rng.choice(n_users, size=k - n_users, p=pu))
    dst += list(rng.choice(n_repos, size=k - n_repos, p=pr))
    rest = n_events - k
    src += list(rng.choice(n_users, size=rest, p=pu))
    dst += list(rng.choice(n_repos, size=rest, p=pr))
    et = rng.choice(4, size=n_events, p=pt)
    events = [(users[s], repos[d], EventType(int(t))) for s, d, t in zip(src, dst, et)]
    return EdgeList.from_events(events)
