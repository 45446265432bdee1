"""Replay edge lists event by event against a :class:`~forgefuzz.simforge.ForgeClient`.

Every event first makes sure its source user exists, then its target (repo
or, for follows, user), then performs the action. Backend errors are recorded
on the event's outcome and never stop the run.
"""
from __future__ import annotations

import csv
import io
import json
import re
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .dataset import EdgeList, EventType
from .followgraph import build_count_matrix, derive_follows
from .simforge import ForgeClient, ForgeError, ForgeUnavailableError, MergeError


class CommitCorpus:
    """Text snippets used as commit and pull-request content."""

    def __init__(self, snippets):
        self.snippets = [s for s in snippets if s]
        if not self.snippets:
            raise ValueError("commit corpus is empty")

    def __len__(self) -> int:
        return len(self.snippets)

    def sample(self, rng: np.random.Generator) -> str:
        return self.snippets[int(rng.integers(len(self.snippets)))]

    @classmethod
    def from_text(cls, text: str) -> "CommitCorpus":
        """Blank-line separated snippets."""
        return cls(p.strip() for p in re.split(r"\n\s*\n", text))

    @classmethod
    def from_edge_list(cls, e: EdgeList, lines_per_snippet: int = 4, size: int = 64, seed: int = 0) -> "CommitCorpus":
        """Snippets assembled from the words in the dataset's node names."""
        words = sorted({w for n in e.users + e.repos for w in re.split(r"[^0-9A-Za-z]+", n) if w})
        if not words:
            words = ["change"]
        rng = np.random.default_rng(seed)
        snippets = []
        for _ in range(size):
            lines = [" ".join(rng.choice(words, size=int(rng.integers(2, 7)))) for _ in range(lines_per_snippet)]
            snippets.append("\n".join(lines))
        return cls(snippets)


@dataclass(frozen=True)
class ReplayEvent:
    source: str
    target: str
    etype: EventType


@dataclass(frozen=True)
class EventOutcome:
    index: int
    event: ReplayEvent
    applied: bool
    error: str = ""
    http_status: int = 0
    detail: str = ""


@dataclass
class ReplayState:
    """Workflow bookkeeping that is not forge state: PR branch counters."""

    pr_round: Counter = field(default_factory=Counter)

    def pr_branch(self, user: str, repo: str) -> str:
        return f"{user}-pr{self.pr_round[(user, repo)]}"


def _ensure_user(forge: ForgeClient, name: str, actor: str) -> None:
    if not forge.user_exists(name):
        forge.create_user(name, actor=actor)


def _pull_request(ev: ReplayEvent, forge: ForgeClient, corpus: CommitCorpus, rng, state: ReplayState) -> str:
    user, repo = ev.source, ev.target
    branch = state.pr_branch(user, repo)
    open_id = forge.find_open_pr(repo, branch)
    if open_id is not None:
        try:
            forge.merge_pr(user, open_id)
        except MergeError:
            forge.close_pr(user, open_id)
            return "closed"
        state.pr_round[(user, repo)] += 1
        return "merged"
    latest = forge.latest_pr(repo, branch)
    forge.ensure_member(user, repo)
    forge.push(user, repo, branch, corpus.sample(rng))
    if latest is not None and latest[1] == "closed":
        forge.reopen_pr(user, latest[0])
        return "reopened"
    forge.open_pr(user, repo, branch, corpus.sample(rng))
    return "opened"


def process_event(
    ev: ReplayEvent,
    forge: ForgeClient,
    corpus: CommitCorpus,
    rng: np.random.Generator,
    state: ReplayState | None = None,
    index: int = 0,
) -> EventOutcome:
    """Run one event through the workflow and report what happened.

    Pull requests use the branch ``<user>-pr<k>`` for their (user, repo):
    an open PR there is merged (and ``k`` advances); a merge that fails
    closes it; a closed PR gets fresh content and is reopened; otherwise
    content is pushed and a new PR opened.
    """
    state = state if state is not None else ReplayState()
    detail = ""
    try:
        _ensure_user(forge, ev.source, ev.source)
        if ev.etype is EventType.FOLLOW:
            _ensure_user(forge, ev.target, ev.source)
            forge.follow(ev.source, ev.target)
        else:
            if not forge.repo_exists(ev.target):
                forge.create_repo(ev.source, ev.target)
            if ev.etype is EventType.WATCH:
                forge.star(ev.source, ev.target)
            elif ev.etype is EventType.FORK:
                forge.fork(ev.source, ev.target)
            elif ev.etype is EventType.PUSH:
                forge.ensure_member(ev.source, ev.target)
                forge.push(ev.source, ev.target, ev.source, corpus.sample(rng))
            else:
                detail = _pull_request(ev, forge, corpus, rng, state)
    except ForgeError as exc:
        return EventOutcome(index, ev, False, exc.code, exc.http_status, str(exc))
    return EventOutcome(index, ev, True, detail=detail)


@dataclass
class ReplayReport:
    outcomes: list
    error_tally: Counter
    duration_s: float
    per_user: dict = field(default_factory=dict)

    @property
    def applied(self) -> int:
        return sum(o.applied for o in self.outcomes)

    @property
    def skipped(self) -> int:
        return len(self.outcomes) - self.applied

    def to_json(self, include_timing: bool = False) -> str:
        doc = {
            "events": len(self.outcomes),
            "applied": self.applied,
            "skipped": self.skipped,
            "errors": dict(sorted(self.error_tally.items())),
            "per_user": {
                u: {"requests": m.requests, "cpu": m.cpu, "mem": m.mem, "latency": m.latency}
                for u, m in self.per_user.items()
            },
        }
        if include_timing:
            doc["duration_s"] = self.duration_s
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def outcomes_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "source", "target", "event_type", "outcome", "error", "http_status", "detail"])
        for o in self.outcomes:
            w.writerow([o.index, o.event.source, o.event.target, o.event.etype.label,
                        "applied" if o.applied else "skipped", o.error, o.http_status or "", o.detail])
        return buf.getvalue()


def replay_events(e: EdgeList, include_follows: bool = True) -> list[ReplayEvent]:
    """Base events in list order, then follow arcs.

    Follows come from ``e.follows`` when present, otherwise they are derived.
    """
    out = [ReplayEvent(u, r, t) for u, r, t in e.events()]
    if include_follows:
        fs = e.follows if e.follows is not None else derive_follows(build_count_matrix(e))
        out += [ReplayEvent(e.users[a], e.users[b], EventType.FOLLOW) for a, b in fs]
    return out


def replay(
    e: EdgeList,
    forge: ForgeClient,
    corpus: CommitCorpus,
    order: str = "listed",
    seed: int = 0,
    include_follows: bool = True,
    retries: int = 2,
    retry_wait: float = 0.0,
) -> ReplayReport:
    """Replay a dataset; ``order="shuffle"`` interleaves all events with a seeded permutation.

    Events hitting :class:`ForgeUnavailableError` are retried ``retries``
    times before being recorded as skipped.
    """
    if order not in ("listed", "shuffle"):
        raise ValueError(f"unknown order {order!r}")
    events = replay_events(e, include_follows)
    rng = np.random.default_rng(seed)
    if order == "shuffle":
        events = [events[i] for i in rng.permutation(len(events))]
    state = ReplayState()
    outcomes, tally = [], Counter()
    t0 = time.perf_counter()
    for i, ev in enumerate(events):
        for attempt in range(retries + 1):
            out = process_event(ev, forge, corpus, rng, state, i)
            if out.error != ForgeUnavailableError.code or attempt == retries:
                break
            if retry_wait:
                time.sleep(retry_wait * 2**attempt)
        outcomes.append(out)
        if not out.applied:
            tally[out.error] += 1
    duration = time.perf_counter() - t0
    per_user = forge.snapshot_metrics().per_user if hasattr(forge, "snapshot_metrics") else {}
    return ReplayReport(outcomes, tally, duration, per_user)
