"""Thin GitLab REST (v4) backend for :func:`forgefuzz.replay.replay`.

Requires an administrator token: users are created through the admin API and
actions are performed on their behalf with the ``Sudo`` header. Only request
latency is measured; CPU and memory are not observable from the client.
"""
from __future__ import annotations

import time
from urllib.parse import quote

import requests

from .simforge import (
    FollowLimitError,
    ForbiddenError,
    ForgeError,
    ForgeUnavailableError,
    InvalidArgumentError,
    InvalidTransitionError,
    MergeError,
    RequestRecord,
    UnknownEntityError,
)

_STATUS_ERRORS = {
    400: InvalidArgumentError,
    403: ForbiddenError,
    404: UnknownEntityError,
    405: MergeError,
    409: InvalidTransitionError,
    422: InvalidArgumentError,
}

_MR_STATE = {"opened": "open", "closed": "closed", "merged": "merged", "locked": "closed"}


class HttpForge:
    """ForgeClient over the GitLab API; pull-request ids are ``(project path, iid)``."""

    def __init__(self, base_url: str, token: str, session=None, timeout: float = 30.0,
                 default_branch: str = "main", password: str = "forgefuzz-Passw0rd!"):
        self.api = base_url.rstrip("/") + "/api/v4"
        self.session = session or requests.Session()
        self.session.headers.update({"PRIVATE-TOKEN": token})
        self.timeout = timeout
        self.default_branch = default_branch
        self.password = password
        self.log: list[RequestRecord] = []
        self._user_ids: dict[str, int] = {}

    # -- transport

    def _request(self, method: str, path: str, actor: str | None = None, op: str | None = None,
                 ok=(200, 201, 204), **kw):
        headers = {"Sudo": actor} if actor else {}
        t0 = time.perf_counter()
        try:
            resp = self.session.request(method, self.api + path, headers=headers, timeout=self.timeout, **kw)
        except requests.RequestException as exc:
            raise ForgeUnavailableError(str(exc)) from None
        latency = time.perf_counter() - t0
        outcome = "ok"
        err = None
        if resp.status_code not in ok:
            if resp.status_code >= 500:
                err = ForgeUnavailableError(f"{method} {path}: HTTP {resp.status_code}")
            elif op == "follow" and resp.status_code == 304:
                err = FollowLimitError(f"{actor}: follow refused (HTTP 304)")
            else:
                err = _STATUS_ERRORS.get(resp.status_code, ForgeError)(f"{method} {path}: HTTP {resp.status_code}")
            outcome = err.code
        if op is not None:
            rec = RequestRecord(len(self.log), actor or "", op, 0.0, 0.0, latency, outcome, t0)
            self.log.append(rec)
            if err is not None:
                err.sample = rec
        if err is not None:
            raise err
        return resp.json() if resp.content and resp.status_code != 204 else None

    @staticmethod
    def _proj(name: str) -> str:
        return quote(name, safe="")

    def _user_id(self, name: str) -> int:
        if name not in self._user_ids:
            found = self._request("GET", "/users", params={"username": name})
            if not found:
                raise UnknownEntityError(f"no user {name!r}")
            self._user_ids[name] = found[0]["id"]
        return self._user_ids[name]

    # -- lookups

    def user_exists(self, name: str) -> bool:
        try:
            self._user_id(name)
        except UnknownEntityError:
            return False
        return True

    def repo_exists(self, name: str) -> bool:
        try:
            self._request("GET", f"/projects/{self._proj(name)}")
        except UnknownEntityError:
            return False
        return True

    def _mrs(self, repo: str, branch: str, state: str | None = None):
        params = {"source_branch": branch, "order_by": "created_at", "sort": "desc"}
        if state:
            params["state"] = state
        return self._request("GET", f"/projects/{self._proj(repo)}/merge_requests", params=params) or []

    def find_open_pr(self, repo: str, branch: str):
        mrs = self._mrs(repo, branch, "opened")
        return (repo, mrs[0]["iid"]) if mrs else None

    def latest_pr(self, repo: str, branch: str):
        mrs = self._mrs(repo, branch)
        if not mrs:
            return None
        return (repo, mrs[0]["iid"]), _MR_STATE.get(mrs[0]["state"], mrs[0]["state"])

    # -- mutations

    def create_user(self, name: str, actor: str | None = None) -> None:
        body = {"username": name, "name": name, "email": f"{name}@forgefuzz.invalid",
                "password": self.password, "skip_confirmation": True}
        try:
            user = self._request("POST", "/users", op="create_user", json=body)
        except InvalidTransitionError:  # 409: already taken
            return
        self._user_ids[name] = user["id"]

    def create_repo(self, actor: str, name: str) -> None:
        namespace, _, path = name.rpartition("/")
        owner = namespace or actor
        if not self.user_exists(owner):
            self.create_user(owner, actor)
        try:
            self._request("POST", f"/projects/user/{self._user_id(owner)}", op="create_repo",
                          json={"name": path, "path": path, "initialize_with_readme": True,
                                "default_branch": self.default_branch})
        except InvalidArgumentError:  # 400: path already taken
            pass

    def star(self, user: str, repo: str) -> None:
        self._request("POST", f"/projects/{self._proj(repo)}/star", user, "star", ok=(200, 201, 304))

    def fork(self, user: str, repo: str) -> str:
        try:
            out = self._request("POST", f"/projects/{self._proj(repo)}/fork", user, "fork")
        except InvalidTransitionError:
            return f"{user}/{repo.rsplit('/', 1)[-1]}"
        return out["path_with_namespace"]

    def ensure_member(self, user: str, repo: str) -> None:
        try:
            self._request("POST", f"/projects/{self._proj(repo)}/members", op="ensure_member",
                          json={"user_id": self._user_id(user), "access_level": 30})
        except InvalidTransitionError:  # already a member
            pass

    def push(self, user: str, repo: str, branch: str, text: str) -> tuple[int, int]:
        base = {"branch": branch, "commit_message": f"update by {user}",
                "actions": [{"action": "update", "file_path": "CHANGES.txt", "content": text}]}
        if branch != self.default_branch:
            base["start_branch"] = self.default_branch
        path = f"/projects/{self._proj(repo)}/repository/commits"
        try:
            out = self._request("POST", path, user, "push", json=base)
        except InvalidArgumentError:
            base["actions"][0]["action"] = "create"
            out = self._request("POST", path, user, "push", json=base)
        stats = (out or {}).get("stats", {})
        return int(stats.get("additions", 0)), int(stats.get("deletions", 0))

    def open_pr(self, user: str, repo: str, branch: str, text: str = ""):
        out = self._request("POST", f"/projects/{self._proj(repo)}/merge_requests", user, "open_pr",
                            json={"source_branch": branch, "target_branch": self.default_branch,
                                  "title": f"{branch}: {text.splitlines()[0] if text else 'update'}"[:200],
                                  "description": text})
        return repo, out["iid"]

    def merge_pr(self, user: str, pr_id) -> None:
        repo, iid = pr_id
        self._request("PUT", f"/projects/{self._proj(repo)}/merge_requests/{iid}/merge", user, "merge_pr")

    def _set_state(self, user, pr_id, event, op):
        repo, iid = pr_id
        self._request("PUT", f"/projects/{self._proj(repo)}/merge_requests/{iid}", user, op,
                      json={"state_event": event})

    def close_pr(self, user: str, pr_id) -> None:
        self._set_state(user, pr_id, "close", "close_pr")

    def reopen_pr(self, user: str, pr_id) -> None:
        self._set_state(user, pr_id, "reopen", "reopen_pr")

    def follow(self, user: str, target: str) -> None:
        # GitLab answers 304 both for an existing follow and for the followee cap
        self._request("POST", f"/users/{self._user_id(target)}/follow", user, "follow", ok=(200, 201))
