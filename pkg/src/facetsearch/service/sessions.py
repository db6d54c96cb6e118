"""Crash-safe session state via append-only event logs.

Each session is one JSONL file; every mutation appends one event and the
full state is rebuilt by replay on first access after a restart. Replay
is exact: the intent spec round-trips through its canonical JSON, and
SVG versions/vault entries are stored verbatim.
"""

from __future__ import annotations

import datetime as _dt
import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from facetsearch.core import CoreError, IntentSpec

SESSION_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


class UnknownRecordIdError(CoreError):
    pass


class CommitCapExceededError(CoreError):
    pass


class NotCommittedError(CoreError):
    pass


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


@dataclass
class SvgVersion:
    version: int
    created_at: str
    svg: str


@dataclass
class SvgState:
    vault_entries: dict[str, str] = field(default_factory=dict)
    versions: list[SvgVersion] = field(default_factory=list)


@dataclass
class Session:
    session_id: str
    current_spec: IntentSpec | None = None
    committed: list[str] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)
    svg: dict[str, SvgState] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def svg_state(self, record_id: str) -> SvgState:
        return self.svg.setdefault(record_id, SvgState())


class SessionStore:
    """Directory of per-session append-only logs."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.jsonl"

    def get(self, session_id: str) -> Session:
        if not SESSION_ID_RE.match(session_id):
            raise CoreError(
                "session ids are 1-64 characters of [A-Za-z0-9_-]"
            )
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                session = self._replay(session_id)
                self._sessions[session_id] = session
            return session

    def _replay(self, session_id: str) -> Session:
        session = Session(session_id=session_id)
        path = self._path(session_id)
        if not path.exists():
            return session
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                self._apply(session, event)
        return session

    @staticmethod
    def _apply(session: Session, event: dict) -> None:
        kind = event.get("event")
        if kind == "spec":
            session.current_spec = IntentSpec.from_dict(event["spec"])
        elif kind == "search":
            session.history.append(
                {
                    "spec": event["spec"],
                    "top_ids": list(event["top_ids"]),
                    "ts": event.get("ts"),
                }
            )
        elif kind == "commit_add":
            rid = event["record_id"]
            if rid not in session.committed:
                session.committed.append(rid)
        elif kind == "commit_remove":
            rid = event["record_id"]
            if rid in session.committed:
                session.committed.remove(rid)
        elif kind == "svg_vault":
            state = session.svg_state(event["record_id"])
            state.vault_entries[event["token"]] = event["payload"]
        elif kind == "svg_version":
            state = session.svg_state(event["record_id"])
            state.versions.append(
                SvgVersion(
                    version=int(event["version"]),
                    created_at=event.get("ts", ""),
                    svg=event["svg"],
                )
            )
        # unknown events are skipped so old logs stay readable

    def append(self, session_id: str, event: dict) -> None:
        event = dict(event)
        event.setdefault("ts", _now())
        with self._path(session_id).open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            fh.flush()

    # --- mutation helpers (event + in-memory state together) ---

    def set_spec(self, session: Session, spec: IntentSpec) -> None:
        session.current_spec = spec
        self.append(session.session_id, {"event": "spec", "spec": spec.to_dict()})

    def add_history(self, session: Session, spec: IntentSpec, top_ids: list[str]) -> None:
        ts = _now()
        session.history.append({"spec": spec.to_dict(), "top_ids": top_ids, "ts": ts})
        self.append(
            session.session_id,
            {"event": "search", "spec": spec.to_dict(), "top_ids": top_ids, "ts": ts},
        )

    def commit(self, session: Session, record_ids: list[str], cap: int) -> list[str]:
        added = [r for r in record_ids if r not in session.committed]
        if len(session.committed) + len(added) > cap:
            raise CommitCapExceededError(
                f"commit cap is {cap}; {len(session.committed)} committed already"
            )
        for rid in added:
            session.committed.append(rid)
            self.append(session.session_id, {"event": "commit_add", "record_id": rid})
        return list(session.committed)

    def uncommit(self, session: Session, record_id: str) -> list[str]:
        if record_id in session.committed:
            session.committed.remove(record_id)
            self.append(
                session.session_id, {"event": "commit_remove", "record_id": record_id}
            )
        return list(session.committed)

    def add_vault_entries(
        self, session: Session, record_id: str, entries: dict[str, str]
    ) -> None:
        state = session.svg_state(record_id)
        for token, payload in entries.items():
            if token not in state.vault_entries:
                state.vault_entries[token] = payload
                self.append(
                    session.session_id,
                    {
                        "event": "svg_vault",
                        "record_id": record_id,
                        "token": token,
                        "payload": payload,
                    },
                )

    def add_svg_version(self, session: Session, record_id: str, svg: str) -> SvgVersion:
        state = session.svg_state(record_id)
        version = SvgVersion(
            version=len(state.versions) + 1, created_at=_now(), svg=svg
        )
        state.versions.append(version)
        self.append(
            session.session_id,
            {
                "event": "svg_version",
                "record_id": record_id,
                "version": version.version,
                "svg": svg,
                "ts": version.created_at,
            },
        )
        return version
