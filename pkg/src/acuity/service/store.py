"""Durable session event logs: one append-only JSON-lines file per session.

Replaying a file reproduces the session exactly (updates are deterministic
given the logged seed and responses), so this is the whole persistence
story; there is no database.
"""

from __future__ import annotations

import json
import os
from pathlib import Path


class SessionStore:
    def __init__(self, data_dir):
        self.root = Path(data_dir)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        if not session_id.replace("-", "").isalnum():
            raise ValueError(f"suspicious session id {session_id!r}")
        return self.root / f"{session_id}.jsonl"

    def append(self, session_id: str, event: dict) -> None:
        line = json.dumps(event, separators=(",", ":"), sort_keys=True)
        with open(self._path(session_id), "a") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def read(self, session_id: str) -> tuple[list[dict], bool]:
        """Events plus a truncation flag.

        A corrupt or half-written final line is dropped (the session
        restores to the last valid event); corruption mid-file stops the
        replay at the last good prefix as well.
        """
        path = self._path(session_id)
        events: list[dict] = []
        truncated = False
        with open(path) as fh:
            for line in fh:
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError:
                    truncated = True
                    break
        return events, truncated

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))
