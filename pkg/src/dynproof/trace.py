"""Append-only transition trace.

One record per state transition, line-delimited JSON with a fixed field
set, byte-identical across runs with the same seed. The sha256 of the
serialized log is the determinism fingerprint used by tests and reports.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterator

TRACE_FIELDS = ("seq", "ts", "kind", "commitment", "step", "sign_offs", "required", "status")


class TraceLog:
    def __init__(self):
        self.records: list[dict] = []

    def append(
        self,
        kind: str,
        ts: int,
        commitment: int | None = None,
        step: int | None = None,
        sign_offs: int | None = None,
        required: int | None = None,
        status: str | None = None,
    ) -> int:
        seq = len(self.records)
        self.records.append(
            {
                "seq": seq,
                "ts": ts,
                "kind": kind,
                "commitment": commitment,
                "step": step,
                "sign_offs": sign_offs,
                "required": required,
                "status": status,
            }
        )
        return seq

    def __len__(self) -> int:
        return len(self.records)

    def lines(self) -> Iterator[str]:
        for record in self.records:
            yield json.dumps(record, sort_keys=True, separators=(",", ":"))

    def serialize(self) -> bytes:
        return ("\n".join(self.lines()) + "\n").encode() if self.records else b""

    def digest(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()

    def write(self, path: str | Path) -> None:
        Path(path).write_bytes(self.serialize())
