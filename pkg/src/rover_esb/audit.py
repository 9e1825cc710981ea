"""Append-only audit trail of pipeline steps, with live fan-out.

Each request leaves an ordered trace: RECEIVED through DELIVERED on the
happy path, or a prefix of that order terminated by FAULTED.  Records
live in a bounded in-memory ring (observability, not durability) with
an optional JSONL file sink, and are pushed to subscribers as they are
appended (feeding the management event stream).
"""

from __future__ import annotations

import json
import threading
import time
from collections import deque
from dataclasses import asdict, dataclass

PIPELINE_STEPS = (
    "RECEIVED",
    "VALIDATED",
    "RESOLVED",
    "TRANSLATED",
    "ROUTED",
    "EXECUTED",
    "RESPONSE_TRANSLATED",
    "DELIVERED",
    "FAULTED",
)

HAPPY_PATH = PIPELINE_STEPS[:-1]


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    message_id: str
    step: str
    detail: str
    at: float

    def to_json(self) -> dict:
        return asdict(self)


class AuditLog:
    def __init__(self, capacity: int = 10_000, sink_path=None, on_record=None):
        self._lock = threading.Lock()
        self._ring: deque[AuditRecord] = deque(maxlen=capacity)
        self._next_seq = 1
        self._sink = open(sink_path, "a", encoding="utf-8") if sink_path else None
        self._on_record = on_record

    def append(self, message_id: str, step: str, detail: str = "") -> AuditRecord:
        if step not in PIPELINE_STEPS:
            raise ValueError(f"unknown audit step {step!r}")
        with self._lock:
            record = AuditRecord(self._next_seq, message_id, step, detail, time.time())
            self._next_seq += 1
            self._ring.append(record)
            if self._sink is not None:
                self._sink.write(json.dumps(record.to_json()) + "\n")
                self._sink.flush()
        if self._on_record is not None:
            self._on_record(record)
        return record

    def read(self, after: int = 0) -> list[AuditRecord]:
        with self._lock:
            return [r for r in self._ring if r.seq > after]

    def trace(self, message_id: str) -> list[AuditRecord]:
        with self._lock:
            return [r for r in self._ring if r.message_id == message_id]

    def close(self) -> None:
        if self._sink is not None:
            self._sink.close()


class Recorder:
    """Per-message audit helper bound to one message_id."""

    def __init__(self, log: AuditLog, message_id: str):
        self.log = log
        self.message_id = message_id

    def step(self, step: str, detail: str = "") -> None:
        self.log.append(self.message_id, step, detail)
