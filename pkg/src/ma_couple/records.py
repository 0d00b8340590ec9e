"""Run records: the JSON result document and the CSV profile table.

Documents are deterministic: keys are written in a fixed order, floats use
Python's shortest round-trip repr, and wall-clock timestamps are only added
when explicitly requested.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
TOOL_NAME = "ma-couple"
_HEADER_KEYS = ("schema_version", "tool", "tool_version", "command", "input_hash", "spec", "config")


def _clean(x):
    """Map non-finite floats to None (JSON has no NaN) and numpy scalars to Python."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def input_hash(command: str, spec: dict, config: dict) -> str:
    payload = json.dumps({"command": command, "spec": spec, "config": config}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class RunRecord:
    command: str
    spec: dict
    config: dict
    result: dict
    tool_version: str = ""
    input_hash: str = ""
    timestamps: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if not self.tool_version:
            from . import __version__

            self.tool_version = __version__
        if not self.input_hash:
            self.input_hash = input_hash(self.command, self.spec, self.config)
        self.spec = _clean(self.spec)
        self.config = _clean(self.config)
        self.result = _clean(self.result)

    def to_document(self) -> dict:
        doc = {
            "schema_version": self.schema_version,
            "tool": TOOL_NAME,
            "tool_version": self.tool_version,
            "command": self.command,
            "input_hash": self.input_hash,
            "spec": self.spec,
            "config": self.config,
        }
        doc.update(self.result)
        if self.timestamps is not None:
            doc["timestamps"] = self.timestamps
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "RunRecord":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
        result = {k: v for k, v in doc.items() if k not in _HEADER_KEYS + ("timestamps",)}
        return cls(doc["command"], doc["spec"], doc["config"], result, doc["tool_version"],
                   doc["input_hash"], doc.get("timestamps"), doc["schema_version"])

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2, allow_nan=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "RunRecord":
        return cls.from_document(json.loads(text))

    @classmethod
    def load(cls, path) -> "RunRecord":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def fmt(x: float) -> str:
    """17 significant digits, '.' separator, independent of locale."""
    x = float(x)
    if x == 0.0:
        x = 0.0  # drop the sign of -0.0
    return format(x, ".17g")


def profile_csv(t, v1, v2) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "v1", "v2", "u1", "u2"])
    for row in zip(t, v1, v2):
        ti, a, b = (float(x) for x in row)
        w.writerow([fmt(ti), fmt(a), fmt(b), fmt(0.0 - a), fmt(0.0 - b)])
    return buf.getvalue()


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()
