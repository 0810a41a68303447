"""Machine-readable report envelopes with deterministic digests.

Payloads are canonicalized to plain JSON types (complex numbers become
{"re": ..., "im": ...} objects, arrays become lists) and serialized with
sorted keys, so identical inputs always produce identical bytes and the
inputs digest is stable across runs and platforms.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DomainError

__all__ = ["SCHEMA_VERSION", "ReportEnvelope", "canonicalize", "digest", "make_envelope"]

SCHEMA_VERSION = "1"


def canonicalize(obj: Any) -> Any:
    """Reduce common numeric containers to plain JSON-serializable types."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise DomainError(f"cannot serialize non-finite float {obj!r}")
        return obj
    if isinstance(obj, complex):
        return {"re": canonicalize(obj.real), "im": canonicalize(obj.imag)}
    if isinstance(obj, np.ndarray):
        return [canonicalize(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return canonicalize(obj.item())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: canonicalize(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        out = {}
        for key, value in obj.items():
            if not isinstance(key, str):
                raise DomainError(f"payload keys must be strings, got {key!r}")
            out[key] = canonicalize(value)
        return out
    if isinstance(obj, (list, tuple)):
        return [canonicalize(v) for v in obj]
    raise DomainError(f"cannot serialize object of type {type(obj).__name__}")


def digest(material: Any) -> str:
    """sha256 over the canonical compact JSON encoding of material."""
    text = json.dumps(canonicalize(material), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ReportEnvelope:
    """Versioned wrapper around one command's machine-readable payload."""

    schema_version: str
    command: str
    inputs_digest: str
    payload: dict

    def to_json(self, indent: int | None = 2) -> str:
        body = {
            "schema_version": self.schema_version,
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "payload": canonicalize(self.payload),
        }
        return json.dumps(body, sort_keys=True, indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ReportEnvelope":
        body = json.loads(text)
        try:
            return cls(schema_version=body["schema_version"], command=body["command"],
                       inputs_digest=body["inputs_digest"], payload=body["payload"])
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed report envelope: {exc}") from exc


def make_envelope(command: str, inputs: Any, payload: Any) -> ReportEnvelope:
    """Build an envelope; the digest covers the command and its inputs only.

    Run-dependent payload fields (runtimes in particular) deliberately do not
    feed the digest, so reruns of the same invocation share it.
    """
    return ReportEnvelope(
        schema_version=SCHEMA_VERSION,
        command=command,
        inputs_digest=digest({"command": command, "inputs": inputs}),
        payload=canonicalize(payload),
    )
