"""Protocol-neutral message core: envelopes, typed parameters, fault codes.

Everything that crosses a wire in this system is one of two envelopes
(request or response) carrying an ordered list of typed parameters.  The
wire grammars in :mod:`rover_esb.wire` render and parse these envelopes;
this module owns the value domain and its invariants.

Parameter kinds and their canonical text forms:

    int    decimal integer text                 "42", "-7"
    float  shortest round-trip decimal, with a  "11.332", "5" (for 5.0),
           trailing ".0" stripped               "1e+100"
    bool   "true" / "false"
    text   unicode, excluding C0 controls other than \\t and \\n
           (XML 1.0 cannot carry the rest, and \\r does not survive
           XML parsing); lone surrogates rejected (not UTF-8 encodable)
    bytes  base64, standard alphabet, padded

Floats must be finite; the textual forms round-trip bit-exactly for
every finite 64-bit float.
"""

from __future__ import annotations

import base64
import math
import re
import uuid
from dataclasses import dataclass, replace
from enum import Enum

__all__ = [
    "FaultCode",
    "EsbFault",
    "ProtocolKind",
    "ParamValue",
    "FaultInfo",
    "RequestEnvelope",
    "ResponseEnvelope",
    "ProtocolMessage",
    "render_value",
    "parse_value",
    "render_float",
    "new_message_id",
]

IDENTIFIER_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

KINDS = ("int", "float", "bool", "text", "bytes")

# C0 controls that XML 1.0 cannot represent (plus \r, which XML parsers
# normalize away); tab and newline are allowed.
_BAD_TEXT_RE = re.compile(r"[\x00-\x08\x0b-\x1f]")


class FaultCode(str, Enum):
    """Closed set of error codes carried by fault envelopes."""

    AUTH_FAILED = "AUTH_FAILED"
    UNKNOWN_SERVICE = "UNKNOWN_SERVICE"
    UNKNOWN_OPERATION = "UNKNOWN_OPERATION"
    VALIDATION = "VALIDATION"
    TYPE_MISMATCH = "TYPE_MISMATCH"
    SERVICE_DOWN = "SERVICE_DOWN"
    TIMEOUT = "TIMEOUT"
    TRANSLATION = "TRANSLATION"
    INTERNAL = "INTERNAL"


class EsbFault(Exception):
    """A pipeline failure that maps onto a fault envelope."""

    def __init__(self, code: FaultCode, detail: str):
        super().__init__(f"{code.value}: {detail}")
        self.code = code
        self.detail = detail


class ProtocolKind(str, Enum):
    SOAP = "SOAP"
    REST = "REST"
    SOCKET = "SOCKET"


def new_message_id() -> str:
    return str(uuid.uuid4())


def render_float(x: float) -> str:
    """Shortest round-trip decimal text; integral values drop the '.0'."""
    s = repr(float(x))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _check_text(value: str) -> str:
    if _BAD_TEXT_RE.search(value):
        raise ValueError("text value contains control characters XML cannot carry")
    try:
        value.encode("utf-8")
    except UnicodeEncodeError:
        raise ValueError("text value contains lone surrogates") from None
    return value


def render_value(kind: str, value) -> str:
    """Canonical text form of a typed value (used by the textual grammars)."""
    if kind == "int":
        return str(value)
    if kind == "float":
        return render_float(value)
    if kind == "bool":
        return "true" if value else "false"
    if kind == "text":
        return value
    if kind == "bytes":
        return base64.b64encode(value).decode("ascii")
    raise ValueError(f"unknown kind {kind!r}")


def parse_value(kind: str, text: str):
    """Inverse of render_value; raises ValueError on malformed text."""
    if kind == "int":
        if not re.fullmatch(r"[+-]?[0-9]+", text):
            raise ValueError(f"not an int literal: {text!r}")
        return int(text)
    if kind == "float":
        try:
            v = float(text)
        except ValueError:
            raise ValueError(f"not a float literal: {text!r}") from None
        if not math.isfinite(v):
            raise ValueError(f"non-finite float: {text!r}")
        return v
    if kind == "bool":
        if text == "true":
            return True
        if text == "false":
            return False
        raise ValueError(f"not a bool literal: {text!r}")
    if kind == "text":
        return _check_text(text)
    if kind == "bytes":
        try:
            return base64.b64decode(text.encode("ascii"), validate=True)
        except Exception:
            raise ValueError("not valid base64") from None
    raise ValueError(f"unknown kind {kind!r}")


@dataclass(frozen=True)
class ParamValue:
    """One named, typed value of a request's params or a response's results."""

    name: str
    kind: str
    value: object

    def __post_init__(self):
        if not IDENTIFIER_RE.match(self.name):
            raise ValueError(f"invalid param name {self.name!r}")
        if self.kind not in KINDS:
            raise ValueError(f"invalid kind {self.kind!r}")
        v = self.value
        ok = {
            "int": lambda: isinstance(v, int) and not isinstance(v, bool),
            "float": lambda: isinstance(v, float) and math.isfinite(v),
            "bool": lambda: isinstance(v, bool),
            "text": lambda: isinstance(v, str),
            "bytes": lambda: isinstance(v, (bytes, bytearray)),
        }[self.kind]()
        if not ok:
            raise ValueError(f"kind/value disagree for {self.name}: {self.kind} vs {type(v).__name__}")
        if self.kind == "text":
            _check_text(v)
        if self.kind == "bytes" and isinstance(v, bytearray):
            object.__setattr__(self, "value", bytes(v))

    @classmethod
    def of(cls, name: str, value) -> "ParamValue":
        """Build from a native python value, inferring the kind."""
        if isinstance(value, bool):
            return cls(name, "bool", value)
        if isinstance(value, int):
            return cls(name, "int", value)
        if isinstance(value, float):
            return cls(name, "float", value)
        if isinstance(value, str):
            return cls(name, "text", value)
        if isinstance(value, (bytes, bytearray)):
            return cls(name, "bytes", bytes(value))
        raise ValueError(f"no param kind for {type(value).__name__}")

    def text(self) -> str:
        return render_value(self.kind, self.value)


@dataclass(frozen=True)
class FaultInfo:
    code: FaultCode
    detail: str

    def __post_init__(self):
        if not isinstance(self.code, FaultCode):
            object.__setattr__(self, "code", FaultCode(self.code))


@dataclass(frozen=True)
class RequestEnvelope:
    """Canonical request: who asks whom to run what, with which arguments.

    ``session`` may be None only before a session exists (bind, discovery).
    ``destination`` is advisory from the caller's side; the bus resolves the
    true owner by operation name and cross-checks when destination is set.
    """

    message_id: str
    source: str
    destination: str
    operation: str
    params: tuple[ParamValue, ...] = ()
    session: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))

    def check(self) -> None:
        """Raise EsbFault(VALIDATION) when a structural invariant is broken."""
        if not self.destination:
            raise EsbFault(FaultCode.VALIDATION, "destination is empty")
        if not self.operation:
            raise EsbFault(FaultCode.VALIDATION, "operation is empty")

    def param(self, name: str) -> ParamValue | None:
        for p in self.params:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class ResponseEnvelope:
    """Canonical response, correlated to its request by correlation_id."""

    message_id: str
    correlation_id: str
    status: str  # "OK" | "FAULT"
    results: tuple[ParamValue, ...] = ()
    fault: FaultInfo | None = None

    def __post_init__(self):
        object.__setattr__(self, "results", tuple(self.results))
        if self.status not in ("OK", "FAULT"):
            raise ValueError(f"invalid status {self.status!r}")
        if self.status == "OK" and self.fault is not None:
            raise ValueError("OK response cannot carry a fault")
        if self.status == "FAULT" and (self.fault is None or self.results):
            raise ValueError("FAULT response must carry a fault and no results")

    @classmethod
    def ok(cls, correlation_id: str, results, message_id: str | None = None) -> "ResponseEnvelope":
        return cls(message_id or new_message_id(), correlation_id, "OK", tuple(results))

    @classmethod
    def for_fault(cls, correlation_id: str, code: FaultCode, detail: str,
                  message_id: str | None = None) -> "ResponseEnvelope":
        return cls(message_id or new_message_id(), correlation_id, "FAULT",
                   (), FaultInfo(code, detail))

    def result(self, name: str) -> ParamValue | None:
        for p in self.results:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class ProtocolMessage:
    """A protocol-specific rendering of an envelope.

    payload type by kind:
      SOAP   -> bytes (UTF-8 XML document)
      REST   -> RestRequest | RestResponse (see rover_esb.wire.rest)
      SOCKET -> bytes (one length-prefixed frame)
    """

    kind: ProtocolKind
    payload: object


# re-exported convenience for modules that build modified envelopes
clone = replace
