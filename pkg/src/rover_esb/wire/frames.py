"""TCP socket frame grammar: 4-byte big-endian length prefix + UTF-8 text.

Frame text, line-oriented (LF, no trailing newline):

    REQ {message_id} {source} {operation}
    name kind value
    ...

    RSP {message_id} {correlation_id} OK
    name kind value
    ...

    RSP {message_id} {correlation_id} FAULT
    code text UNKNOWN_OPERATION
    detail text it%20broke

Values (and the header tokens) are percent-encoded with no safe
characters, so spaces, newlines and '%' survive; plain identifiers and
UUIDs pass through unescaped.  Request frames omit session and
destination: this grammar runs on the service-facing hop where the
adapter has already selected the service.
"""

from __future__ import annotations

import struct
import urllib.parse

from ..model import (
    IDENTIFIER_RE,
    KINDS,
    EsbFault,
    FaultCode,
    FaultInfo,
    ParamValue,
    RequestEnvelope,
    ResponseEnvelope,
    parse_value,
)

MAX_FRAME_BYTES = 64 * 1024 * 1024

_HEADER = struct.Struct(">I")


def _tok(s: str) -> str:
    return urllib.parse.quote(s, safe="")


def _untok(s: str) -> str:
    try:
        return urllib.parse.unquote(s, errors="strict")
    except UnicodeDecodeError:
        raise EsbFault(FaultCode.VALIDATION, f"bad percent-encoding in token {s!r}") from None


def frame(text: str) -> bytes:
    data = text.encode("utf-8")
    return _HEADER.pack(len(data)) + data


def unframe(data: bytes) -> str:
    """Strip and check the length prefix of a single complete frame."""
    if len(data) < _HEADER.size:
        raise EsbFault(FaultCode.VALIDATION, "frame shorter than its length prefix")
    (length,) = _HEADER.unpack_from(data)
    if length > MAX_FRAME_BYTES:
        raise EsbFault(FaultCode.VALIDATION, f"declared frame length {length} exceeds limit")
    payload = data[_HEADER.size:]
    if len(payload) < length:
        raise EsbFault(
            FaultCode.VALIDATION,
            f"truncated frame: declared {length} bytes, got {len(payload)}",
        )
    if len(payload) > length:
        raise EsbFault(FaultCode.VALIDATION, "trailing bytes after frame")
    try:
        return payload.decode("utf-8")
    except UnicodeDecodeError:
        raise EsbFault(FaultCode.VALIDATION, "frame payload is not UTF-8") from None


def encode_request(env: RequestEnvelope) -> bytes:
    lines = [f"REQ {_tok(env.message_id)} {_tok(env.source)} {_tok(env.operation)}"]
    lines.extend(_param_line(p) for p in env.params)
    return frame("\n".join(lines))


def encode_response(env: ResponseEnvelope) -> bytes:
    lines = [f"RSP {_tok(env.message_id)} {_tok(env.correlation_id)} {env.status}"]
    if env.fault is not None:
        lines.append(f"code text {_tok(env.fault.code.value)}")
        lines.append(f"detail text {_tok(env.fault.detail)}")
    else:
        lines.extend(_param_line(p) for p in env.results)
    return frame("\n".join(lines))


def _param_line(p: ParamValue) -> str:
    return f"{p.name} {p.kind} {_tok(p.text())}"


def decode(data: bytes) -> RequestEnvelope | ResponseEnvelope:
    text = unframe(data)
    lines = text.split("\n")
    head = lines[0].split(" ")
    if len(head) != 4:
        raise EsbFault(FaultCode.VALIDATION, f"malformed frame header line {lines[0]!r}")
    tag = head[0]
    if tag == "REQ":
        operation = _untok(head[3])
        if not operation:
            raise EsbFault(FaultCode.VALIDATION, "empty operation in REQ frame")
        return RequestEnvelope(
            message_id=_untok(head[1]),
            source=_untok(head[2]),
            destination="",  # context-supplied on this hop
            operation=operation,
            params=_decode_param_lines(lines[1:]),
        )
    if tag == "RSP":
        return _decode_response(head, lines[1:])
    raise EsbFault(FaultCode.VALIDATION, f"unknown frame tag {tag!r}")


def _decode_response(head: list[str], lines: list[str]) -> ResponseEnvelope:
    message_id, correlation_id, status = _untok(head[1]), _untok(head[2]), head[3]
    if status == "OK":
        return ResponseEnvelope(message_id, correlation_id, "OK", _decode_param_lines(lines))
    if status != "FAULT":
        raise EsbFault(FaultCode.VALIDATION, f"invalid frame status {status!r}")
    fields = {p.name: p for p in _decode_param_lines(lines)}
    if set(fields) != {"code", "detail"} or any(p.kind != "text" for p in fields.values()):
        raise EsbFault(FaultCode.VALIDATION, "FAULT frame must carry code and detail text lines")
    try:
        code = FaultCode(fields["code"].value)
    except ValueError:
        raise EsbFault(FaultCode.VALIDATION, f"unknown fault code {fields['code'].value!r}") from None
    return ResponseEnvelope(message_id, correlation_id, "FAULT", (),
                            FaultInfo(code, fields["detail"].value))


def _decode_param_lines(lines: list[str]) -> tuple[ParamValue, ...]:
    params = []
    for line in lines:
        if line == "":
            raise EsbFault(FaultCode.VALIDATION, "blank param line in frame")
        parts = line.split(" ")
        if len(parts) != 3:
            raise EsbFault(FaultCode.VALIDATION, f"malformed param line {line!r}")
        name, kind, raw = parts
        if not IDENTIFIER_RE.match(name):
            raise EsbFault(FaultCode.VALIDATION, f"invalid param name {name!r}")
        if kind not in KINDS:
            raise EsbFault(FaultCode.VALIDATION, f"unknown kind {kind!r} on {name!r}")
        try:
            params.append(ParamValue(name, kind, parse_value(kind, _untok(raw))))
        except ValueError as exc:
            raise EsbFault(FaultCode.VALIDATION, f"bad value for {name!r}: {exc}") from None
    return tuple(params)


def validate(data: bytes) -> list[str]:
    try:
        decode(data)
    except EsbFault as exc:
        return [exc.detail]
    return []


def read_frame(sock) -> bytes:
    """Read one complete frame (prefix included) from a socket."""
    header = _read_exact(sock, _HEADER.size)
    (length,) = _HEADER.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise EsbFault(FaultCode.VALIDATION, f"declared frame length {length} exceeds limit")
    return header + _read_exact(sock, length)


def _read_exact(sock, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise EsbFault(FaultCode.VALIDATION, "connection closed mid-frame")
        buf += chunk
    return buf
