"""REST grammar: plain HTTP verbs, query strings, and flat JSON bodies.

Requests:
  * all-scalar params -> ``GET /invoke/{operation}?{name}={percent-encoded}``
  * any bytes param   -> ``POST /invoke/{operation}`` with a JSON object
    body (name -> value, bytes as padded base64 text)

Responses: HTTP 200 + flat JSON object on OK; non-2xx +
``{"fault": code, "detail": text}`` on fault.

This is the lean grammar: requests carry only the operation and params.
message_id, session, source and destination are context-supplied by the
routing layer (the adapter already selected the service), and precise
param kinds on the GET form are recovered from the operation signature;
without one they are inferred from the literal (bool, then int, then
float, else text).
"""

from __future__ import annotations

import json
import re
import urllib.parse
from dataclasses import dataclass

from ..model import (
    IDENTIFIER_RE,
    EsbFault,
    FaultCode,
    FaultInfo,
    ParamValue,
    RequestEnvelope,
    ResponseEnvelope,
    new_message_id,
    parse_value,
    render_value,
)

_INVOKE_PATH_RE = re.compile(r"^/invoke/([A-Za-z_][A-Za-z0-9_]*)$")

# HTTP status used when rendering each fault code; the carried code in the
# JSON body is authoritative on decode.
FAULT_STATUS = {
    FaultCode.AUTH_FAILED: 401,
    FaultCode.UNKNOWN_SERVICE: 404,
    FaultCode.UNKNOWN_OPERATION: 404,
    FaultCode.VALIDATION: 400,
    FaultCode.TYPE_MISMATCH: 400,
    FaultCode.SERVICE_DOWN: 503,
    FaultCode.TIMEOUT: 504,
    FaultCode.TRANSLATION: 502,
    FaultCode.INTERNAL: 500,
}


@dataclass(frozen=True)
class RestRequest:
    method: str
    path: str
    query: tuple[tuple[str, str], ...] = ()
    body: bytes | None = None

    def query_string(self) -> str:
        return "&".join(f"{n}={urllib.parse.quote(v, safe='')}" for n, v in self.query)


@dataclass(frozen=True)
class RestResponse:
    status: int
    body: bytes = b""


def encode_request(env: RequestEnvelope) -> RestRequest:
    if any(p.kind == "bytes" for p in env.params):
        obj = {p.name: _to_json_value(p) for p in env.params}
        body = json.dumps(obj, ensure_ascii=False).encode("utf-8")
        return RestRequest("POST", f"/invoke/{env.operation}", (), body)
    query = tuple((p.name, p.text()) for p in env.params)
    return RestRequest("GET", f"/invoke/{env.operation}", query, None)


def encode_response(env: ResponseEnvelope) -> RestResponse:
    if env.fault is not None:
        body = {"fault": env.fault.code.value, "detail": env.fault.detail}
        return RestResponse(FAULT_STATUS[env.fault.code], _dumps(body))
    obj = {p.name: _to_json_value(p) for p in env.results}
    return RestResponse(200, _dumps(obj))


def _dumps(obj) -> bytes:
    return json.dumps(obj, ensure_ascii=False).encode("utf-8")


def _to_json_value(p: ParamValue):
    if p.kind == "bytes":
        return render_value("bytes", p.value)
    return p.value


def operation_from_path(path: str) -> str | None:
    m = _INVOKE_PATH_RE.match(path)
    return m.group(1) if m else None


def decode_request(msg: RestRequest, param_kinds: dict[str, str] | None = None) -> RequestEnvelope:
    """Parse a REST request into a partial envelope.

    The returned envelope has empty message_id/source/destination and no
    session: those fields are context-supplied on this hop and must be
    restored by the caller (the serving runtime knows its own name).
    """
    m = _INVOKE_PATH_RE.match(msg.path)
    if not m:
        raise EsbFault(FaultCode.VALIDATION, f"path does not match /invoke/{{operation}}: {msg.path!r}")
    operation = m.group(1)
    if msg.method == "GET":
        params = _decode_query(msg.query, param_kinds)
    elif msg.method == "POST":
        obj = _parse_json_object(msg.body if msg.body is not None else b"")
        params = _decode_json_params(obj, param_kinds)
    else:
        raise EsbFault(FaultCode.VALIDATION, f"unsupported method {msg.method!r}")
    return RequestEnvelope(
        message_id="", source="", destination="", operation=operation, params=params
    )


def decode_response(msg: RestResponse, request: RequestEnvelope | None = None,
                    return_kinds: dict[str, str] | None = None) -> ResponseEnvelope:
    """Parse a REST response.  correlation_id is taken from ``request``
    when given (HTTP correlates request and reply by the exchange itself)."""
    correlation = request.message_id if request is not None else ""
    if 200 <= msg.status < 300:
        obj = _parse_json_object(msg.body)
        results = _decode_json_params(obj, return_kinds)
        return ResponseEnvelope(new_message_id(), correlation, "OK", results)
    obj = _parse_json_object(msg.body)
    code_text = obj.get("fault")
    try:
        code = FaultCode(code_text)
    except ValueError:
        raise EsbFault(FaultCode.VALIDATION, f"fault body carries unknown code {code_text!r}") from None
    detail = obj.get("detail")
    if not isinstance(detail, str):
        detail = ""
    return ResponseEnvelope(new_message_id(), correlation, "FAULT", (), FaultInfo(code, detail))


def parse_query_string(qs: str) -> tuple[tuple[str, str], ...]:
    """Split a raw query string into (name, value) pairs, percent-decoding
    values.  VALIDATION on anything but ``name=value&...``."""
    if qs == "":
        return ()
    pairs = []
    for part in qs.split("&"):
        name, sep, value = part.partition("=")
        if not sep or not IDENTIFIER_RE.match(name):
            raise EsbFault(FaultCode.VALIDATION, f"unparseable query component {part!r}")
        try:
            pairs.append((name, urllib.parse.unquote(value, errors="strict")))
        except UnicodeDecodeError:
            raise EsbFault(FaultCode.VALIDATION, f"bad percent-encoding in {part!r}") from None
    return tuple(pairs)


def _decode_query(query, param_kinds) -> tuple[ParamValue, ...]:
    params = []
    for name, text in query:
        if not IDENTIFIER_RE.match(name):
            raise EsbFault(FaultCode.VALIDATION, f"invalid param name {name!r}")
        kind = (param_kinds or {}).get(name)
        try:
            if kind is not None:
                params.append(ParamValue(name, kind, _parse_with_widening(kind, text)))
            else:
                params.append(_infer_from_text(name, text))
        except ValueError as exc:
            raise EsbFault(FaultCode.VALIDATION, f"bad value for {name!r}: {exc}") from None
    return tuple(params)


def _parse_with_widening(kind: str, text: str):
    # a float slot accepts an integer literal ("5" -> 5.0)
    if kind == "float" and re.fullmatch(r"[+-]?[0-9]+", text):
        return float(int(text))
    return parse_value(kind, text)


def _infer_from_text(name: str, text: str) -> ParamValue:
    if text in ("true", "false"):
        return ParamValue(name, "bool", text == "true")
    if re.fullmatch(r"[+-]?[0-9]+", text):
        return ParamValue(name, "int", int(text))
    try:
        return ParamValue(name, "float", parse_value("float", text))
    except ValueError:
        pass
    return ParamValue(name, "text", parse_value("text", text))


def _parse_json_object(body: bytes) -> dict:
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EsbFault(FaultCode.VALIDATION, f"body is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise EsbFault(FaultCode.VALIDATION, "JSON body must be a flat object")
    return obj


def _decode_json_params(obj: dict, kinds: dict[str, str] | None) -> tuple[ParamValue, ...]:
    params = []
    for name, value in obj.items():
        if not IDENTIFIER_RE.match(str(name)):
            raise EsbFault(FaultCode.VALIDATION, f"invalid param name {name!r}")
        kind = (kinds or {}).get(name)
        try:
            params.append(_from_json_value(name, value, kind))
        except ValueError as exc:
            raise EsbFault(FaultCode.VALIDATION, f"bad value for {name!r}: {exc}") from None
    return tuple(params)


def _from_json_value(name: str, value, kind: str | None) -> ParamValue:
    if kind is None:
        if isinstance(value, bool):
            return ParamValue(name, "bool", value)
        if isinstance(value, int):
            return ParamValue(name, "int", value)
        if isinstance(value, float):
            return ParamValue(name, "float", value)
        if isinstance(value, str):
            return ParamValue(name, "text", value)
        raise ValueError(f"unsupported JSON value type {type(value).__name__}")
    if kind == "bytes":
        if not isinstance(value, str):
            raise ValueError("bytes value must be base64 text")
        return ParamValue(name, "bytes", parse_value("bytes", value))
    if kind == "float" and isinstance(value, int) and not isinstance(value, bool):
        return ParamValue(name, "float", float(value))
    if kind == "int" and isinstance(value, int) and not isinstance(value, bool):
        return ParamValue(name, "int", value)
    if kind == "bool" and isinstance(value, bool):
        return ParamValue(name, "bool", value)
    if kind == "float" and isinstance(value, float):
        return ParamValue(name, "float", value)
    if kind == "text" and isinstance(value, str):
        return ParamValue(name, "text", value)
    raise ValueError(f"JSON value does not fit declared kind {kind}")


def validate_request(msg: RestRequest) -> list[str]:
    diags = []
    if not _INVOKE_PATH_RE.match(msg.path):
        diags.append(f"path does not match /invoke/{{operation}}: {msg.path!r}")
    if msg.method not in ("GET", "POST"):
        diags.append(f"unsupported method {msg.method!r}")
    if msg.method == "POST":
        try:
            _parse_json_object(msg.body if msg.body is not None else b"")
        except EsbFault as exc:
            diags.append(exc.detail)
    else:
        for name, _ in msg.query:
            if not IDENTIFIER_RE.match(name):
                diags.append(f"invalid param name {name!r}")
    if not diags:
        try:
            decode_request(msg)
        except EsbFault as exc:
            diags.append(exc.detail)
    return diags


def validate_response(msg: RestResponse) -> list[str]:
    try:
        decode_response(msg)
    except EsbFault as exc:
        return [exc.detail]
    return []
