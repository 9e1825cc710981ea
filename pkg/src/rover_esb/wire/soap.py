"""Canonical XML envelope grammar (the bus's native SOAP-style format).

Bit-exact rendering: UTF-8, LF line endings, 2-space indent, fixed
namespace, no XML declaration.  Empty containers self-close.

Request:

    <Envelope xmlns="urn:rover-esb:1">
      <Header>
        <MessageId>...</MessageId>
        <Session>...</Session>          (omitted when no session)
        <Source>...</Source>
        <Destination>...</Destination>
        <Operation>...</Operation>
      </Header>
      <Body>
        <Param name="mass" kind="float">5</Param>
      </Body>
    </Envelope>

Response headers carry MessageId, CorrelationId and Status instead of
Destination/Operation; the Body holds <Result> elements, or exactly one
<Fault code="...">detail</Fault> when Status is FAULT.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from ..model import (
    KINDS,
    EsbFault,
    FaultCode,
    FaultInfo,
    ParamValue,
    RequestEnvelope,
    ResponseEnvelope,
    parse_value,
)

NAMESPACE = "urn:rover-esb:1"

_REQUEST_HEADERS = ("MessageId", "Source", "Destination", "Operation")
_RESPONSE_HEADERS = ("MessageId", "CorrelationId", "Status")


def _esc_text(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _esc_attr(s: str) -> str:
    return _esc_text(s).replace('"', "&quot;")


def _header_line(tag: str, value: str) -> str:
    return f"    <{tag}>{_esc_text(value)}</{tag}>"


def encode_request(env: RequestEnvelope) -> bytes:
    lines = [f'<Envelope xmlns="{NAMESPACE}">', "  <Header>"]
    lines.append(_header_line("MessageId", env.message_id))
    if env.session is not None:
        lines.append(_header_line("Session", env.session))
    lines.append(_header_line("Source", env.source))
    lines.append(_header_line("Destination", env.destination))
    lines.append(_header_line("Operation", env.operation))
    lines.append("  </Header>")
    lines.extend(_body_lines("Param", env.params))
    lines.append("</Envelope>")
    return "\n".join(lines).encode("utf-8")


def encode_response(env: ResponseEnvelope) -> bytes:
    lines = [f'<Envelope xmlns="{NAMESPACE}">', "  <Header>"]
    lines.append(_header_line("MessageId", env.message_id))
    lines.append(_header_line("CorrelationId", env.correlation_id))
    lines.append(_header_line("Status", env.status))
    lines.append("  </Header>")
    if env.fault is not None:
        lines.append("  <Body>")
        lines.append(
            f'    <Fault code="{_esc_attr(env.fault.code.value)}">'
            f"{_esc_text(env.fault.detail)}</Fault>"
        )
        lines.append("  </Body>")
    else:
        lines.extend(_body_lines("Result", env.results))
    lines.append("</Envelope>")
    return "\n".join(lines).encode("utf-8")


def _body_lines(tag: str, params) -> list[str]:
    if not params:
        return ["  <Body/>"]
    lines = ["  <Body>"]
    for p in params:
        lines.append(
            f'    <{tag} name="{_esc_attr(p.name)}" kind="{p.kind}">'
            f"{_esc_text(p.text())}</{tag}>"
        )
    lines.append("  </Body>")
    return lines


def _parse_document(data: bytes) -> ET.Element:
    if b"<!DOCTYPE" in data or b"<!ENTITY" in data:
        raise EsbFault(FaultCode.VALIDATION, "DTD declarations are not allowed")
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise EsbFault(FaultCode.VALIDATION, f"not well-formed XML: {exc}") from None
    except ValueError as exc:  # e.g. null bytes in str input paths
        raise EsbFault(FaultCode.VALIDATION, f"unparseable XML: {exc}") from None


def _q(tag: str) -> str:
    return f"{{{NAMESPACE}}}{tag}"


def _split(root: ET.Element) -> tuple[dict[str, str], ET.Element | None]:
    """Return (header text by tag, body element) or raise VALIDATION."""
    if root.tag != _q("Envelope"):
        raise EsbFault(FaultCode.VALIDATION, f"root element is not Envelope in {NAMESPACE}")
    header = root.find(_q("Header"))
    if header is None:
        raise EsbFault(FaultCode.VALIDATION, "missing Header element")
    fields: dict[str, str] = {}
    for child in header:
        tag = child.tag.removeprefix(f"{{{NAMESPACE}}}")
        fields[tag] = child.text or ""
    return fields, root.find(_q("Body"))


def _is_response(fields: dict[str, str]) -> bool:
    return "CorrelationId" in fields or "Status" in fields


def _decode_params(body: ET.Element | None, tag: str) -> tuple[ParamValue, ...]:
    if body is None:
        return ()
    out = []
    for el in body:
        if el.tag != _q(tag):
            raise EsbFault(FaultCode.VALIDATION, f"unexpected element {el.tag} in Body")
        name = el.get("name")
        kind = el.get("kind")
        if name is None or kind is None:
            raise EsbFault(FaultCode.VALIDATION, f"{tag} element missing name/kind attribute")
        if kind not in KINDS:
            raise EsbFault(FaultCode.VALIDATION, f"unknown kind {kind!r} on {name!r}")
        try:
            out.append(ParamValue(name, kind, parse_value(kind, el.text or "")))
        except ValueError as exc:
            raise EsbFault(FaultCode.VALIDATION, f"bad {tag} {name!r}: {exc}") from None
    return tuple(out)


def decode(data: bytes) -> RequestEnvelope | ResponseEnvelope:
    root = _parse_document(data)
    fields, body = _split(root)
    if _is_response(fields):
        return _decode_response(fields, body)
    return _decode_request(fields, body)


def _decode_request(fields: dict[str, str], body) -> RequestEnvelope:
    for tag in _REQUEST_HEADERS:
        if tag not in fields:
            raise EsbFault(FaultCode.VALIDATION, f"missing required header {tag}")
    env = RequestEnvelope(
        message_id=fields["MessageId"],
        source=fields["Source"],
        destination=fields["Destination"],
        operation=fields["Operation"],
        params=_decode_params(body, "Param"),
        session=fields.get("Session"),
    )
    env.check()
    return env


def _decode_response(fields: dict[str, str], body) -> ResponseEnvelope:
    for tag in _RESPONSE_HEADERS:
        if tag not in fields:
            raise EsbFault(FaultCode.VALIDATION, f"missing required header {tag}")
    status = fields["Status"]
    if status not in ("OK", "FAULT"):
        raise EsbFault(FaultCode.VALIDATION, f"invalid Status {status!r}")
    fault = None
    results: tuple[ParamValue, ...] = ()
    if status == "FAULT":
        fault = _decode_fault(body)
    else:
        if body is not None and any(el.tag == _q("Fault") for el in body):
            raise EsbFault(FaultCode.VALIDATION, "OK response carries a Fault element")
        results = _decode_params(body, "Result")
    return ResponseEnvelope(fields["MessageId"], fields["CorrelationId"], status, results, fault)


def _decode_fault(body) -> FaultInfo:
    if body is None:
        raise EsbFault(FaultCode.VALIDATION, "FAULT response without Body")
    faults = [el for el in body if el.tag == _q("Fault")]
    if len(faults) != 1 or len(list(body)) != 1:
        raise EsbFault(FaultCode.VALIDATION, "FAULT Body must hold exactly one Fault element")
    code = faults[0].get("code")
    try:
        fc = FaultCode(code)
    except ValueError:
        raise EsbFault(FaultCode.VALIDATION, f"unknown fault code {code!r}") from None
    return FaultInfo(fc, faults[0].text or "")


def validate(data: bytes) -> list[str]:
    """All grammar diagnostics for one document; empty means well-formed
    and carrying every required header for its kind."""
    try:
        root = _parse_document(data)
    except EsbFault as exc:
        return [exc.detail]
    try:
        fields, body = _split(root)
    except EsbFault as exc:
        return [exc.detail]

    diags = []
    required = _RESPONSE_HEADERS if _is_response(fields) else _REQUEST_HEADERS
    for tag in required:
        if tag not in fields:
            diags.append(f"missing required header {tag}")
    if not _is_response(fields):
        if "Destination" in fields and not fields["Destination"]:
            diags.append("empty required header Destination")
        if "Operation" in fields and not fields["Operation"]:
            diags.append("empty required header Operation")
    if not diags:
        try:
            decode(data)
        except EsbFault as exc:
            diags.append(exc.detail)
    return diags
