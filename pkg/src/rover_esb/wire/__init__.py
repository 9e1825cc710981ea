"""Lossless codecs between the canonical envelopes and the three wire
grammars (canonical XML, REST, socket frames).

encode/decode/validate dispatch on ProtocolKind. Encoding is pure and
deterministic: equal envelopes produce identical bytes. Decoding either
returns an envelope or raises EsbFault(VALIDATION); it never invents
context-supplied fields.

Context-supplied fields by grammar (restored by the routing layer, and
excluded from round-trip comparison on that hop):

    SOAP   requests/responses: none (full fidelity)
    REST   requests: message_id, session, source, destination; param
           kinds on the GET form are refined from the signature
    REST   responses: message_id, correlation_id
    SOCKET requests: session, destination
    SOCKET responses: none
"""

from __future__ import annotations

from ..model import (
    EsbFault,
    FaultCode,
    ProtocolKind,
    ProtocolMessage,
    RequestEnvelope,
    ResponseEnvelope,
)
from . import frames, rest, soap
from .rest import RestRequest, RestResponse

__all__ = [
    "encode",
    "decode",
    "validate",
    "RestRequest",
    "RestResponse",
    "frames",
    "rest",
    "soap",
]


def encode(env: RequestEnvelope | ResponseEnvelope, kind: ProtocolKind) -> ProtocolMessage:
    is_request = isinstance(env, RequestEnvelope)
    if kind == ProtocolKind.SOAP:
        payload = soap.encode_request(env) if is_request else soap.encode_response(env)
    elif kind == ProtocolKind.REST:
        payload = rest.encode_request(env) if is_request else rest.encode_response(env)
    elif kind == ProtocolKind.SOCKET:
        payload = frames.encode_request(env) if is_request else frames.encode_response(env)
    else:
        raise EsbFault(FaultCode.TRANSLATION, f"no encoder for protocol {kind!r}")
    return ProtocolMessage(kind, payload)


def decode(msg: ProtocolMessage, kind: ProtocolKind, *,
           param_kinds: dict[str, str] | None = None,
           request: RequestEnvelope | None = None) -> RequestEnvelope | ResponseEnvelope:
    if msg.kind != kind:
        raise EsbFault(FaultCode.VALIDATION, f"message kind {msg.kind} does not match {kind}")
    if kind == ProtocolKind.SOAP:
        return soap.decode(msg.payload)
    if kind == ProtocolKind.SOCKET:
        return frames.decode(msg.payload)
    if kind == ProtocolKind.REST:
        if isinstance(msg.payload, RestRequest):
            return rest.decode_request(msg.payload, param_kinds)
        if isinstance(msg.payload, RestResponse):
            return rest.decode_response(msg.payload, request, param_kinds)
        raise EsbFault(FaultCode.VALIDATION, "REST payload is neither request nor response")
    raise EsbFault(FaultCode.VALIDATION, f"no decoder for protocol {kind!r}")


def validate(msg: ProtocolMessage) -> list[str]:
    """Grammar diagnostics; empty list means well-formed with all required
    header fields present for the message's kind."""
    if msg.kind == ProtocolKind.SOAP:
        return soap.validate(msg.payload)
    if msg.kind == ProtocolKind.SOCKET:
        return frames.validate(msg.payload)
    if msg.kind == ProtocolKind.REST:
        if isinstance(msg.payload, RestRequest):
            return rest.validate_request(msg.payload)
        if isinstance(msg.payload, RestResponse):
            return rest.validate_response(msg.payload)
        return ["REST payload is neither request nor response"]
    return [f"unknown protocol {msg.kind!r}"]
