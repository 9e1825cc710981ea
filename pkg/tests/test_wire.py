"""Frozen wire vectors and grammar edge cases for the three codecs."""

import pytest

from rover_esb import wire
from rover_esb.model import (
    EsbFault,
    FaultCode,
    ParamValue,
    ProtocolKind,
    ProtocolMessage,
    RequestEnvelope,
    ResponseEnvelope,
)
from rover_esb.wire import RestRequest, RestResponse

TRACE_REQUEST = RequestEnvelope(
    message_id="7e6f2a52-9a8e-4a51-9c40-000000000001",
    source="rover-1",
    destination="SpectrometryService",
    operation="AnalyzeParticlesSpeed",
    params=(ParamValue("mass", "float", 5.0), ParamValue("weight", "float", 10.0)),
    session="f00dfeed",
)

TRACE_REQUEST_XML = b"""<Envelope xmlns="urn:rover-esb:1">
  <Header>
    <MessageId>7e6f2a52-9a8e-4a51-9c40-000000000001</MessageId>
    <Session>f00dfeed</Session>
    <Source>rover-1</Source>
    <Destination>SpectrometryService</Destination>
    <Operation>AnalyzeParticlesSpeed</Operation>
  </Header>
  <Body>
    <Param name="mass" kind="float">5</Param>
    <Param name="weight" kind="float">10</Param>
  </Body>
</Envelope>"""

TRACE_RESPONSE_XML = b"""<Envelope xmlns="urn:rover-esb:1">
  <Header>
    <MessageId>11111111-2222-3333-4444-555555555555</MessageId>
    <CorrelationId>7e6f2a52-9a8e-4a51-9c40-000000000001</CorrelationId>
    <Status>OK</Status>
  </Header>
  <Body>
    <Result name="velocity" kind="float">11.332</Result>
  </Body>
</Envelope>"""


class TestCanonicalXml:
    def test_trace_request_bytes_exact(self):
        assert wire.encode(TRACE_REQUEST, ProtocolKind.SOAP).payload == TRACE_REQUEST_XML

    def test_trace_request_decodes(self):
        env = wire.decode(ProtocolMessage(ProtocolKind.SOAP, TRACE_REQUEST_XML), ProtocolKind.SOAP)
        assert env.destination == "SpectrometryService"
        assert env.operation == "AnalyzeParticlesSpeed"
        assert [(p.name, p.kind, p.value) for p in env.params] == [
            ("mass", "float", 5.0),
            ("weight", "float", 10.0),
        ]

    def test_trace_response_bytes_exact(self):
        env = ResponseEnvelope(
            "11111111-2222-3333-4444-555555555555",
            TRACE_REQUEST.message_id,
            "OK",
            (ParamValue("velocity", "float", 11.332),),
        )
        assert wire.encode(env, ProtocolKind.SOAP).payload == TRACE_RESPONSE_XML
        again = wire.decode(ProtocolMessage(ProtocolKind.SOAP, TRACE_RESPONSE_XML), ProtocolKind.SOAP)
        assert again == env

    def test_empty_params_body_is_empty_element(self):
        env = RequestEnvelope("m-1", "rover-1", "svc", "Ping", (), session="s")
        xml = wire.encode(env, ProtocolKind.SOAP).payload
        assert b"<Body/>" in xml
        assert wire.decode(ProtocolMessage(ProtocolKind.SOAP, xml), ProtocolKind.SOAP) == env

    def test_fault_body(self):
        env = ResponseEnvelope.for_fault("c-1", FaultCode.UNKNOWN_OPERATION, "no such op <NoOp>")
        xml = wire.encode(env, ProtocolKind.SOAP).payload
        assert b'<Fault code="UNKNOWN_OPERATION">no such op &lt;NoOp&gt;</Fault>' in xml
        again = wire.decode(ProtocolMessage(ProtocolKind.SOAP, xml), ProtocolKind.SOAP)
        assert again.fault.code is FaultCode.UNKNOWN_OPERATION
        assert again.fault.detail == "no such op <NoOp>"

    def test_escaping_roundtrip(self):
        env = RequestEnvelope(
            "m&<>\"'1", "ro<ver", "d&st", "Op_1",
            (ParamValue("note", "text", "a<b&c>\"d'\n  e"),),
        )
        msg = wire.encode(env, ProtocolKind.SOAP)
        assert wire.decode(msg, ProtocolKind.SOAP) == env

    def test_determinism(self):
        a = wire.encode(TRACE_REQUEST, ProtocolKind.SOAP).payload
        b = wire.encode(TRACE_REQUEST, ProtocolKind.SOAP).payload
        assert a == b

    def test_validate_ok(self):
        assert wire.validate(ProtocolMessage(ProtocolKind.SOAP, TRACE_REQUEST_XML)) == []

    def test_validate_unclosed_tag(self):
        bad = TRACE_REQUEST_XML.replace(b"</Envelope>", b"")
        diags = wire.validate(ProtocolMessage(ProtocolKind.SOAP, bad))
        assert len(diags) == 1 and "well-formed" in diags[0]

    @pytest.mark.parametrize("header", ["MessageId", "Source", "Destination", "Operation"])
    def test_validate_each_missing_request_header(self, header):
        # deleting exactly one required header yields exactly one diagnostic
        line = [l for l in TRACE_REQUEST_XML.split(b"\n") if b"<" + header.encode() + b">" in l]
        assert len(line) == 1
        bad = TRACE_REQUEST_XML.replace(line[0] + b"\n", b"")
        diags = wire.validate(ProtocolMessage(ProtocolKind.SOAP, bad))
        assert diags == [f"missing required header {header}"]

    @pytest.mark.parametrize("header", ["MessageId", "CorrelationId", "Status"])
    def test_validate_each_missing_response_header(self, header):
        line = [l for l in TRACE_RESPONSE_XML.split(b"\n") if b"<" + header.encode() + b">" in l]
        bad = TRACE_RESPONSE_XML.replace(line[0] + b"\n", b"")
        diags = wire.validate(ProtocolMessage(ProtocolKind.SOAP, bad))
        assert diags == [f"missing required header {header}"]

    def test_doctype_rejected(self):
        evil = b'<!DOCTYPE x [<!ENTITY a "b">]>' + TRACE_REQUEST_XML
        diags = wire.validate(ProtocolMessage(ProtocolKind.SOAP, evil))
        assert diags and "DTD" in diags[0]

    def test_decode_bad_param_value(self):
        bad = TRACE_REQUEST_XML.replace(b'kind="float">5<', b'kind="float">abc<')
        with pytest.raises(EsbFault) as exc:
            wire.decode(ProtocolMessage(ProtocolKind.SOAP, bad), ProtocolKind.SOAP)
        assert exc.value.code is FaultCode.VALIDATION


class TestRest:
    def test_trace_request_is_plain_query(self):
        msg = wire.encode(TRACE_REQUEST, ProtocolKind.REST).payload
        assert msg.method == "GET"
        assert msg.path == "/invoke/AnalyzeParticlesSpeed"
        assert msg.query_string() == "mass=5&weight=10"
        assert msg.body is None

    def test_request_with_bytes_goes_to_post_json(self):
        env = RequestEnvelope(
            "m-1", "rover-1", "ImagingService", "MagnifyImage",
            (ParamValue("image", "bytes", b"P6 raw"), ParamValue("newWidth", "int", 3)),
            session="s",
        )
        msg = wire.encode(env, ProtocolKind.REST).payload
        assert msg.method == "POST"
        import json

        obj = json.loads(msg.body)
        assert obj == {"image": "UDYgcmF3", "newWidth": 3}

    def test_response_body_velocity(self):
        msg = RestResponse(200, b'{"velocity": 11.332}')
        env = wire.decode(ProtocolMessage(ProtocolKind.REST, msg), ProtocolKind.REST)
        assert env.status == "OK"
        assert [(p.name, p.kind, p.value) for p in env.results] == [("velocity", "float", 11.332)]

    def test_response_correlates_to_request(self):
        msg = RestResponse(200, b'{"velocity": 11.332}')
        env = wire.decode(ProtocolMessage(ProtocolKind.REST, msg), ProtocolKind.REST,
                          request=TRACE_REQUEST)
        assert env.correlation_id == TRACE_REQUEST.message_id

    def test_fault_response(self):
        msg = RestResponse(503, b'{"fault": "SERVICE_DOWN", "detail": "marked FAILED"}')
        env = wire.decode(ProtocolMessage(ProtocolKind.REST, msg), ProtocolKind.REST)
        assert env.status == "FAULT" and env.fault.code is FaultCode.SERVICE_DOWN

    def test_fault_with_unknown_code_rejected(self):
        msg = RestResponse(500, b'{"fault": "EXPLODED"}')
        with pytest.raises(EsbFault):
            wire.decode(ProtocolMessage(ProtocolKind.REST, msg), ProtocolKind.REST)

    def test_invalid_json_rejected(self):
        msg = RestResponse(200, b"velocity = 11.332")
        with pytest.raises(EsbFault) as exc:
            wire.decode(ProtocolMessage(ProtocolKind.REST, msg), ProtocolKind.REST)
        assert exc.value.code is FaultCode.VALIDATION

    def test_request_kind_refinement_from_signature(self):
        req = RestRequest("GET", "/invoke/AnalyzeParticlesSpeed",
                          (("mass", "5"), ("weight", "10")))
        env = wire.decode(ProtocolMessage(ProtocolKind.REST, req), ProtocolKind.REST,
                          param_kinds={"mass": "float", "weight": "float"})
        assert all(p.kind == "float" for p in env.params)
        assert env.params[0].value == 5.0

    def test_request_kind_inference_without_signature(self):
        req = RestRequest("GET", "/invoke/Op",
                          (("n", "7"), ("x", "2.5"), ("ok", "true"), ("s", "7a")))
        env = wire.decode(ProtocolMessage(ProtocolKind.REST, req), ProtocolKind.REST)
        assert [(p.name, p.kind) for p in env.params] == [
            ("n", "int"), ("x", "float"), ("ok", "bool"), ("s", "text"),
        ]

    def test_percent_encoding_roundtrip(self):
        env = RequestEnvelope("", "", "", "Op",
                              (ParamValue("s", "text", "a b&c=d%eé"),))
        msg = wire.encode(env, ProtocolKind.REST).payload
        from rover_esb.wire.rest import parse_query_string

        pairs = parse_query_string(msg.query_string())
        back = wire.decode(ProtocolMessage(ProtocolKind.REST, RestRequest("GET", msg.path, pairs)),
                           ProtocolKind.REST, param_kinds={"s": "text"})
        assert back.params[0].value == "a b&c=d%eé"

    def test_bad_query_component(self):
        from rover_esb.wire.rest import parse_query_string

        with pytest.raises(EsbFault):
            parse_query_string("novalue")
        with pytest.raises(EsbFault):
            parse_query_string("1bad=x")

    def test_bad_path_rejected(self):
        req = RestRequest("GET", "/other/Op", ())
        with pytest.raises(EsbFault):
            wire.decode(ProtocolMessage(ProtocolKind.REST, req), ProtocolKind.REST)


class TestFrames:
    def test_request_frame_layout(self):
        msg = wire.encode(TRACE_REQUEST, ProtocolKind.SOCKET).payload
        length = int.from_bytes(msg[:4], "big")
        text = msg[4:].decode()
        assert len(msg[4:]) == length
        lines = text.split("\n")
        assert lines[0] == f"REQ {TRACE_REQUEST.message_id} rover-1 AnalyzeParticlesSpeed"
        assert lines[1] == "mass float 5"
        assert lines[2] == "weight float 10"

    def test_request_roundtrip_modulo_context(self):
        msg = wire.encode(TRACE_REQUEST, ProtocolKind.SOCKET)
        env = wire.decode(msg, ProtocolKind.SOCKET)
        assert env.message_id == TRACE_REQUEST.message_id
        assert env.source == TRACE_REQUEST.source
        assert env.operation == TRACE_REQUEST.operation
        assert env.params == TRACE_REQUEST.params
        assert env.destination == "" and env.session is None  # context-supplied

    def test_response_roundtrip_full(self):
        env = ResponseEnvelope("m-9", "m-1", "OK", (ParamValue("pressure", "float", 715.0),))
        msg = wire.encode(env, ProtocolKind.SOCKET)
        assert wire.decode(msg, ProtocolKind.SOCKET) == env

    def test_fault_frame(self):
        env = ResponseEnvelope.for_fault("m-1", FaultCode.VALIDATION, "bad value: x y")
        msg = wire.encode(env, ProtocolKind.SOCKET)
        assert b"code text VALIDATION" in msg.payload
        again = wire.decode(msg, ProtocolKind.SOCKET)
        assert again.fault.detail == "bad value: x y"

    def test_truncated_frame_rejected(self):
        good = wire.encode(TRACE_REQUEST, ProtocolKind.SOCKET).payload
        truncated = good[:-3]
        with pytest.raises(EsbFault) as exc:
            wire.decode(ProtocolMessage(ProtocolKind.SOCKET, truncated), ProtocolKind.SOCKET)
        assert exc.value.code is FaultCode.VALIDATION
        assert "truncated" in exc.value.detail

    def test_value_with_spaces_and_newlines(self):
        env = ResponseEnvelope("m", "c", "OK", (ParamValue("s", "text", "two words\nand line"),))
        msg = wire.encode(env, ProtocolKind.SOCKET)
        assert wire.decode(msg, ProtocolKind.SOCKET) == env

    def test_kind_mismatch_between_msg_and_arg(self):
        msg = wire.encode(TRACE_REQUEST, ProtocolKind.SOCKET)
        with pytest.raises(EsbFault):
            wire.decode(msg, ProtocolKind.SOAP)
