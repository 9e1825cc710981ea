"""Round-trip and rejection-totality properties over generated envelopes."""

import math

from hypothesis import given, settings
from hypothesis import strategies as st

from rover_esb import wire
from rover_esb.model import (
    EsbFault,
    FaultCode,
    FaultInfo,
    ParamValue,
    ProtocolKind,
    ProtocolMessage,
    RequestEnvelope,
    ResponseEnvelope,
)
from rover_esb.wire import RestRequest, RestResponse

identifiers = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,15}", fullmatch=True)

# text legal in all three grammars: no C0 controls besides \t\n, no surrogates
texts = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\r"
                           "\x00\x01\x02\x03\x04\x05\x06\x07\x08\x0b\x0c\x0e\x0f"
                           "\x10\x11\x12\x13\x14\x15\x16\x17\x18\x19\x1a\x1b\x1c\x1d\x1e\x1f"),
    max_size=40,
)

finite_floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


def param_values():
    return st.one_of(
        st.builds(ParamValue, identifiers, st.just("int"), st.integers(-2**62, 2**62)),
        st.builds(ParamValue, identifiers, st.just("float"), finite_floats),
        st.builds(ParamValue, identifiers, st.just("bool"), st.booleans()),
        st.builds(ParamValue, identifiers, st.just("text"), texts),
        st.builds(ParamValue, identifiers, st.just("bytes"), st.binary(max_size=40)),
    )


def unique_params():
    return st.lists(param_values(), max_size=6, unique_by=lambda p: p.name).map(tuple)


request_envelopes = st.builds(
    RequestEnvelope,
    message_id=st.uuids().map(str),
    source=identifiers,
    destination=identifiers,
    operation=identifiers,
    params=unique_params(),
    session=st.one_of(st.none(), st.uuids().map(str)),
)

ok_responses = st.builds(
    lambda m, c, r: ResponseEnvelope(m, c, "OK", r),
    st.uuids().map(str), st.uuids().map(str), unique_params(),
)

fault_responses = st.builds(
    lambda m, c, code, detail: ResponseEnvelope(m, c, "FAULT", (), FaultInfo(code, detail)),
    st.uuids().map(str), st.uuids().map(str),
    st.sampled_from(list(FaultCode)), texts,
)


def assert_values_equal(a: ParamValue, b: ParamValue):
    assert a.name == b.name and a.kind == b.kind
    if a.kind == "float":
        assert a.value == b.value and math.copysign(1, a.value) == math.copysign(1, b.value)
    else:
        assert a.value == b.value


@settings(max_examples=300)
@given(request_envelopes)
def test_soap_request_roundtrip_lossless(env):
    msg = wire.encode(env, ProtocolKind.SOAP)
    again = wire.decode(msg, ProtocolKind.SOAP)
    assert again == env
    # determinism
    assert wire.encode(env, ProtocolKind.SOAP).payload == msg.payload


@settings(max_examples=300)
@given(st.one_of(ok_responses, fault_responses))
def test_soap_response_roundtrip_lossless(env):
    msg = wire.encode(env, ProtocolKind.SOAP)
    assert wire.decode(msg, ProtocolKind.SOAP) == env


@settings(max_examples=300)
@given(request_envelopes)
def test_socket_request_roundtrip_modulo_context(env):
    msg = wire.encode(env, ProtocolKind.SOCKET)
    again = wire.decode(msg, ProtocolKind.SOCKET)
    assert again.message_id == env.message_id
    assert again.source == env.source
    assert again.operation == env.operation
    for a, b in zip(again.params, env.params):
        assert_values_equal(a, b)
    assert len(again.params) == len(env.params)


@settings(max_examples=300)
@given(st.one_of(ok_responses, fault_responses))
def test_socket_response_roundtrip_lossless(env):
    msg = wire.encode(env, ProtocolKind.SOCKET)
    assert wire.decode(msg, ProtocolKind.SOCKET) == env


@settings(max_examples=300)
@given(request_envelopes)
def test_rest_request_roundtrip_with_signature_context(env):
    msg = wire.encode(env, ProtocolKind.REST)
    kinds = {p.name: p.kind for p in env.params}
    again = wire.decode(msg, ProtocolKind.REST, param_kinds=kinds)
    assert again.operation == env.operation
    assert len(again.params) == len(env.params)
    for a, b in zip(again.params, env.params):
        assert_values_equal(a, b)


@settings(max_examples=300)
@given(ok_responses)
def test_rest_ok_response_roundtrip_with_signature_context(env):
    msg = wire.encode(env, ProtocolKind.REST)
    kinds = {p.name: p.kind for p in env.results}
    again = wire.decode(msg, ProtocolKind.REST, param_kinds=kinds)
    assert again.status == "OK"
    for a, b in zip(again.results, env.results):
        assert_values_equal(a, b)


@settings(max_examples=300)
@given(fault_responses)
def test_rest_fault_response_carries_code(env):
    msg = wire.encode(env, ProtocolKind.REST)
    again = wire.decode(msg, ProtocolKind.REST)
    assert again.status == "FAULT"
    assert again.fault.code == env.fault.code
    assert again.fault.detail == env.fault.detail


@settings(max_examples=500)
@given(st.binary(max_size=512))
def test_rejection_totality_over_noise(noise):
    """Arbitrary bytes either decode to a valid envelope or raise VALIDATION."""
    for kind, payload in [
        (ProtocolKind.SOAP, noise),
        (ProtocolKind.SOCKET, noise),
        (ProtocolKind.REST, RestRequest("GET", "/invoke/Op", (("x", noise.decode("latin-1")),))),
        (ProtocolKind.REST, RestResponse(200, noise)),
    ]:
        try:
            env = wire.decode(ProtocolMessage(kind, payload), kind)
        except EsbFault as exc:
            assert exc.code is FaultCode.VALIDATION
        else:
            assert isinstance(env, (RequestEnvelope, ResponseEnvelope))


@settings(max_examples=300)
@given(st.binary(max_size=256))
def test_validate_never_crashes(noise):
    for msg in [
        ProtocolMessage(ProtocolKind.SOAP, noise),
        ProtocolMessage(ProtocolKind.SOCKET, noise),
        ProtocolMessage(ProtocolKind.REST, RestResponse(200, noise)),
    ]:
        diags = wire.validate(msg)
        assert isinstance(diags, list)
