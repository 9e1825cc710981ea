import math

import pytest

from rover_esb.model import (
    EsbFault,
    FaultCode,
    FaultInfo,
    ParamValue,
    RequestEnvelope,
    ResponseEnvelope,
    parse_value,
    render_float,
    render_value,
)


def test_param_kind_value_agreement():
    assert ParamValue("mass", "float", 5.0).value == 5.0
    assert ParamValue.of("flag", True).kind == "bool"
    assert ParamValue.of("n", 3).kind == "int"
    assert ParamValue.of("blob", b"\x00\xff").kind == "bytes"
    with pytest.raises(ValueError):
        ParamValue("mass", "float", "5")
    with pytest.raises(ValueError):
        ParamValue("n", "int", True)  # bool is not an int param
    with pytest.raises(ValueError):
        ParamValue("bad name", "int", 1)
    with pytest.raises(ValueError):
        ParamValue("", "int", 1)
    with pytest.raises(ValueError):
        ParamValue("x", "float", float("nan"))
    with pytest.raises(ValueError):
        ParamValue("x", "text", "nul\x00byte")
    with pytest.raises(ValueError):
        ParamValue("x", "text", "cr\rchar")


@pytest.mark.parametrize(
    "value,text",
    [
        (5.0, "5"),
        (11.332, "11.332"),
        (-0.5, "-0.5"),
        (1e100, "1e+100"),
        (0.1, "0.1"),
    ],
)
def test_float_text(value, text):
    assert render_float(value) == text
    assert parse_value("float", text) == value


def test_float_text_bit_roundtrip():
    import random

    rng = random.Random(7)
    for _ in range(2000):
        x = rng.uniform(-1e12, 1e12) * 10 ** rng.randint(-20, 20)
        if not math.isfinite(x):
            continue
        again = parse_value("float", render_float(x))
        assert again == x and math.copysign(1, again) == math.copysign(1, x)


def test_render_parse_inverse_for_all_kinds():
    cases = [("int", -42), ("float", 2.5), ("bool", False), ("text", "a b\nc"), ("bytes", b"\x01\x02")]
    for kind, value in cases:
        assert parse_value(kind, render_value(kind, value)) == value


def test_response_invariants():
    ok = ResponseEnvelope.ok("c-1", [ParamValue("velocity", "float", 11.332)])
    assert ok.status == "OK" and ok.fault is None
    flt = ResponseEnvelope.for_fault("c-1", FaultCode.TIMEOUT, "no reply")
    assert flt.results == () and flt.fault.code is FaultCode.TIMEOUT
    with pytest.raises(ValueError):
        ResponseEnvelope("m", "c", "OK", (), FaultInfo(FaultCode.INTERNAL, "x"))
    with pytest.raises(ValueError):
        ResponseEnvelope("m", "c", "FAULT", ())
    with pytest.raises(ValueError):
        ResponseEnvelope("m", "c", "MAYBE", ())


def test_request_check():
    env = RequestEnvelope("m", "rover", "", "Op")
    with pytest.raises(EsbFault) as exc:
        env.check()
    assert exc.value.code is FaultCode.VALIDATION
    with pytest.raises(EsbFault):
        RequestEnvelope("m", "rover", "svc", "").check()
