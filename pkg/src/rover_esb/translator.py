"""Request/response translation between the canonical core and a
destination protocol, checked against the registry's operation signature.

translate_request reorders and coerces params to the signature (the one
widening allowed is an int literal into a float slot), then re-encodes
for the target protocol.  translate_response parses the raw service
reply, types untyped values from the signature's declared returns, and
stamps the correlation id from the originating request.
"""

from __future__ import annotations

from dataclasses import replace

from . import wire
from .model import (
    EsbFault,
    FaultCode,
    ParamValue,
    ProtocolKind,
    ProtocolMessage,
    RequestEnvelope,
    ResponseEnvelope,
)
from .registry import OperationSignature

__all__ = ["translate_request", "translate_response", "coerce_params"]


def coerce_params(params, sig: OperationSignature) -> tuple[ParamValue, ...]:
    """Params reordered to signature order, kinds checked and widened.

    Raises TYPE_MISMATCH naming the first offending param (in signature
    order), covering missing, mistyped and unexpected params alike.
    """
    by_name = {p.name: p for p in params}
    if len(by_name) != len(params):
        dup = [p.name for p in params if [q.name for q in params].count(p.name) > 1][0]
        raise EsbFault(FaultCode.TYPE_MISMATCH, f"duplicate param {dup}")
    out = []
    for name, kind in sig.params:
        p = by_name.pop(name, None)
        if p is None:
            raise EsbFault(FaultCode.TYPE_MISMATCH, f"missing param {name} ({kind})")
        out.append(_coerce(p, kind))
    if by_name:
        extra = sorted(by_name)[0]
        raise EsbFault(FaultCode.TYPE_MISMATCH, f"unexpected param {extra}")
    return tuple(out)


def _coerce(p: ParamValue, kind: str) -> ParamValue:
    if p.kind == kind:
        return p
    if kind == "float" and p.kind == "int":
        return ParamValue(p.name, "float", float(p.value))
    raise EsbFault(FaultCode.TYPE_MISMATCH, f"param {p.name} is {p.kind}, expected {kind}")


def translate_request(env: RequestEnvelope, sig: OperationSignature,
                      target: ProtocolKind) -> ProtocolMessage:
    if env.operation != sig.name:
        raise EsbFault(
            FaultCode.UNKNOWN_OPERATION,
            f"envelope operation {env.operation!r} does not match signature {sig.name!r}",
        )
    checked = replace(env, params=coerce_params(env.params, sig))
    return wire.encode(checked, target)


def translate_response(msg: ProtocolMessage, source: ProtocolKind,
                       request: RequestEnvelope,
                       returns: dict[str, str] | None = None) -> ResponseEnvelope:
    try:
        env = wire.decode(msg, source, param_kinds=returns, request=request)
    except EsbFault as exc:
        raise EsbFault(FaultCode.TRANSLATION, f"service reply violates {source.value} grammar: {exc.detail}") from None
    if isinstance(env, RequestEnvelope):
        raise EsbFault(FaultCode.TRANSLATION, "service replied with a request envelope")
    return replace(env, correlation_id=request.message_id)
