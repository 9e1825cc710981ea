"""Desk-scale service-oriented rover testbed.

A protocol-translating service bus sits between a rover client and three
fixture services speaking different protocols (canonical XML over HTTP,
REST, and raw TCP frames), with a parametric delay/loss link simulator
on the rover's side of the bus.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    EsbFault,
    FaultCode,
    FaultInfo,
    ParamValue,
    ProtocolKind,
    ProtocolMessage,
    RequestEnvelope,
    ResponseEnvelope,
)
