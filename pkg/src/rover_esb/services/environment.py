"""Environment station fixture: length-prefixed frames over raw TCP.

One connection carries one exchange: read a REQ frame, answer with one
RSP frame, close.  The four measurement operations share a single tick
counter that advances once per dispatched request.
"""

from __future__ import annotations

import socketserver

from ..model import EsbFault, FaultCode, ParamValue, ProtocolKind, ResponseEnvelope
from ..registry import OperationSignature
from ..wire import frames
from .base import ServiceBase
from .envmodel import EnvironmentModel

SERVICE_NAME = "EnvironmentService"

_OPERATIONS = (
    ("MeasurePressure", "pressure", "pressure",
     "Current atmospheric pressure at the station"),
    ("MeasureHumidity", "humidity", "humidity",
     "Current relative atmospheric humidity"),
    ("MeasureWindSpeed", "wind", "wind_speed",
     "Current wind speed at the station"),
    ("MeasureUltravioletRadiation", "uv", "uv_index",
     "Current ultraviolet radiation index"),
)


class EnvironmentService(ServiceBase):
    service_name = SERVICE_NAME
    protocol = ProtocolKind.SOCKET

    def __init__(self, model: EnvironmentModel | None = None, **kwargs):
        super().__init__(**kwargs)
        self.model = model or EnvironmentModel()
        for op_name, channel, result_name, description in _OPERATIONS:
            self.table.add(
                OperationSignature(op_name, returns=((result_name, "float"),),
                                   description=description),
                self._sampler(channel, result_name),
            )

    def _sampler(self, channel: str, result_name: str):
        def sample():
            return [ParamValue(result_name, "float", self.model.sample(channel))]

        return sample

    def _bind(self):
        self._server = _FrameServer((self.host, self.requested_port), self)
        self.port = self._server.server_address[1]


class _FrameHandler(socketserver.BaseRequestHandler):
    def handle(self):
        service: EnvironmentService = self.server.service
        correlation = ""
        try:
            raw = frames.read_frame(self.request)
            env = frames.decode(raw)
            if isinstance(env, ResponseEnvelope):
                raise EsbFault(FaultCode.VALIDATION, "expected a REQ frame")
            correlation = env.message_id
            results = service.table.dispatch(env.operation, env.params)
            response = ResponseEnvelope.ok(correlation, results)
        except EsbFault as exc:
            response = ResponseEnvelope.for_fault(correlation, exc.code, exc.detail)
        except OSError:
            return  # peer vanished; nothing to answer
        try:
            self.request.sendall(frames.encode_response(response))
        except OSError:
            pass


class _FrameServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    request_queue_size = 128
    allow_reuse_address = True

    def __init__(self, addr, service: EnvironmentService):
        super().__init__(addr, _FrameHandler)
        self.service = service


def main(argv=None):
    import argparse

    parser = argparse.ArgumentParser(description="environment fixture service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8103)
    parser.add_argument("--esb", help="bus management URL")
    parser.add_argument("--credential", default="")
    args = parser.parse_args(argv)
    EnvironmentService(host=args.host, port=args.port, management_url=args.esb,
                       credential=args.credential).run_forever()


if __name__ == "__main__":
    main()
