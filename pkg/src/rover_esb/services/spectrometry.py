"""Spectrometry fixture: REST per the query-string/JSON grammar.

Five analysis operations over deterministic pseudo-instrument math.
"""

from __future__ import annotations

import urllib.parse
from http.server import ThreadingHTTPServer

from ..model import EsbFault, ParamValue, ProtocolKind, ResponseEnvelope
from ..registry import OperationSignature
from ..wire import rest
from . import analyses
from .base import ServiceBase
from ..esb_http import _QuietHandler

SERVICE_NAME = "SpectrometryService"

_ELEMENT_RETURNS = tuple((e, "float") for e in analyses.ELEMENTS)


class SpectrometryService(ServiceBase):
    service_name = SERVICE_NAME
    protocol = ProtocolKind.REST

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.table.add(
            OperationSignature(
                "AnalyzeParticlesSpeed",
                params=(("mass", "float"), ("weight", "float")),
                returns=(("velocity", "float"),),
                description="Velocity of bounced particles after a neutron pulse",
            ),
            lambda mass, weight: [
                ParamValue("velocity", "float", analyses.particle_velocity(mass, weight))
            ],
        )
        self.table.add(
            OperationSignature(
                "AnalyzeReleasedXRays",
                params=(("sample_id", "text"),),
                returns=_ELEMENT_RETURNS,
                description="Relative element abundances from stimulated X-ray release",
            ),
            lambda sample_id: _element_params(analyses.xray_abundances(sample_id)),
        )
        self.table.add(
            OperationSignature(
                "AnalyzeVaporizedBits",
                params=(("rock_id", "text"), ("laser_power", "float")),
                returns=_ELEMENT_RETURNS,
                description="Element composition of laser-vaporized rock",
            ),
            lambda rock_id, laser_power: _element_params(
                analyses.vaporized_composition(rock_id, laser_power)),
        )
        self.table.add(
            OperationSignature(
                "ContainsCarbon",
                params=(("sample_id", "text"),),
                returns=(("carbon", "bool"),),
                description="Whether the sampled soil contains carbon",
            ),
            lambda sample_id: [ParamValue("carbon", "bool", analyses.contains_carbon(sample_id))],
        )
        self.table.add(
            OperationSignature(
                "ContainsOxygen",
                params=(("sample_id", "text"),),
                returns=(("oxygen", "bool"),),
                description="Whether the sampled soil contains oxygen",
            ),
            lambda sample_id: [ParamValue("oxygen", "bool", analyses.contains_oxygen(sample_id))],
        )
        self.sleep_before_reply_s = 0.0  # test hook for timeout scenarios

    def _bind(self):
        self._server = _SpectrometryServer((self.host, self.requested_port), self)
        self.port = self._server.server_address[1]


def _element_params(abundances: dict[str, float]) -> list[ParamValue]:
    return [ParamValue(e, "float", abundances[e]) for e in analyses.ELEMENTS]


class _SpectrometryHandler(_QuietHandler):
    server: "_SpectrometryServer"

    def _serve(self, method: str):
        service = self.server.service
        split = urllib.parse.urlsplit(self.path)
        body = self.read_body() if method == "POST" else None
        try:
            pairs = rest.parse_query_string(split.query)
            request = rest.RestRequest(method, split.path, pairs, body)
            operation = rest.operation_from_path(split.path)
            kinds = service.table.param_kinds(operation) if operation else None
            env = rest.decode_request(request, kinds)
            results = service.table.dispatch(env.operation, env.params)
            response = ResponseEnvelope.ok("", results)
        except EsbFault as exc:
            response = ResponseEnvelope.for_fault("", exc.code, exc.detail)
        if service.sleep_before_reply_s > 0:
            import time

            time.sleep(service.sleep_before_reply_s)
        raw = rest.encode_response(response)
        self.send_payload(raw.status, raw.body, "application/json")

    def do_GET(self):
        self._serve("GET")

    def do_POST(self):
        self._serve("POST")


class _SpectrometryServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128
    allow_reuse_address = True

    def __init__(self, addr, service: SpectrometryService):
        super().__init__(addr, _SpectrometryHandler)
        self.service = service


def main(argv=None):
    import argparse

    parser = argparse.ArgumentParser(description="spectrometry fixture service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8102)
    parser.add_argument("--esb", help="bus management URL")
    parser.add_argument("--credential", default="")
    args = parser.parse_args(argv)
    SpectrometryService(host=args.host, port=args.port, management_url=args.esb,
                        credential=args.credential).run_forever()


if __name__ == "__main__":
    main()
