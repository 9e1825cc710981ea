"""Imaging fixture: canonical XML over HTTP at /service.

Implements MagnifyImage, NoiseReduction, and SendImage (which uploads
the image to the bus's content-addressed store through the management
API and returns the storage id).
"""

from __future__ import annotations

import json
from http.server import ThreadingHTTPServer

from ..model import EsbFault, FaultCode, ParamValue, ProtocolKind, ResponseEnvelope
from ..registry import OperationSignature, parse_endpoint
from ..wire import soap
from . import imageops
from .base import ServiceBase
from ..esb_http import _QuietHandler

SERVICE_NAME = "ImagingService"


def _decode_image(payload: bytes) -> imageops.Image:
    try:
        return imageops.ppm_decode(payload)
    except ValueError as exc:
        raise EsbFault(FaultCode.VALIDATION, f"malformed image: {exc}") from None


class ImagingService(ServiceBase):
    service_name = SERVICE_NAME
    protocol = ProtocolKind.SOAP
    base_path = "/service"

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.table.add(
            OperationSignature(
                "MagnifyImage",
                params=(("image", "bytes"), ("newWidth", "int"), ("newHeight", "int")),
                returns=(("image", "bytes"),),
                description="Resample a captured image to new pixel dimensions",
            ),
            self.magnify_image,
        )
        self.table.add(
            OperationSignature(
                "NoiseReduction",
                params=(("image", "bytes"),),
                returns=(("image", "bytes"),),
                description="Remove single-pixel artifacts with a median filter",
            ),
            self.noise_reduction,
        )
        self.table.add(
            OperationSignature(
                "SendImage",
                params=(("image", "bytes"),),
                returns=(("storage_id", "text"),),
                description="Upload a captured image to the ground image store",
            ),
            self.send_image,
        )

    def endpoint(self) -> str:
        return f"{self.host}:{self.port}{self.base_path}"

    # -- operations -----------------------------------------------------------

    def magnify_image(self, image: bytes, newWidth: int, newHeight: int):
        if newWidth < 1 or newHeight < 1:
            raise EsbFault(FaultCode.VALIDATION,
                           f"target dimensions must be positive, got {newWidth}x{newHeight}")
        out = imageops.magnify(_decode_image(image), newWidth, newHeight)
        return [ParamValue("image", "bytes", imageops.ppm_encode(out))]

    def noise_reduction(self, image: bytes):
        out = imageops.noise_reduction(_decode_image(image))
        return [ParamValue("image", "bytes", imageops.ppm_encode(out))]

    def send_image(self, image: bytes):
        _decode_image(image)  # reject junk before it leaves the service
        if not self.management_url:
            raise EsbFault(FaultCode.INTERNAL, "no image sink configured")
        host, port, _ = parse_endpoint(self.management_url.removeprefix("http://"))
        try:
            status, body = post_json_bytes(host, port, "/ops/images", image,
                                           credential=self.credential or "")
        except OSError as exc:
            raise EsbFault(FaultCode.INTERNAL, f"image sink unreachable: {exc}") from None
        if status != 200:
            raise _carried_fault(body)
        return [ParamValue("storage_id", "text", json.loads(body)["storage_id"])]

    # -- server ------------------------------------------------------------------

    def _bind(self):
        self._server = _ImagingServer((self.host, self.requested_port), self)
        self.port = self._server.server_address[1]


def post_json_bytes(host: str, port: int, path: str, payload: bytes,
                    credential: str) -> tuple[int, bytes]:
    import http.client

    conn = http.client.HTTPConnection(host, port, timeout=5.0)
    try:
        conn.request("POST", path, body=payload,
                     headers={"Content-Type": "application/octet-stream",
                              "X-Esb-Credential": credential})
        resp = conn.getresponse()
        return resp.status, resp.read()
    finally:
        conn.close()


def _carried_fault(body: bytes) -> EsbFault:
    try:
        obj = json.loads(body)
        return EsbFault(FaultCode(obj["fault"]), obj.get("detail", ""))
    except Exception:
        return EsbFault(FaultCode.INTERNAL, f"image sink rejected upload: {body[:200]!r}")


class _ImagingHandler(_QuietHandler):
    server: "_ImagingServer"

    def do_POST(self):
        service = self.server.service
        if self.path != service.base_path:
            self.send_json(404, {"fault": "VALIDATION",
                                 "detail": f"service path is {service.base_path}"})
            return
        body = self.read_body()
        correlation = ""
        try:
            env = soap.decode(body)
            if isinstance(env, ResponseEnvelope):
                raise EsbFault(FaultCode.VALIDATION, "expected a request envelope")
            correlation = env.message_id
            results = service.table.dispatch(env.operation, env.params)
            response = ResponseEnvelope.ok(correlation, results)
        except EsbFault as exc:
            response = ResponseEnvelope.for_fault(correlation, exc.code, exc.detail)
        self.send_payload(200, soap.encode_response(response), "text/xml; charset=utf-8")


class _ImagingServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128
    allow_reuse_address = True

    def __init__(self, addr, service: ImagingService):
        super().__init__(addr, _ImagingHandler)
        self.service = service


def main(argv=None):
    import argparse

    parser = argparse.ArgumentParser(description="imaging fixture service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8101)
    parser.add_argument("--esb", help="bus management URL, e.g. http://127.0.0.1:8200")
    parser.add_argument("--credential", default="")
    args = parser.parse_args(argv)
    ImagingService(host=args.host, port=args.port, management_url=args.esb,
                   credential=args.credential).run_forever()


if __name__ == "__main__":
    main()
