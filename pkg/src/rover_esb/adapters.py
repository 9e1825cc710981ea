"""Per-protocol endpoint connectors.

One invoke performs exactly one request/reply exchange and at most one
service-side execution: there is no adapter-level retry (retry policy
belongs to the caller).  Connection failures surface as SERVICE_DOWN,
missed deadlines as TIMEOUT; both are EsbFault and never escape as raw
socket errors.

SOAP and REST ride a single HTTP exchange; SOCKET opens a TCP
connection, writes one frame, reads one frame, and closes (the binding
to the service is temporary by design).
"""

from __future__ import annotations

import http.client
import socket
import time
from dataclasses import dataclass

from .model import EsbFault, FaultCode, ProtocolKind, ProtocolMessage
from .registry import parse_endpoint
from .wire import RestRequest, RestResponse, frames

DEFAULT_TIMEOUT_S = 5.0
PROBE_TIMEOUT_S = 1.0


def http_connection(host: str, port: int, timeout_s: float) -> http.client.HTTPConnection:
    """An HTTPConnection with Nagle off (avoids 40 ms delayed-ACK stalls
    on the many small loopback exchanges this system performs)."""
    conn = http.client.HTTPConnection(host, port, timeout=timeout_s)
    conn.connect()
    conn.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return conn


@dataclass(frozen=True)
class AdapterResult:
    raw: ProtocolMessage
    elapsed_ms: float


def probe(endpoint: str) -> bool:
    """True iff a TCP connection to the endpoint opens within 1s."""
    try:
        host, port, _ = parse_endpoint(endpoint)
        with socket.create_connection((host, port), timeout=PROBE_TIMEOUT_S):
            return True
    except (OSError, ValueError):
        return False


class _HttpAdapter:
    kind: ProtocolKind

    def invoke(self, endpoint: str, msg: ProtocolMessage,
               timeout_s: float = DEFAULT_TIMEOUT_S) -> AdapterResult:
        if msg.kind != self.kind:
            raise EsbFault(FaultCode.TRANSLATION,
                           f"{self.kind.value} adapter got a {msg.kind.value} message")
        host, port, base = parse_endpoint(endpoint)
        method, path, body, headers = self._http_parts(msg, base)
        started = time.monotonic()
        try:
            conn = http_connection(host, port, timeout_s)
        except socket.timeout:
            raise EsbFault(FaultCode.TIMEOUT,
                           f"no reply from {endpoint} within {timeout_s}s") from None
        except OSError as exc:
            raise EsbFault(FaultCode.SERVICE_DOWN, f"{endpoint}: {exc}") from None
        try:
            conn.request(method, path, body=body, headers=headers)
            resp = conn.getresponse()
            payload = resp.read()
            status = resp.status
        except socket.timeout:
            raise EsbFault(FaultCode.TIMEOUT,
                           f"no reply from {endpoint} within {timeout_s}s") from None
        except OSError as exc:
            raise EsbFault(FaultCode.SERVICE_DOWN, f"{endpoint}: {exc}") from None
        except http.client.HTTPException as exc:
            raise EsbFault(FaultCode.TRANSLATION, f"{endpoint}: malformed HTTP reply: {exc}") from None
        finally:
            conn.close()
        elapsed = (time.monotonic() - started) * 1000.0
        return AdapterResult(self._wrap_response(status, payload), elapsed)


class SoapAdapter(_HttpAdapter):
    kind = ProtocolKind.SOAP

    def _http_parts(self, msg, base):
        return "POST", base or "/", msg.payload, {"Content-Type": "text/xml; charset=utf-8"}

    def _wrap_response(self, status, payload):
        if status != 200:
            raise EsbFault(FaultCode.TRANSLATION,
                           f"canonical-XML service answered HTTP {status}")
        return ProtocolMessage(ProtocolKind.SOAP, payload)


class RestAdapter(_HttpAdapter):
    kind = ProtocolKind.REST

    def _http_parts(self, msg, base):
        req: RestRequest = msg.payload
        path = base + req.path
        qs = req.query_string()
        if qs:
            path = f"{path}?{qs}"
        headers = {}
        body = None
        if req.method == "POST":
            body = req.body or b""
            headers["Content-Type"] = "application/json"
        return req.method, path, body, headers

    def _wrap_response(self, status, payload):
        return ProtocolMessage(ProtocolKind.REST, RestResponse(status, payload))


class SocketAdapter:
    kind = ProtocolKind.SOCKET

    def invoke(self, endpoint: str, msg: ProtocolMessage,
               timeout_s: float = DEFAULT_TIMEOUT_S) -> AdapterResult:
        if msg.kind != self.kind:
            raise EsbFault(FaultCode.TRANSLATION,
                           f"SOCKET adapter got a {msg.kind.value} message")
        host, port, _ = parse_endpoint(endpoint)
        started = time.monotonic()
        try:
            with socket.create_connection((host, port), timeout=timeout_s) as sock:
                sock.sendall(msg.payload)
                reply = frames.read_frame(sock)
        except socket.timeout:
            raise EsbFault(FaultCode.TIMEOUT,
                           f"no reply from {endpoint} within {timeout_s}s") from None
        except OSError as exc:
            raise EsbFault(FaultCode.SERVICE_DOWN, f"{endpoint}: {exc}") from None
        except EsbFault as exc:
            # a connection dropped mid-frame is a reset, not a grammar issue
            if "closed mid-frame" in exc.detail:
                raise EsbFault(FaultCode.SERVICE_DOWN, f"{endpoint}: {exc.detail}") from None
            raise EsbFault(FaultCode.TRANSLATION, f"{endpoint}: {exc.detail}") from None
        elapsed = (time.monotonic() - started) * 1000.0
        return AdapterResult(ProtocolMessage(ProtocolKind.SOCKET, reply), elapsed)


ADAPTERS: dict[ProtocolKind, object] = {
    ProtocolKind.SOAP: SoapAdapter(),
    ProtocolKind.REST: RestAdapter(),
    ProtocolKind.SOCKET: SocketAdapter(),
}
