"""Headless rover client: discovery, session bind, and remote invocation
with timeout/retry over a possibly lossy link.

Requests go out as canonical XML to the bus's rover endpoint (usually
through the link-simulator proxy).  Every attempt uses a fresh
message_id; a response is accepted only if its correlation_id matches
the attempt that is currently in flight -- anything else (late
duplicates reordered by jitter, foreign traffic) is discarded and
counted, never surfaced.

Retry policy: TIMEOUT and SERVICE_DOWN are retryable; authentication,
validation, typing and unknown-name faults are not.
"""

from __future__ import annotations

import http.client
import json
import socket
import threading
import urllib.parse
from dataclasses import dataclass

from .model import (
    EsbFault,
    FaultCode,
    ParamValue,
    RequestEnvelope,
    ResponseEnvelope,
    new_message_id,
)
from .wire import soap

BUS_ALIAS = "esb"

RETRYABLE = frozenset({FaultCode.TIMEOUT, FaultCode.SERVICE_DOWN})


@dataclass(frozen=True)
class DiscoveredOperation:
    operation: str
    description: str
    service: str
    status: str
    params: tuple[tuple[str, str], ...]
    returns: tuple[tuple[str, str], ...]


@dataclass
class ClientStats:
    transmissions: int = 0
    discarded_responses: int = 0


class RoverClient:
    def __init__(self, esb_url: str, client_id: str = "rover-1",
                 credential: str = "", timeout_s: float = 5.0, retries: int = 0):
        parsed = urllib.parse.urlsplit(esb_url)
        if parsed.scheme != "http" or parsed.hostname is None:
            raise ValueError(f"esb url must be http://host:port/path, got {esb_url!r}")
        self.host = parsed.hostname
        self.port = parsed.port or 80
        self.path = parsed.path or "/esb"
        self.client_id = client_id
        self.credential = credential
        self.timeout_s = timeout_s
        self.retries = retries
        self.session: str | None = None
        self.stats = ClientStats()
        self._lock = threading.Lock()
        self._catalog: dict[str, DiscoveredOperation] = {}

    # -- transport -------------------------------------------------------------

    def _post(self, xml: bytes, timeout_s: float) -> bytes:
        from .adapters import http_connection

        with self._lock:
            self.stats.transmissions += 1
        try:
            conn = http_connection(self.host, self.port, timeout_s)
        except socket.timeout:
            raise EsbFault(FaultCode.TIMEOUT, f"no reply within {timeout_s}s") from None
        except OSError as exc:
            raise EsbFault(FaultCode.SERVICE_DOWN, f"bus unreachable: {exc}") from None
        try:
            conn.request("POST", self.path, body=xml,
                         headers={"Content-Type": "text/xml; charset=utf-8"})
            resp = conn.getresponse()
            body = resp.read()
            status = resp.status
        except socket.timeout:
            raise EsbFault(FaultCode.TIMEOUT, f"no reply within {timeout_s}s") from None
        except OSError as exc:
            raise EsbFault(FaultCode.SERVICE_DOWN, f"bus unreachable: {exc}") from None
        except http.client.HTTPException as exc:
            raise EsbFault(FaultCode.TIMEOUT, f"broken reply: {exc}") from None
        finally:
            conn.close()
        if status != 200:
            raise _carried_fault(body, status)
        return body

    def _exchange(self, env: RequestEnvelope, timeout_s: float) -> ResponseEnvelope:
        reply = self._post(soap.encode_request(env), timeout_s)
        try:
            decoded = soap.decode(reply)
        except EsbFault as exc:
            raise EsbFault(FaultCode.TRANSLATION, f"unreadable bus reply: {exc.detail}") from None
        if not isinstance(decoded, ResponseEnvelope):
            raise EsbFault(FaultCode.TRANSLATION, "bus replied with a request envelope")
        return decoded

    def _call(self, operation: str, params, destination: str,
              session: str | None, timeout_s: float | None,
              retries: int | None) -> tuple[ParamValue, ...]:
        timeout_s = self.timeout_s if timeout_s is None else timeout_s
        attempts = (self.retries if retries is None else retries) + 1
        issued: set[str] = set()
        last: EsbFault | None = None
        for _ in range(attempts):
            message_id = new_message_id()
            issued.add(message_id)
            env = RequestEnvelope(message_id, self.client_id, destination,
                                  operation, tuple(params), session=session)
            try:
                response = self._exchange(env, timeout_s)
            except EsbFault as exc:
                if exc.code in RETRYABLE:
                    last = exc
                    continue
                raise
            if response.correlation_id != message_id:
                with self._lock:
                    self.stats.discarded_responses += 1
                last = EsbFault(FaultCode.TIMEOUT,
                                "discarded response with foreign correlation id")
                continue
            if response.status == "OK":
                return response.results
            fault = EsbFault(response.fault.code, response.fault.detail)
            if fault.code in RETRYABLE:
                last = fault
                continue
            raise fault
        raise last if last is not None else EsbFault(FaultCode.INTERNAL, "no attempts made")

    # -- protocol verbs -----------------------------------------------------------

    def bind(self, timeout_s: float | None = None, retries: int | None = None) -> str:
        results = self._call("Bind", [ParamValue("credential", "text", self.credential)],
                             BUS_ALIAS, None, timeout_s, retries)
        token = next((r.value for r in results if r.name == "session"), None)
        if not isinstance(token, str) or not token:
            raise EsbFault(FaultCode.TRANSLATION, "bind reply carries no session token")
        self.session = token
        return token

    def discover(self, timeout_s: float | None = None,
                 retries: int | None = None) -> list[DiscoveredOperation]:
        results = self._call("DiscoverOperations", [], BUS_ALIAS, None, timeout_s, retries)
        catalog = []
        for r in results:
            try:
                meta = json.loads(r.value)
            except (TypeError, json.JSONDecodeError):
                raise EsbFault(FaultCode.TRANSLATION,
                               f"unreadable discovery entry for {r.name}") from None
            catalog.append(DiscoveredOperation(
                operation=r.name,
                description=meta.get("description", ""),
                service=meta.get("service", ""),
                status=meta.get("status", ""),
                params=tuple((p["name"], p["kind"]) for p in meta.get("params", [])),
                returns=tuple((p["name"], p["kind"]) for p in meta.get("returns", [])),
            ))
        with self._lock:
            self._catalog = {entry.operation: entry for entry in catalog}
        return catalog

    def invoke(self, operation: str, params=None, *, timeout_s: float | None = None,
               retries: int | None = None,
               destination: str | None = None) -> tuple[ParamValue, ...]:
        if self.session is None:
            self.bind(timeout_s=timeout_s, retries=retries)
        if destination is None:
            with self._lock:
                entry = self._catalog.get(operation)
            destination = entry.service if entry else BUS_ALIAS
        return self._call(operation, self._build_params(operation, params),
                          destination, self.session, timeout_s, retries)

    def _build_params(self, operation: str, params) -> tuple[ParamValue, ...]:
        if params is None:
            return ()
        if isinstance(params, dict):
            with self._lock:
                entry = self._catalog.get(operation)
            kinds = dict(entry.params) if entry else {}
            out = []
            for name, value in params.items():
                kind = kinds.get(name)
                if kind == "float" and isinstance(value, int) and not isinstance(value, bool):
                    value = float(value)
                out.append(ParamValue.of(name, value))
            return tuple(out)
        return tuple(params)


def _carried_fault(body: bytes, status: int) -> EsbFault:
    try:
        obj = json.loads(body)
        return EsbFault(FaultCode(obj["fault"]), obj.get("detail", ""))
    except Exception:
        return EsbFault(FaultCode.SERVICE_DOWN, f"bus hop answered HTTP {status}")
