"""Shared runtime for the fixture services: operation dispatch with
per-op call counters, and self-registration with the bus.

Dispatch resolves an exact operation name first; a name of the form
``Prefix_Op`` falls back to ``Op``.  That convention is what lets a
"derived" service descriptor (new name, prefixed operations) reuse a
running endpoint without redeploying code.
"""

from __future__ import annotations

import http.client
import json
import threading
import time

from ..model import EsbFault, FaultCode, ParamValue
from ..registry import OperationSignature, ServiceDescriptor, parse_endpoint
from ..translator import coerce_params


class OperationTable:
    """Signature-checked dispatch table; every call is counted."""

    def __init__(self):
        self._entries: dict[str, tuple[OperationSignature, callable]] = {}
        self._lock = threading.Lock()
        self.calls: dict[str, int] = {}

    def add(self, sig: OperationSignature, impl) -> None:
        self._entries[sig.name] = (sig, impl)

    def signatures(self) -> tuple[OperationSignature, ...]:
        return tuple(sig for sig, _ in self._entries.values())

    def resolve(self, operation: str) -> tuple[OperationSignature, callable]:
        entry = self._entries.get(operation)
        if entry is None and "_" in operation:
            entry = self._entries.get(operation.split("_", 1)[1])
        if entry is None:
            raise EsbFault(FaultCode.UNKNOWN_OPERATION, f"service does not implement {operation!r}")
        return entry

    def param_kinds(self, operation: str) -> dict[str, str]:
        sig, _ = self.resolve(operation)
        return sig.param_kinds()

    def dispatch(self, operation: str, params) -> list[ParamValue]:
        sig, impl = self.resolve(operation)
        checked = coerce_params(params, sig)
        with self._lock:
            self.calls[operation] = self.calls.get(operation, 0) + 1
        args = {p.name: p.value for p in checked}
        try:
            return impl(**args)
        except ValueError as exc:
            raise EsbFault(FaultCode.VALIDATION, str(exc)) from None

    def total_calls(self) -> int:
        with self._lock:
            return sum(self.calls.values())


def post_json(url_host: str, port: int, path: str, obj, headers=None,
              timeout_s: float = 5.0) -> tuple[int, bytes]:
    conn = http.client.HTTPConnection(url_host, port, timeout=timeout_s)
    try:
        body = json.dumps(obj).encode("utf-8")
        conn.request("POST", path, body=body,
                     headers={"Content-Type": "application/json", **(headers or {})})
        resp = conn.getresponse()
        return resp.status, resp.read()
    finally:
        conn.close()


def register_with_bus(management_url: str, descriptor: ServiceDescriptor,
                      credential: str, attempts: int = 40,
                      delay_s: float = 0.25) -> int:
    """Publish the descriptor, retrying while the bus comes up."""
    parsed = management_url.removeprefix("http://")
    host, port, _ = parse_endpoint(parsed if ":" in parsed else f"{parsed}:80")
    last_error = None
    for _ in range(attempts):
        try:
            status, body = post_json(host, port, "/ops/services", descriptor.to_json(),
                                     headers={"X-Esb-Credential": credential})
            if status == 200:
                return json.loads(body)["version"]
            last_error = f"HTTP {status}: {body[:200]!r}"
        except OSError as exc:
            last_error = str(exc)
        time.sleep(delay_s)
    raise RuntimeError(f"could not register {descriptor.service_name}: {last_error}")


class ServiceBase:
    """Port binding, registration and lifecycle shared by all fixtures."""

    service_name: str
    protocol = None

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 management_url: str | None = None, credential: str | None = None):
        self.host = host
        self.requested_port = port
        self.management_url = management_url
        self.credential = credential
        self.table = OperationTable()
        self._threads: list[threading.Thread] = []

    # subclasses set self._server in _bind() and may override endpoint()

    def endpoint(self) -> str:
        return f"{self.host}:{self.port}"

    def descriptor(self) -> ServiceDescriptor:
        return ServiceDescriptor(self.service_name, self.protocol, self.endpoint(),
                                 self.table.signatures())

    def start(self) -> "ServiceBase":
        self._bind()
        t = threading.Thread(target=lambda: self._server.serve_forever(poll_interval=0.05),
                             name=self.service_name, daemon=True)
        t.start()
        self._threads.append(t)
        if self.management_url:
            register_with_bus(self.management_url, self.descriptor(), self.credential or "")
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        for t in self._threads:
            t.join(timeout=5)

    def run_forever(self) -> None:
        self._bind()
        if self.management_url:
            threading.Thread(target=register_with_bus,
                             args=(self.management_url, self.descriptor(),
                                   self.credential or ""),
                             daemon=True).start()
        self._server.serve_forever()
