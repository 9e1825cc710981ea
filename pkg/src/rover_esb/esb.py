"""The bus core: session auth, the request pipeline, and the image sink.

``handle`` runs the full pipeline for one canonical-XML request:

    validate -> session check -> resolve operation -> status gate ->
    translate -> route to adapter -> execute -> translate reply -> encode

Every stage appends an audit record; any failure becomes an in-band
fault envelope (handle never raises), recorded as FAULTED.  Two
operations are served by the bus itself and never routed: ``Bind``
(session issue against the shared rover secret) and
``DiscoverOperations`` (the registry's operation listing, open by
design: callers discover before they can bind).

Three consecutive SERVICE_DOWN results against one service mark it
FAILED in the registry; only an explicit status change brings it back.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import queue
import secrets
import threading
import time
import uuid
from dataclasses import dataclass

from .adapters import ADAPTERS, DEFAULT_TIMEOUT_S
from .audit import AuditLog, Recorder
from .model import (
    EsbFault,
    FaultCode,
    ParamValue,
    RequestEnvelope,
    ResponseEnvelope,
)
from .registry import ACTIVE, FAILED, Registry
from .services.imageops import ppm_decode
from .translator import translate_request, translate_response
from .wire import soap

BUS_ALIAS = "esb"
CONSECUTIVE_DOWN_LIMIT = 3


@dataclass(frozen=True)
class Session:
    session_id: str
    client: str
    created_at: float


class SessionStore:
    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def create(self, client: str) -> Session:
        s = Session(secrets.token_hex(16), client, time.time())
        with self._lock:
            self._sessions[s.session_id] = s
        return s

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            return self._sessions.get(session_id)

    def __len__(self):
        with self._lock:
            return len(self._sessions)


class ImageStore:
    """Content-addressed image files: id = lowercase hex SHA-256 of the
    payload; storing the same bytes twice keeps one copy."""

    def __init__(self, directory):
        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)
        self._lock = threading.Lock()

    def store(self, payload: bytes) -> str:
        if not payload:
            raise EsbFault(FaultCode.VALIDATION, "empty image payload")
        try:
            ppm_decode(payload)
        except ValueError as exc:
            raise EsbFault(FaultCode.VALIDATION, f"payload is not a valid PPM image: {exc}") from None
        storage_id = hashlib.sha256(payload).hexdigest()
        path = self.path(storage_id)
        try:
            with self._lock:
                if not os.path.exists(path):
                    tmp = f"{path}.tmp-{uuid.uuid4().hex}"
                    with open(tmp, "wb") as f:
                        f.write(payload)
                    os.replace(tmp, path)
        except OSError as exc:
            raise EsbFault(FaultCode.INTERNAL, f"image store failure: {exc}") from None
        return storage_id

    def path(self, storage_id: str) -> str:
        return os.path.join(self.directory, f"{storage_id}.ppm")

    def load(self, storage_id: str) -> bytes:
        if not storage_id.isalnum():
            raise EsbFault(FaultCode.VALIDATION, "malformed storage id")
        try:
            with open(self.path(storage_id), "rb") as f:
                return f.read()
        except FileNotFoundError:
            raise EsbFault(FaultCode.UNKNOWN_SERVICE, f"no stored image {storage_id}") from None
        except OSError as exc:
            raise EsbFault(FaultCode.INTERNAL, f"image store failure: {exc}") from None

    def count(self) -> int:
        return len([n for n in os.listdir(self.directory) if n.endswith(".ppm")])


class EventHub:
    """Fan-out of (event, data) pairs to any number of subscriber queues."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers: list[queue.SimpleQueue] = []

    def publish(self, event: str, data: dict) -> None:
        with self._lock:
            subs = list(self._subscribers)
        for q in subs:
            q.put((event, data))

    def subscribe(self) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)


class EsbCore:
    def __init__(self, *, rover_secret: str, management_secret: str,
                 image_dir, audit_capacity: int = 10_000, audit_file=None,
                 invoke_timeout_s: float = DEFAULT_TIMEOUT_S, adapters=None):
        self.events = EventHub()
        self.registry = Registry(on_change=self._registry_changed)
        self.audit = AuditLog(audit_capacity, audit_file,
                              on_record=lambda r: self.events.publish("audit", r.to_json()))
        self.sessions = SessionStore()
        self.images = ImageStore(image_dir)
        self.rover_secret = rover_secret
        self.management_secret = management_secret
        self.invoke_timeout_s = invoke_timeout_s
        self.adapters = dict(adapters or ADAPTERS)
        self._down_lock = threading.Lock()
        self._down_counts: dict[str, int] = {}

    # -- registry side effects -------------------------------------------

    def _registry_changed(self, change: dict) -> None:
        if change["change"] in ("publish", "unpublish") or change.get("status") == ACTIVE:
            with self._down_lock:
                self._down_counts.pop(change["service"], None)
        self.events.publish("registry", change)

    def _note_exchange(self, service_name: str, fault: FaultCode | None) -> None:
        if fault is not None and fault is not FaultCode.SERVICE_DOWN:
            return
        with self._down_lock:
            if fault is None:
                self._down_counts.pop(service_name, None)
                return
            count = self._down_counts.get(service_name, 0) + 1
            self._down_counts[service_name] = count
        if count >= CONSECUTIVE_DOWN_LIMIT:
            try:
                if self.registry.get(service_name).status == ACTIVE:
                    self.registry.set_status(service_name, FAILED)
            except EsbFault:
                pass  # unpublished meanwhile

    # -- pipeline ----------------------------------------------------------

    def handle(self, request_xml: bytes) -> bytes:
        """One full pipeline run; always returns a canonical XML response."""
        try:
            response = self._handle_checked(request_xml)
        except Exception as exc:  # fault totality: nothing may escape
            response = ResponseEnvelope.for_fault(
                "", FaultCode.INTERNAL, f"unexpected pipeline error: {exc}")
        return soap.encode_response(response)

    def _handle_checked(self, request_xml: bytes) -> ResponseEnvelope:
        try:
            diagnostics = soap.validate(request_xml)
            if diagnostics:
                raise EsbFault(FaultCode.VALIDATION, "; ".join(diagnostics))
            env = soap.decode(request_xml)
            if not isinstance(env, RequestEnvelope):
                raise EsbFault(FaultCode.VALIDATION, "expected a request envelope")
        except EsbFault as exc:
            rec = Recorder(self.audit, f"ingress-{uuid.uuid4().hex[:12]}")
            rec.step("RECEIVED", f"{len(request_xml)} bytes (unparseable)")
            rec.step("FAULTED", f"{exc.code.value}: {exc.detail}")
            return ResponseEnvelope.for_fault("", exc.code, exc.detail)

        rec = Recorder(self.audit, env.message_id)
        rec.step("RECEIVED", f"{len(request_xml)} bytes from {env.source or '?'}")
        rec.step("VALIDATED", "grammar and required headers ok")
        try:
            return self._process(env, rec)
        except EsbFault as exc:
            rec.step("FAULTED", f"{exc.code.value}: {exc.detail}")
            return ResponseEnvelope.for_fault(env.message_id, exc.code, exc.detail)

    def _process(self, env: RequestEnvelope, rec: Recorder) -> ResponseEnvelope:
        if env.operation == "Bind":
            return self._bind(env, rec)
        if env.operation == "DiscoverOperations":
            return self._discover(env, rec)

        if env.session is None or self.sessions.get(env.session) is None:
            raise EsbFault(FaultCode.AUTH_FAILED, "no valid session; bind first")

        desc, sig = self.registry.lookup_by_operation(env.operation)
        rec.step("RESOLVED", f"{env.operation} -> {desc.service_name} ({desc.protocol.value})")
        if env.destination not in (BUS_ALIAS, desc.service_name):
            raise EsbFault(
                FaultCode.VALIDATION,
                f"destination {env.destination!r} does not provide {env.operation}",
            )
        if desc.status == FAILED:
            raise EsbFault(FaultCode.SERVICE_DOWN,
                           f"{desc.service_name} is marked FAILED")

        outbound = translate_request(env, sig, desc.protocol)
        rec.step("TRANSLATED", f"SOAP -> {desc.protocol.value}")

        adapter = self.adapters[desc.protocol]
        rec.step("ROUTED", f"{desc.protocol.value} adapter -> {desc.endpoint}")
        try:
            result = adapter.invoke(desc.endpoint, outbound, self.invoke_timeout_s)
        except EsbFault as exc:
            self._note_exchange(desc.service_name, exc.code)
            raise
        self._note_exchange(desc.service_name, None)
        rec.step("EXECUTED", f"service answered in {result.elapsed_ms:.1f} ms")

        response = translate_response(result.raw, desc.protocol, env,
                                      returns=sig.return_kinds())
        rec.step("RESPONSE_TRANSLATED", f"{desc.protocol.value} -> SOAP")
        detail = ("OK, %d results" % len(response.results) if response.status == "OK"
                  else f"service fault {response.fault.code.value}")
        rec.step("DELIVERED", detail)
        return response

    # -- bus-local operations ---------------------------------------------

    def _bind(self, env: RequestEnvelope, rec: Recorder) -> ResponseEnvelope:
        credential = env.param("credential")
        if credential is None or credential.kind != "text":
            raise EsbFault(FaultCode.VALIDATION, "Bind requires a text param 'credential'")
        if not hmac.compare_digest(credential.value, self.rover_secret):
            raise EsbFault(FaultCode.AUTH_FAILED, "bad credential")
        session = self.sessions.create(env.source or "anonymous")
        rec.step("DELIVERED", f"session issued to {session.client}")
        return ResponseEnvelope.ok(env.message_id,
                                   [ParamValue("session", "text", session.session_id)])

    def _discover(self, env: RequestEnvelope, rec: Recorder) -> ResponseEnvelope:
        results = []
        for entry in self.registry.list_operations():
            _, sig = self.registry.lookup_by_operation(entry.operation)
            results.append(ParamValue(entry.operation, "text", json.dumps({
                "description": entry.description,
                "service": entry.service_name,
                "status": entry.status,
                "params": [{"name": n, "kind": k} for n, k in sig.params],
                "returns": [{"name": n, "kind": k} for n, k in sig.returns],
            })))
        rec.step("DELIVERED", f"{len(results)} operations listed")
        return ResponseEnvelope.ok(env.message_id, results)

    # -- image sink ---------------------------------------------------------

    def store_image(self, payload: bytes) -> str:
        return self.images.store(payload)

    def check_management(self, credential: str | None) -> None:
        if credential is None or not hmac.compare_digest(credential, self.management_secret):
            raise EsbFault(FaultCode.AUTH_FAILED, "bad management credential")
