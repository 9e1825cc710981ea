"""HTTP surfaces of the bus.

Two listeners, deliberately separate:

* rover-facing: one path, ``POST /esb``, canonical XML in and out.
  Every request gets a well-formed envelope back, whatever the bytes.
* management: JSON over HTTP (``/ops/*``) for the service lifecycle,
  audit reads, a server-sent event stream of registry changes and audit
  records, the image sink, link-simulator tuning, and the static
  operator console.

Reads on the management surface are open; mutations require the shared
management credential in the ``X-Esb-Credential`` header.
"""

from __future__ import annotations

import http.client
import json
import mimetypes
import os
import queue
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .esb import EsbCore
from .model import EsbFault, FaultCode
from .registry import ConflictError, ServiceDescriptor, parse_endpoint
from .wire.rest import FAULT_STATUS

MAX_BODY_BYTES = 16 * 1024 * 1024
CREDENTIAL_HEADER = "X-Esb-Credential"


def _fault_body(code: str, detail: str) -> bytes:
    return json.dumps({"fault": code, "detail": detail}).encode("utf-8")


class _QuietHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    disable_nagle_algorithm = True

    def log_message(self, fmt, *args):  # stay silent under test load
        pass

    def read_body(self) -> bytes:
        length = self.headers.get("Content-Length")
        try:
            n = int(length) if length is not None else 0
        except ValueError:
            return b""
        if n <= 0:
            return b""
        if n > MAX_BODY_BYTES:
            raise EsbFault(FaultCode.VALIDATION, f"body of {n} bytes exceeds limit")
        return self.rfile.read(n)

    def send_payload(self, status: int, body: bytes, content_type: str,
                     extra_headers: dict | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for k, v in (extra_headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)

    def send_json(self, status: int, obj) -> None:
        self.send_payload(status, json.dumps(obj).encode("utf-8"), "application/json")


class RoverEndpointHandler(_QuietHandler):
    """The unified rover-facing endpoint: canonical XML over one path."""

    server: "RoverEndpointServer"

    def do_POST(self):
        if self.path != "/esb":
            self.send_json(404, {"fault": "VALIDATION", "detail": "rover endpoint is POST /esb"})
            return
        try:
            body = self.read_body()
        except EsbFault as exc:
            # oversized body is left unread; answer in-band and drop the link
            from .model import ResponseEnvelope
            from .wire import soap

            xml = soap.encode_response(ResponseEnvelope.for_fault("", exc.code, exc.detail))
            self.send_payload(200, xml, "text/xml; charset=utf-8", {"Connection": "close"})
            self.close_connection = True
            return
        xml = self.server.core.handle(body)
        self.send_payload(200, xml, "text/xml; charset=utf-8")

    def do_GET(self):
        self.send_json(404, {"fault": "VALIDATION", "detail": "rover endpoint is POST /esb"})


class RoverEndpointServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128
    allow_reuse_address = True

    def __init__(self, addr, core: EsbCore):
        super().__init__(addr, RoverEndpointHandler)
        self.core = core


class ManagementHandler(_QuietHandler):
    server: "ManagementServer"

    # -- plumbing -----------------------------------------------------------

    def _route(self, method: str):
        core = self.server.core
        split = urllib.parse.urlsplit(self.path)
        parts = [p for p in split.path.split("/") if p]
        try:
            handler = self._resolve(method, parts, split)
            handler(core)
        except EsbFault as exc:
            self.send_payload(FAULT_STATUS[exc.code],
                              _fault_body(exc.code.value, exc.detail), "application/json")
        except ConflictError as exc:
            self.send_payload(409, _fault_body("CONFLICT", str(exc)), "application/json")
        except BrokenPipeError:
            self.close_connection = True
        except Exception as exc:
            self.send_payload(500, _fault_body("INTERNAL", str(exc)), "application/json")

    def _resolve(self, method: str, parts: list[str], split):
        query = dict(urllib.parse.parse_qsl(split.query))
        if parts == ["esb"] and method == "POST":
            # same pipeline as the rover endpoint, exposed here so the
            # operator console can stay same-origin
            return lambda core: self.send_payload(
                200, core.handle(self.read_body()), "text/xml; charset=utf-8")
        if not parts or parts[0] != "ops":
            if method == "GET":
                return lambda core: self._serve_static(split.path)
            raise EsbFault(FaultCode.VALIDATION, f"no route for {method} {split.path}")
        tail = parts[1:]
        key = (method, tuple(tail[:1]))
        if key == ("GET", ("health",)):
            return lambda core: self.send_json(200, {"ok": True})
        if key == ("GET", ("services",)):
            if len(tail) == 1:
                return lambda core: self.send_json(
                    200, {"services": [d.to_json() for d in core.registry.services()]})
            name = tail[1]
            return lambda core: self.send_json(200, core.registry.get(name).to_json())
        if key == ("POST", ("services",)):
            if len(tail) == 3 and tail[2] == "status":
                return lambda core: self._set_status(core, tail[1])
            if len(tail) == 1:
                return self._publish
            raise EsbFault(FaultCode.VALIDATION, f"no route for POST {split.path}")
        if key == ("DELETE", ("services",)) and len(tail) == 2:
            return lambda core: self._unpublish(core, tail[1])
        if key == ("GET", ("operations",)):
            return self._list_operations
        if key == ("GET", ("audit",)):
            after = int(query.get("after", 0))
            return lambda core: self.send_json(
                200, {"records": [r.to_json() for r in core.audit.read(after)]})
        if key == ("GET", ("events",)):
            return self._stream_events
        if key == ("GET", ("dsn",)):
            return self._get_dsn
        if key == ("PUT", ("dsn",)):
            return self._put_dsn
        if key == ("POST", ("images",)):
            return self._store_image
        if key == ("GET", ("images",)) and len(tail) == 2:
            return lambda core: self.send_payload(
                200, core.images.load(tail[1]), "image/x-portable-pixmap")
        raise EsbFault(FaultCode.VALIDATION, f"no route for {method} {split.path}")

    def do_GET(self):
        self._route("GET")

    def do_POST(self):
        self._route("POST")

    def do_PUT(self):
        self._route("PUT")

    def do_DELETE(self):
        self._route("DELETE")

    def _require_credential(self, core):
        core.check_management(self.headers.get(CREDENTIAL_HEADER))

    def _json_body(self) -> dict:
        try:
            obj = json.loads(self.read_body().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise EsbFault(FaultCode.VALIDATION, f"body is not valid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise EsbFault(FaultCode.VALIDATION, "JSON body must be an object")
        return obj

    # -- service lifecycle ----------------------------------------------------

    def _publish(self, core):
        self._require_credential(core)
        try:
            descriptor = ServiceDescriptor.from_json(self._json_body())
        except ValueError as exc:
            raise EsbFault(FaultCode.VALIDATION, str(exc)) from None
        version = core.registry.publish(descriptor)
        self.send_json(200, {"service_name": descriptor.service_name, "version": version})

    def _unpublish(self, core, name):
        self._require_credential(core)
        removed = core.registry.unpublish(name)
        self.send_json(200, removed.to_json())

    def _set_status(self, core, name):
        self._require_credential(core)
        status = self._json_body().get("status")
        if not isinstance(status, str):
            raise EsbFault(FaultCode.VALIDATION, "body must carry a status string")
        previous = core.registry.set_status(name, status)
        self.send_json(200, {"service_name": name, "previous": previous})

    def _list_operations(self, core):
        listing = []
        for entry in core.registry.list_operations():
            _, sig = core.registry.lookup_by_operation(entry.operation)
            listing.append({
                "operation": entry.operation,
                "description": entry.description,
                "service": entry.service_name,
                "status": entry.status,
                "params": [{"name": n, "kind": k} for n, k in sig.params],
                "returns": [{"name": n, "kind": k} for n, k in sig.returns],
            })
        self.send_json(200, {"operations": listing})

    # -- images -----------------------------------------------------------------

    def _store_image(self, core):
        self._require_credential(core)
        storage_id = core.store_image(self.read_body())
        self.send_json(200, {"storage_id": storage_id})

    # -- events (SSE) -------------------------------------------------------------

    def _stream_events(self, core):
        q = core.events.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-store")
            self.send_header("Connection", "close")
            self.end_headers()
            self.wfile.write(b"retry: 2000\n\n")
            self.wfile.flush()
            while not self.server.stopping.is_set():
                try:
                    event, data = q.get(timeout=1.0)
                except queue.Empty:
                    self.wfile.write(b": keep-alive\n\n")
                    self.wfile.flush()
                    continue
                payload = json.dumps(data)
                self.wfile.write(f"event: {event}\ndata: {payload}\n\n".encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            core.events.unsubscribe(q)
            self.close_connection = True

    # -- link simulator pass-through ---------------------------------------------

    def _dsn_exchange(self, method: str, path: str, body: bytes | None = None) -> dict:
        control = self.server.dsn_control
        if control is None:
            raise EsbFault(FaultCode.UNKNOWN_SERVICE, "no link simulator attached")
        host, port, _ = parse_endpoint(control)
        conn = http.client.HTTPConnection(host, port, timeout=3.0)
        try:
            headers = {"Content-Type": "application/json"} if body else {}
            conn.request(method, path, body=body, headers=headers)
            resp = conn.getresponse()
            data = resp.read()
            if resp.status == 400:
                try:
                    detail = json.loads(data).get("detail", "")
                except (ValueError, AttributeError):
                    detail = data[:200].decode("utf-8", "replace")
                raise EsbFault(FaultCode.VALIDATION, detail)
            if resp.status != 200:
                raise EsbFault(FaultCode.INTERNAL,
                               f"link simulator answered HTTP {resp.status}: {data[:200]!r}")
            return json.loads(data)
        except OSError as exc:
            raise EsbFault(FaultCode.INTERNAL, f"link simulator unreachable: {exc}") from None
        finally:
            conn.close()

    def _get_dsn(self, core):
        if self.server.dsn_control is None:
            self.send_json(200, {"attached": False})
            return
        params = self._dsn_exchange("GET", "/params")
        stats = self._dsn_exchange("GET", "/stats")
        self.send_json(200, {"attached": True, "params": params, "stats": stats})

    def _put_dsn(self, core):
        self._require_credential(core)
        body = self.read_body()
        self._json_body_check(body)
        params = self._dsn_exchange("PUT", "/params", body)
        self.send_json(200, {"attached": True, "params": params})

    @staticmethod
    def _json_body_check(body: bytes) -> None:
        try:
            if not isinstance(json.loads(body.decode("utf-8")), dict):
                raise ValueError("not an object")
        except (UnicodeDecodeError, ValueError) as exc:
            raise EsbFault(FaultCode.VALIDATION, f"body is not a JSON object: {exc}") from None

    # -- static console ------------------------------------------------------------

    def _serve_static(self, path: str):
        root = self.server.console_dir
        if root is None:
            raise EsbFault(FaultCode.VALIDATION, "no console assets configured")
        rel = "index.html" if path in ("/", "/ui", "/ui/") else path.removeprefix("/ui/").lstrip("/")
        full = os.path.normpath(os.path.join(root, rel))
        if not full.startswith(os.path.abspath(root)):
            raise EsbFault(FaultCode.VALIDATION, "bad asset path")
        if not os.path.isfile(full):
            raise EsbFault(FaultCode.UNKNOWN_SERVICE, f"no asset {rel}")
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as f:
            self.send_payload(200, f.read(), ctype)


class ManagementServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128
    allow_reuse_address = True

    def __init__(self, addr, core: EsbCore, console_dir=None, dsn_control=None):
        super().__init__(addr, ManagementHandler)
        self.core = core
        self.console_dir = os.path.abspath(console_dir) if console_dir else None
        self.dsn_control = dsn_control
        self.stopping = threading.Event()


class EsbServer:
    """Owns the core and both listeners; start() binds, stop() tears down."""

    def __init__(self, core: EsbCore, rover_addr=("127.0.0.1", 0),
                 management_addr=("127.0.0.1", 0), console_dir=None,
                 dsn_control=None):
        self.core = core
        self._rover = RoverEndpointServer(rover_addr, core)
        self._management = ManagementServer(management_addr, core,
                                            console_dir=console_dir,
                                            dsn_control=dsn_control)
        self._threads: list[threading.Thread] = []

    @property
    def rover_port(self) -> int:
        return self._rover.server_address[1]

    @property
    def management_port(self) -> int:
        return self._management.server_address[1]

    @property
    def rover_url(self) -> str:
        return f"http://127.0.0.1:{self.rover_port}/esb"

    @property
    def management_url(self) -> str:
        return f"http://127.0.0.1:{self.management_port}"

    @property
    def dsn_control(self):
        return self._management.dsn_control

    @dsn_control.setter
    def dsn_control(self, endpoint):
        self._management.dsn_control = endpoint

    def start(self) -> "EsbServer":
        for server, name in ((self._rover, "esb-rover"), (self._management, "esb-mgmt")):
            t = threading.Thread(target=lambda s=server: s.serve_forever(poll_interval=0.05),
                                 name=name, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def stop(self) -> None:
        self._management.stopping.set()
        for server in (self._rover, self._management):
            server.shutdown()
            server.server_close()
        for t in self._threads:
            t.join(timeout=5)
        self.core.audit.close()


def server_from_config(cfg) -> EsbServer:
    """Build core + listeners from a flat key=value Config."""
    import tempfile

    core = EsbCore(
        rover_secret=cfg.get("rover_secret", "rover-secret"),
        management_secret=cfg.get("management_secret", "mgmt-secret"),
        image_dir=cfg.get("image_dir") or tempfile.mkdtemp(prefix="rover-esb-images-"),
        audit_capacity=cfg.get_int("audit_capacity", 10_000),
        audit_file=cfg.get("audit_file"),
        invoke_timeout_s=cfg.get_float("invoke_timeout_s", 5.0),
    )
    host = cfg.get("host", "127.0.0.1")
    return EsbServer(
        core,
        rover_addr=(host, cfg.get_int("rover_port", 8100)),
        management_addr=(host, cfg.get_int("management_port", 8200)),
        console_dir=cfg.get("console_dir"),
        dsn_control=cfg.get("dsn_control"),
    )


def main(argv=None):
    import argparse
    import threading

    from .config import Config

    parser = argparse.ArgumentParser(description="run the bus alone (no fixture services)")
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--rover-port", type=int)
    parser.add_argument("--management-port", type=int)
    args = parser.parse_args(argv)
    cfg = Config.from_file(args.config) if args.config else Config()
    if args.rover_port is not None:
        cfg.values["rover_port"] = str(args.rover_port)
    if args.management_port is not None:
        cfg.values["management_port"] = str(args.management_port)
    server = server_from_config(cfg).start()
    print(f"rover endpoint {server.rover_url}")
    print(f"management     {server.management_url}/ops/services", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        server.stop()


if __name__ == "__main__":
    main()
