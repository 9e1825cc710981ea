"""Deep-space link simulator: a parametric delay/loss channel wrapped
around the rover<->bus HTTP hop as a transparent local proxy.

Per transmitted message, a deterministic generator seeded from
(seed, direction, message ordinal) draws the outcome: with probability
``loss_probability`` the payload is DROPPED, otherwise it is delivered
unmodified after a delay uniform in [one_way_delay, one_way_delay +
jitter].  A dropped uplink or downlink shows up to the rover exactly as
deep space would show it: silence until its own deadline expires.

The proxy runs two listeners: the relay port (rover traffic) and a
control port (GET/PUT /params, GET /stats) that the bus management API
fronts as ``/ops/dsn``.
"""

from __future__ import annotations

import hashlib
import json
import random
import select
import threading
import time
from dataclasses import asdict, dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .registry import parse_endpoint

UPLINK = "uplink"
DOWNLINK = "downlink"

DROPPED = object()  # sentinel: the channel ate the payload

# desk-scale defaults; interplanetary minutes are configuration
DEFAULT_PARAMS = dict(one_way_delay_ms=200.0, jitter_ms=50.0,
                      loss_probability=0.0, seed=0)

_HOLD_MAX_S = 30.0


@dataclass(frozen=True)
class LinkParams:
    one_way_delay_ms: float = 200.0
    jitter_ms: float = 50.0
    loss_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.one_way_delay_ms < 0 or self.jitter_ms < 0:
            raise ValueError("delay and jitter must be non-negative")
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError("loss probability must be within [0, 1]")

    def to_json(self) -> dict:
        return asdict(self)


def draw(params: LinkParams, direction: str, ordinal: int) -> tuple[bool, float]:
    """Deterministic (dropped, delay_ms) for one message.

    The RNG seed is derived by hashing (seed, direction, ordinal), so an
    independent replay of the same triple reproduces the outcome exactly.
    """
    material = f"{params.seed}:{direction}:{ordinal}".encode("ascii")
    rng = random.Random(int.from_bytes(hashlib.sha256(material).digest()[:8], "big"))
    if rng.random() < params.loss_probability:
        return True, 0.0
    return False, params.one_way_delay_ms + rng.uniform(0.0, params.jitter_ms)


class LinkStats:
    def __init__(self):
        self._lock = threading.Lock()
        self._counts = {d: {"sent": 0, "delivered": 0, "dropped": 0}
                        for d in (UPLINK, DOWNLINK)}

    def note_sent(self, direction: str) -> None:
        with self._lock:
            self._counts[direction]["sent"] += 1

    def note_outcome(self, direction: str, dropped: bool) -> None:
        with self._lock:
            self._counts[direction]["dropped" if dropped else "delivered"] += 1

    def to_json(self) -> dict:
        with self._lock:
            out = {d: dict(c) for d, c in self._counts.items()}
        for c in out.values():
            c["in_flight"] = c["sent"] - c["delivered"] - c["dropped"]
        totals = {k: sum(c[k] for c in out.values())
                  for k in ("sent", "delivered", "dropped", "in_flight")}
        return {**out, "total": totals}


class Link:
    """The channel model proper; transport-agnostic and fully testable
    without sockets.  transmit() blocks the calling thread for the drawn
    delay, so sequential sends with equal delays deliver in order."""

    def __init__(self, params: LinkParams | None = None, clock=time.sleep):
        self._lock = threading.Lock()
        self.params = params or LinkParams()
        self.stats = LinkStats()
        self._ordinals = {UPLINK: 0, DOWNLINK: 0}
        self._clock = clock

    def snapshot_params(self) -> LinkParams:
        with self._lock:
            return self.params

    def update_params(self, **changes) -> LinkParams:
        with self._lock:
            self.params = replace(self.params, **changes)
            return self.params

    def transmit(self, payload: bytes, direction: str):
        """Deliver payload after the drawn delay, or return DROPPED."""
        if direction not in (UPLINK, DOWNLINK):
            raise ValueError(f"unknown direction {direction!r}")
        with self._lock:
            params = self.params
            ordinal = self._ordinals[direction]
            self._ordinals[direction] += 1
        self.stats.note_sent(direction)
        dropped, delay_ms = draw(params, direction, ordinal)
        if dropped:
            self.stats.note_outcome(direction, dropped=True)
            return DROPPED
        if delay_ms > 0:
            self._clock(delay_ms / 1000.0)
        self.stats.note_outcome(direction, dropped=False)
        return payload


class _RelayHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    disable_nagle_algorithm = True
    server: "_RelayServer"

    def log_message(self, fmt, *args):
        pass

    def _hold_until_peer_gives_up(self):
        """A dropped message produces silence, not an error: keep the
        socket open until the client closes or the hold cap expires."""
        deadline = time.monotonic() + _HOLD_MAX_S
        conn = self.connection
        while time.monotonic() < deadline:
            readable, _, _ = select.select([conn], [], [], 0.25)
            if readable:
                try:
                    if conn.recv(4096) == b"":
                        break
                except OSError:
                    break
        self.close_connection = True

    def do_POST(self):
        proxy = self.server.proxy
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length > 0 else b""

        sent = proxy.link.transmit(body, UPLINK)
        if sent is DROPPED:
            self._hold_until_peer_gives_up()
            return
        try:
            status, reply, ctype = proxy.forward(self.path, sent,
                                                 self.headers.get("Content-Type"))
        except OSError as exc:
            self.send_response(502)
            payload = json.dumps({"fault": "SERVICE_DOWN",
                                  "detail": f"upstream unreachable: {exc}"}).encode()
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)
            return

        back = proxy.link.transmit(reply, DOWNLINK)
        if back is DROPPED:
            self._hold_until_peer_gives_up()
            return
        self.send_response(status)
        self.send_header("Content-Type", ctype or "application/octet-stream")
        self.send_header("Content-Length", str(len(back)))
        self.end_headers()
        self.wfile.write(back)


class _RelayServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128
    allow_reuse_address = True

    def __init__(self, addr, proxy: "DsnProxy"):
        super().__init__(addr, _RelayHandler)
        self.proxy = proxy


class _ControlHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    disable_nagle_algorithm = True
    server: "_ControlServer"

    def log_message(self, fmt, *args):
        pass

    def _send_json(self, status: int, obj) -> None:
        payload = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def do_GET(self):
        link = self.server.proxy.link
        if self.path == "/params":
            self._send_json(200, link.snapshot_params().to_json())
        elif self.path == "/stats":
            self._send_json(200, link.stats.to_json())
        else:
            self._send_json(404, {"fault": "VALIDATION", "detail": f"no route {self.path}"})

    def do_PUT(self):
        if self.path != "/params":
            self._send_json(404, {"fault": "VALIDATION", "detail": f"no route {self.path}"})
            return
        link = self.server.proxy.link
        length = int(self.headers.get("Content-Length") or 0)
        try:
            changes = json.loads(self.rfile.read(length) or b"{}")
            known = set(DEFAULT_PARAMS)
            unknown = set(changes) - known
            if unknown:
                raise ValueError(f"unknown link parameters {sorted(unknown)}")
            updated = link.update_params(**changes)
        except (ValueError, TypeError) as exc:
            self._send_json(400, {"fault": "VALIDATION", "detail": str(exc)})
            return
        self._send_json(200, updated.to_json())


class _ControlServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128
    allow_reuse_address = True

    def __init__(self, addr, proxy: "DsnProxy"):
        super().__init__(addr, _ControlHandler)
        self.proxy = proxy


class DsnProxy:
    """Relay + control listeners around one Link."""

    def __init__(self, upstream: str, relay_addr=("127.0.0.1", 0),
                 control_addr=("127.0.0.1", 0), params: LinkParams | None = None):
        self.upstream_host, self.upstream_port, _ = parse_endpoint(
            upstream.removeprefix("http://").split("/")[0])
        self.link = Link(params)
        self._relay = _RelayServer(relay_addr, self)
        self._control = _ControlServer(control_addr, self)
        self._threads: list[threading.Thread] = []

    @property
    def relay_port(self) -> int:
        return self._relay.server_address[1]

    @property
    def control_port(self) -> int:
        return self._control.server_address[1]

    @property
    def relay_url(self) -> str:
        return f"http://127.0.0.1:{self.relay_port}"

    @property
    def control_endpoint(self) -> str:
        return f"127.0.0.1:{self.control_port}"

    def forward(self, path: str, body: bytes, content_type: str | None):
        from .adapters import http_connection

        conn = http_connection(self.upstream_host, self.upstream_port, 60.0)
        try:
            conn.request("POST", path, body=body,
                         headers={"Content-Type": content_type or "application/octet-stream"})
            resp = conn.getresponse()
            return resp.status, resp.read(), resp.getheader("Content-Type")
        finally:
            conn.close()

    def start(self) -> "DsnProxy":
        for server, name in ((self._relay, "dsn-relay"), (self._control, "dsn-control")):
            t = threading.Thread(target=lambda s=server: s.serve_forever(poll_interval=0.05),
                                 name=name, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def stop(self) -> None:
        for server in (self._relay, self._control):
            server.shutdown()
            server.server_close()
        for t in self._threads:
            t.join(timeout=5)


def main(argv=None):
    import argparse

    parser = argparse.ArgumentParser(description="deep-space link simulator proxy")
    parser.add_argument("--listen-port", type=int, default=8300)
    parser.add_argument("--control-port", type=int, default=8301)
    parser.add_argument("--upstream", required=True,
                        help="bus rover endpoint host:port, e.g. 127.0.0.1:8100")
    parser.add_argument("--delay-ms", type=float, default=DEFAULT_PARAMS["one_way_delay_ms"])
    parser.add_argument("--jitter-ms", type=float, default=DEFAULT_PARAMS["jitter_ms"])
    parser.add_argument("--loss", type=float, default=DEFAULT_PARAMS["loss_probability"])
    parser.add_argument("--seed", type=int, default=DEFAULT_PARAMS["seed"])
    args = parser.parse_args(argv)
    proxy = DsnProxy(args.upstream,
                     relay_addr=("127.0.0.1", args.listen_port),
                     control_addr=("127.0.0.1", args.control_port),
                     params=LinkParams(args.delay_ms, args.jitter_ms, args.loss, args.seed))
    proxy.start()
    print(f"relay http://127.0.0.1:{proxy.relay_port} -> "
          f"{proxy.upstream_host}:{proxy.upstream_port}; control :{proxy.control_port}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        proxy.stop()


if __name__ == "__main__":
    main()
