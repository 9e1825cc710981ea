"""Run the whole testbed in one process: bus, the three fixture
services, and (optionally) the link-simulator proxy in front of the
rover endpoint.

    python -m rover_esb.stack [--config file] [--no-dsn] ...

Listeners default to ephemeral ports; the chosen endpoints are printed
on startup.  Tests embed LocalStack directly.
"""

from __future__ import annotations

import argparse
import tempfile
import threading

from .config import Config
from .dsn import DsnProxy, LinkParams
from .esb import EsbCore
from .esb_http import EsbServer
from .services.environment import EnvironmentService
from .services.imaging import ImagingService
from .services.spectrometry import SpectrometryService

DEFAULT_ROVER_SECRET = "rover-secret"
DEFAULT_MANAGEMENT_SECRET = "mgmt-secret"


class LocalStack:
    def __init__(self, *, rover_secret: str = DEFAULT_ROVER_SECRET,
                 management_secret: str = DEFAULT_MANAGEMENT_SECRET,
                 image_dir=None, invoke_timeout_s: float = 5.0,
                 audit_capacity: int = 10_000, audit_file=None,
                 rover_port: int = 0, management_port: int = 0,
                 service_ports=(0, 0, 0), console_dir=None,
                 with_dsn: bool = True, dsn_params: LinkParams | None = None,
                 dsn_ports=(0, 0), host: str = "127.0.0.1"):
        if image_dir is None:
            self._image_tmp = tempfile.TemporaryDirectory(prefix="rover-esb-images-")
            image_dir = self._image_tmp.name
        else:
            self._image_tmp = None
        self.core = EsbCore(rover_secret=rover_secret,
                            management_secret=management_secret,
                            image_dir=image_dir,
                            audit_capacity=audit_capacity,
                            audit_file=audit_file,
                            invoke_timeout_s=invoke_timeout_s)
        self.esb = EsbServer(self.core, rover_addr=(host, rover_port),
                             management_addr=(host, management_port),
                             console_dir=console_dir)
        self.management_secret = management_secret
        self.rover_secret = rover_secret
        self._host = host
        self._service_ports = service_ports
        self._with_dsn = with_dsn
        self._dsn_params = dsn_params
        self._dsn_ports = dsn_ports
        self.proxy: DsnProxy | None = None
        self.services = {}

    def start(self) -> "LocalStack":
        self.esb.start()
        mgmt = self.esb.management_url
        cred = self.management_secret
        host = self._host
        p_img, p_spec, p_env = self._service_ports
        self.services = {
            "ImagingService": ImagingService(host=host, port=p_img,
                                             management_url=mgmt, credential=cred).start(),
            "SpectrometryService": SpectrometryService(host=host, port=p_spec,
                                                       management_url=mgmt,
                                                       credential=cred).start(),
            "EnvironmentService": EnvironmentService(host=host, port=p_env,
                                                     management_url=mgmt,
                                                     credential=cred).start(),
        }
        if self._with_dsn:
            self.proxy = DsnProxy(f"{host}:{self.esb.rover_port}",
                                  relay_addr=(host, self._dsn_ports[0]),
                                  control_addr=(host, self._dsn_ports[1]),
                                  params=self._dsn_params).start()
            self.esb.dsn_control = self.proxy.control_endpoint
        return self

    @property
    def rover_url(self) -> str:
        """Where the rover should talk: through the link when present."""
        if self.proxy is not None:
            return f"{self.proxy.relay_url}/esb"
        return self.esb.rover_url

    @property
    def direct_rover_url(self) -> str:
        return self.esb.rover_url

    @property
    def management_url(self) -> str:
        return self.esb.management_url

    def stop(self) -> None:
        if self.proxy is not None:
            self.proxy.stop()
        for service in self.services.values():
            service.stop()
        self.esb.stop()
        if self._image_tmp is not None:
            self._image_tmp.cleanup()

    def __enter__(self) -> "LocalStack":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()


def _default_console_dir():
    import os

    candidate = os.path.join(os.getcwd(), "frontend", "dist")
    return candidate if os.path.isfile(os.path.join(candidate, "index.html")) else None


def main(argv=None):
    parser = argparse.ArgumentParser(description="run bus + fixture services + link simulator")
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--rover-port", type=int)
    parser.add_argument("--management-port", type=int)
    parser.add_argument("--no-dsn", action="store_true")
    parser.add_argument("--delay-ms", type=float)
    parser.add_argument("--jitter-ms", type=float)
    parser.add_argument("--loss", type=float)
    parser.add_argument("--console-dir", help="static assets for the operator console")
    args = parser.parse_args(argv)

    cfg = Config.from_file(args.config) if args.config else Config()
    params = LinkParams(
        one_way_delay_ms=args.delay_ms if args.delay_ms is not None
        else cfg.get_float("dsn_delay_ms", 200.0),
        jitter_ms=args.jitter_ms if args.jitter_ms is not None
        else cfg.get_float("dsn_jitter_ms", 50.0),
        loss_probability=args.loss if args.loss is not None
        else cfg.get_float("dsn_loss", 0.0),
        seed=cfg.get_int("dsn_seed", 0),
    )
    stack = LocalStack(
        rover_secret=cfg.get("rover_secret", DEFAULT_ROVER_SECRET),
        management_secret=cfg.get("management_secret", DEFAULT_MANAGEMENT_SECRET),
        image_dir=cfg.get("image_dir"),
        invoke_timeout_s=cfg.get_float("invoke_timeout_s", 5.0),
        audit_capacity=cfg.get_int("audit_capacity", 10_000),
        audit_file=cfg.get("audit_file"),
        rover_port=args.rover_port if args.rover_port is not None
        else cfg.get_int("rover_port", 8100),
        management_port=args.management_port if args.management_port is not None
        else cfg.get_int("management_port", 8200),
        service_ports=(cfg.get_int("imaging_port", 8101),
                       cfg.get_int("spectrometry_port", 8102),
                       cfg.get_int("environment_port", 8103)),
        console_dir=args.console_dir or cfg.get("console_dir") or _default_console_dir(),
        with_dsn=not args.no_dsn and cfg.get_bool("dsn_enabled", True),
        dsn_params=params,
        dsn_ports=(cfg.get_int("dsn_relay_port", 8300),
                   cfg.get_int("dsn_control_port", 8301)),
        host=cfg.get("host", "127.0.0.1"),
    )
    stack.start()
    print(f"rover endpoint   {stack.rover_url}")
    if stack.proxy is not None:
        print(f"  (direct, no link: {stack.direct_rover_url})")
    print(f"management api   {stack.management_url}/ops/services", flush=True)
    print(f"operator console {stack.management_url}/ui/")
    for name, svc in stack.services.items():
        print(f"{name:<18} {svc.protocol.value.lower():<6} {svc.endpoint()}")
    print("Ctrl+C to stop", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        stack.stop()


if __name__ == "__main__":
    main()
