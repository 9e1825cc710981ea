"""The rover command line.

    rover discover
    rover invoke <Operation> [name=value ...] [--save name=path]
    rover mission <file>

Exit codes: 0 ok, 1 fault or failed mission, 2 usage/parse error.
"""

from __future__ import annotations

import argparse
import importlib.resources
import os
import sys

from .client import RoverClient
from .mission import MissionError, parse_mission, run_mission, typed_param
from .model import EsbFault

DEFAULT_ESB_URL = os.environ.get("ROVER_ESB_URL", "http://127.0.0.1:8100/esb")
DEFAULT_CREDENTIAL = os.environ.get("ROVER_CREDENTIAL", "rover-secret")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rover", description="rover-side bus client")
    parser.add_argument("--esb-url", default=DEFAULT_ESB_URL,
                        help="bus rover endpoint (default %(default)s)")
    parser.add_argument("--credential", default=DEFAULT_CREDENTIAL)
    parser.add_argument("--client-id", default="rover-1")
    parser.add_argument("--timeout", type=float, default=5.0,
                        help="per-attempt reply deadline in seconds")
    parser.add_argument("--retries", type=int, default=0,
                        help="extra attempts on TIMEOUT/SERVICE_DOWN")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("discover", help="list operations exposed by the bus")

    invoke = sub.add_parser("invoke", help="invoke one operation")
    invoke.add_argument("operation")
    invoke.add_argument("params", nargs="*", metavar="name=value",
                        help="use @path to send file bytes")
    invoke.add_argument("--save", action="append", default=[], metavar="name=path",
                        help="write a bytes result to a file")

    mission = sub.add_parser("mission", help="run a mission script")
    mission.add_argument("script", help="path, or the name of a bundled mission")
    return parser


def make_client(args) -> RoverClient:
    return RoverClient(args.esb_url, client_id=args.client_id,
                       credential=args.credential, timeout_s=args.timeout,
                       retries=args.retries)


def cmd_discover(args) -> int:
    client = make_client(args)
    catalog = client.discover()
    if not catalog:
        print("no operations published")
        return 0
    width = max(len(c.operation) for c in catalog)
    for c in catalog:
        flag = "" if c.status == "ACTIVE" else f" [{c.status}]"
        print(f"{c.operation:<{width}}  {c.service}{flag}  {c.description}")
    return 0


def cmd_invoke(args, parser) -> int:
    client = make_client(args)
    try:
        catalog = {c.operation: c for c in client.discover()}
    except EsbFault:
        catalog = {}
    kinds = dict(catalog[args.operation].params) if args.operation in catalog else {}
    try:
        params = [typed_param(*pair.partition("=")[::2], kinds.get(pair.partition("=")[0]))
                  for pair in args.params]
        saves = dict(s.partition("=")[::2] for s in args.save)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))  # exits 2
    results = client.invoke(args.operation, params)
    for r in results:
        if r.kind == "bytes":
            if r.name in saves:
                with open(saves[r.name], "wb") as f:
                    f.write(r.value)
                print(f"{r.name}=<{len(r.value)} bytes> saved to {saves[r.name]}")
            else:
                print(f"{r.name}=<{len(r.value)} bytes>")
        else:
            print(f"{r.name}={r.text()}")
    return 0


def resolve_mission(name: str) -> str:
    if os.path.exists(name):
        with open(name, encoding="utf-8") as f:
            return f.read()
    bundled = importlib.resources.files("rover_esb").joinpath("missions", name)
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise FileNotFoundError(f"no mission script {name!r} (cwd or bundled)")


def cmd_mission(args) -> int:
    try:
        text = resolve_mission(args.script)
        parse_mission(text)  # surface parse errors before any traffic
    except (FileNotFoundError, MissionError) as exc:
        print(f"rover: {exc}", file=sys.stderr)
        return 2
    report = run_mission(text, make_client(args))
    print(report.render())
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "discover":
            return cmd_discover(args)
        if args.command == "invoke":
            return cmd_invoke(args, parser)
        return cmd_mission(args)
    except EsbFault as exc:
        print(f"rover: fault {exc.code.value}: {exc.detail}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
