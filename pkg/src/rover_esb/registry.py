"""Internal registry of published service descriptors.

Services publish a descriptor (name, protocol, endpoint, operation
signatures) and the bus resolves incoming calls against it.  Operation
names are globally unique: callers address operations, not services, so
the registry is the single source of truth for routing.

Writes are serialized and atomic; readers always see a complete
descriptor (old or new, never a mixture).  Versions are assigned by the
registry, start at 1 per service name, increment on every re-publish,
and restart when a name is unpublished and published again.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, replace

from .model import IDENTIFIER_RE, EsbFault, FaultCode, ProtocolKind

ACTIVE = "ACTIVE"
FAILED = "FAILED"

# operation names handled by the bus itself; never routable to a service
RESERVED_OPERATIONS = frozenset({"Bind", "DiscoverOperations"})

_ENDPOINT_RE = re.compile(r"^([A-Za-z0-9_.\-]+):(\d{1,5})(/[A-Za-z0-9_./\-]*)?$")


def parse_endpoint(endpoint: str) -> tuple[str, int, str]:
    """Split 'host:port[/path]' into (host, port, base_path)."""
    m = _ENDPOINT_RE.match(endpoint)
    if not m or not 0 < int(m.group(2)) < 65536:
        raise ValueError(f"endpoint not parseable as host:port[/path]: {endpoint!r}")
    return m.group(1), int(m.group(2)), m.group(3) or ""


class ConflictError(Exception):
    """An operation name is already owned by a different service."""


@dataclass(frozen=True)
class OperationSignature:
    name: str
    params: tuple[tuple[str, str], ...] = ()
    returns: tuple[tuple[str, str], ...] = ()
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(tuple(p) for p in self.params))
        object.__setattr__(self, "returns", tuple(tuple(r) for r in self.returns))
        if not IDENTIFIER_RE.match(self.name):
            raise ValueError(f"invalid operation name {self.name!r}")
        names = [n for n, _ in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate param names in {self.name}")

    def param_kinds(self) -> dict[str, str]:
        return dict(self.params)

    def return_kinds(self) -> dict[str, str]:
        return dict(self.returns)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "params": [{"name": n, "kind": k} for n, k in self.params],
            "returns": [{"name": n, "kind": k} for n, k in self.returns],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OperationSignature":
        return cls(
            name=obj["name"],
            params=tuple((p["name"], p["kind"]) for p in obj.get("params", [])),
            returns=tuple((r["name"], r["kind"]) for r in obj.get("returns", [])),
            description=obj.get("description", ""),
        )


@dataclass(frozen=True)
class ServiceDescriptor:
    service_name: str
    protocol: ProtocolKind
    endpoint: str
    operations: tuple[OperationSignature, ...]
    status: str = ACTIVE
    version: int = 0

    def __post_init__(self):
        object.__setattr__(self, "operations", tuple(self.operations))
        if not isinstance(self.protocol, ProtocolKind):
            object.__setattr__(self, "protocol", ProtocolKind(self.protocol))
        if not IDENTIFIER_RE.match(self.service_name):
            raise ValueError(f"invalid service name {self.service_name!r}")
        if self.status not in (ACTIVE, FAILED):
            raise ValueError(f"invalid status {self.status!r}")
        names = [op.name for op in self.operations]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate operation names in {self.service_name}")
        self.address()  # endpoint must parse

    def address(self) -> tuple[str, int, str]:
        """Split endpoint into (host, port, base_path)."""
        return parse_endpoint(self.endpoint)

    def operation(self, name: str) -> OperationSignature | None:
        for op in self.operations:
            if op.name == name:
                return op
        return None

    def to_json(self) -> dict:
        return {
            "service_name": self.service_name,
            "protocol": self.protocol.value,
            "endpoint": self.endpoint,
            "version": self.version,
            "status": self.status,
            "operations": [op.to_json() for op in self.operations],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ServiceDescriptor":
        try:
            return cls(
                service_name=obj["service_name"],
                protocol=ProtocolKind(obj["protocol"]),
                endpoint=obj["endpoint"],
                operations=tuple(OperationSignature.from_json(o) for o in obj.get("operations", [])),
                status=obj.get("status", ACTIVE),
                version=int(obj.get("version", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad descriptor: {exc}") from None


@dataclass(frozen=True)
class OperationListing:
    operation: str
    description: str
    service_name: str
    status: str


class Registry:
    """Thread-safe descriptor store with globally unique operation names."""

    def __init__(self, on_change=None):
        self._lock = threading.RLock()
        self._services: dict[str, ServiceDescriptor] = {}
        self._owner: dict[str, str] = {}  # operation -> service_name
        self._on_change = on_change

    def _notify(self, change: str, service_name: str, **extra):
        if self._on_change is not None:
            self._on_change({"change": change, "service": service_name, **extra})

    def publish(self, d: ServiceDescriptor) -> int:
        with self._lock:
            for op in d.operations:
                if op.name in RESERVED_OPERATIONS:
                    raise ConflictError(f"operation {op.name} is reserved by the bus")
                owner = self._owner.get(op.name)
                if owner is not None and owner != d.service_name:
                    raise ConflictError(f"operation {op.name} is already owned by {owner}")
            previous = self._services.get(d.service_name)
            version = previous.version + 1 if previous else 1
            stored = replace(d, version=version, status=ACTIVE)
            if previous is not None:
                for op in previous.operations:
                    del self._owner[op.name]
            self._services[d.service_name] = stored
            for op in stored.operations:
                self._owner[op.name] = d.service_name
            self._notify("publish", d.service_name, version=version)
            return version

    def unpublish(self, service_name: str) -> ServiceDescriptor:
        with self._lock:
            d = self._services.pop(service_name, None)
            if d is None:
                raise EsbFault(FaultCode.UNKNOWN_SERVICE, f"no service named {service_name!r}")
            for op in d.operations:
                del self._owner[op.name]
            self._notify("unpublish", service_name)
            return d

    def set_status(self, service_name: str, status: str) -> str:
        if status not in (ACTIVE, FAILED):
            raise EsbFault(FaultCode.VALIDATION, f"invalid status {status!r}")
        with self._lock:
            d = self._services.get(service_name)
            if d is None:
                raise EsbFault(FaultCode.UNKNOWN_SERVICE, f"no service named {service_name!r}")
            previous = d.status
            if status != previous:
                # a status flip is a descriptor revision; versions stay monotone
                self._services[service_name] = replace(d, status=status, version=d.version + 1)
                self._notify("status", service_name, status=status)
            return previous

    def get(self, service_name: str) -> ServiceDescriptor:
        with self._lock:
            d = self._services.get(service_name)
        if d is None:
            raise EsbFault(FaultCode.UNKNOWN_SERVICE, f"no service named {service_name!r}")
        return d

    def services(self) -> list[ServiceDescriptor]:
        with self._lock:
            return sorted(self._services.values(), key=lambda d: d.service_name)

    def lookup_by_operation(self, operation: str) -> tuple[ServiceDescriptor, OperationSignature]:
        with self._lock:
            owner = self._owner.get(operation)
            if owner is None:
                raise EsbFault(FaultCode.UNKNOWN_OPERATION, f"no service provides {operation!r}")
            d = self._services[owner]
        return d, d.operation(operation)

    def list_operations(self) -> list[OperationListing]:
        with self._lock:
            out = [
                OperationListing(op.name, op.description, d.service_name, d.status)
                for d in self._services.values()
                for op in d.operations
            ]
        return sorted(out, key=lambda o: o.operation)

    def snapshot(self, path) -> None:
        """Persist the registry as one human-diffable JSON document."""
        doc = {"services": [d.to_json() for d in self.services()]}
        try:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(doc, f, indent=2, sort_keys=True)
                f.write("\n")
        except OSError as exc:
            raise EsbFault(FaultCode.INTERNAL, f"snapshot failed: {exc}") from None

    def restore(self, path) -> None:
        """Replace all state with a snapshot's content."""
        try:
            with open(path, encoding="utf-8") as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise EsbFault(FaultCode.INTERNAL, f"restore failed: {exc}") from None
        try:
            descriptors = [ServiceDescriptor.from_json(o) for o in doc["services"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise EsbFault(FaultCode.INTERNAL, f"restore failed: {exc}") from None
        with self._lock:
            self._services.clear()
            self._owner.clear()
            for d in descriptors:
                self._services[d.service_name] = d
                for op in d.operations:
                    self._owner[op.name] = d.service_name
        self._notify("restore", "*")

    def clear(self) -> None:
        with self._lock:
            self._services.clear()
            self._owner.clear()
