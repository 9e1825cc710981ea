"""Line-oriented mission scripts for the rover client.

Grammar (one step per line; '#' comments and blank lines ignored):

    bind
    discover [OperationName ...]      # assert listed ops are discoverable
    invoke <Operation> [name=value ...]
    expect <name> == <value>
    expect <name> ~= <value>          # floats, absolute tolerance 1e-9
    expect <name> tolerance <value> <abs_tol>
    expect_fault <FAULT_CODE>         # the invoke right before must fault so
    sleep <milliseconds>

Invoke values are typed from the discovered operation signature when
available, else inferred from the literal (true/false, int, float,
text).  A value of the form ``@path`` loads file bytes (for image
params).  An invoke that faults fails its step unless the next step is
``expect_fault``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .client import RoverClient
from .model import EsbFault, FaultCode, ParamValue

__all__ = ["MissionError", "StepResult", "MissionReport", "parse_mission", "run_mission"]


class MissionError(Exception):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Step:
    lineno: int
    verb: str
    args: tuple


@dataclass(frozen=True)
class StepResult:
    lineno: int
    text: str
    ok: bool
    detail: str = ""


@dataclass
class MissionReport:
    steps: list[StepResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.ok for s in self.steps)

    def render(self) -> str:
        lines = [f"{'ok' if s.ok else 'FAIL':4} line {s.lineno:<3} {s.text}"
                 + (f"  [{s.detail}]" if s.detail else "")
                 for s in self.steps]
        verdict = "MISSION PASSED" if self.passed else "MISSION FAILED"
        total = len(self.steps)
        good = sum(1 for s in self.steps if s.ok)
        lines.append(f"{verdict} ({good}/{total} steps)")
        return "\n".join(lines)


def parse_mission(text: str) -> list[Step]:
    steps = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        verb, args = tokens[0], tokens[1:]
        if verb == "bind":
            if args:
                raise MissionError(lineno, "bind takes no arguments")
            steps.append(Step(lineno, "bind", ()))
        elif verb == "discover":
            steps.append(Step(lineno, "discover", tuple(args)))
        elif verb == "invoke":
            if not args:
                raise MissionError(lineno, "invoke needs an operation name")
            pairs = []
            for a in args[1:]:
                name, sep, value = a.partition("=")
                if not sep or not name:
                    raise MissionError(lineno, f"expected name=value, got {a!r}")
                pairs.append((name, value))
            steps.append(Step(lineno, "invoke", (args[0], tuple(pairs))))
        elif verb == "expect":
            if len(args) == 3 and args[1] in ("==", "~="):
                steps.append(Step(lineno, "expect", (args[0], args[1], args[2], None)))
            elif len(args) == 4 and args[1] == "tolerance":
                try:
                    tol = float(args[3])
                except ValueError:
                    raise MissionError(lineno, f"bad tolerance {args[3]!r}") from None
                steps.append(Step(lineno, "expect", (args[0], "tolerance", args[2], tol)))
            else:
                raise MissionError(
                    lineno, "expect forms: <name> == <v> | <name> ~= <v> | <name> tolerance <v> <tol>")
        elif verb == "expect_fault":
            if len(args) != 1:
                raise MissionError(lineno, "expect_fault takes one code")
            try:
                code = FaultCode(args[0])
            except ValueError:
                raise MissionError(lineno, f"unknown fault code {args[0]!r}") from None
            steps.append(Step(lineno, "expect_fault", (code,)))
        elif verb == "sleep":
            if len(args) != 1 or not args[0].isdigit():
                raise MissionError(lineno, "sleep takes milliseconds")
            steps.append(Step(lineno, "sleep", (int(args[0]),)))
        else:
            raise MissionError(lineno, f"unknown step {verb!r}")
    return steps


def typed_param(name: str, value: str, kind: str | None) -> ParamValue:
    """Type a name=value literal, honoring an optional declared kind and
    the '@path' file-content form for bytes."""
    if value.startswith("@"):
        with open(value[1:], "rb") as f:
            return ParamValue(name, "bytes", f.read())
    if kind is not None:
        from .model import parse_value

        if kind == "float" and value.lstrip("+-").isdigit():
            return ParamValue(name, "float", float(int(value)))
        return ParamValue(name, kind, parse_value(kind, value))
    if value in ("true", "false"):
        return ParamValue(name, "bool", value == "true")
    try:
        return ParamValue(name, "int", int(value))
    except ValueError:
        pass
    try:
        return ParamValue(name, "float", float(value))
    except ValueError:
        pass
    return ParamValue(name, "text", value)


class _Runner:
    def __init__(self, client: RoverClient):
        self.client = client
        self.kinds: dict[str, dict[str, str]] = {}
        self.last_results: tuple[ParamValue, ...] = ()
        self.last_fault: EsbFault | None = None

    def run(self, steps: list[Step]) -> MissionReport:
        report = MissionReport()
        for i, step in enumerate(steps):
            next_verb = steps[i + 1].verb if i + 1 < len(steps) else None
            handler = getattr(self, f"_do_{step.verb}")
            text = f"{step.verb} {' '.join(str(a) for a in _flatten(step.args))}".strip()
            try:
                detail = handler(*step.args, tolerate_fault=(next_verb == "expect_fault")) or ""
                report.steps.append(StepResult(step.lineno, text, True, detail))
            except _StepFailure as exc:
                report.steps.append(StepResult(step.lineno, text, False, str(exc)))
        return report

    def _do_bind(self, tolerate_fault=False):
        try:
            self.client.bind()
        except EsbFault as exc:
            raise _StepFailure(f"bind faulted: {exc}") from None
        return "session established"

    def _do_discover(self, *names, tolerate_fault=False):
        try:
            catalog = self.client.discover()
        except EsbFault as exc:
            raise _StepFailure(f"discovery faulted: {exc}") from None
        self.kinds = {c.operation: dict(c.params) for c in catalog}
        found = {c.operation for c in catalog}
        missing = [n for n in names if n not in found]
        if missing:
            raise _StepFailure(f"operations not discovered: {', '.join(missing)}")
        return f"{len(found)} operations"

    def _do_invoke(self, operation, pairs, tolerate_fault=False):
        kinds = self.kinds.get(operation, {})
        try:
            params = [typed_param(n, v, kinds.get(n)) for n, v in pairs]
        except (ValueError, OSError) as exc:
            raise _StepFailure(f"bad param: {exc}") from None
        self.last_results, self.last_fault = (), None
        try:
            self.last_results = self.client.invoke(operation, params)
        except EsbFault as exc:
            self.last_fault = exc
            if not tolerate_fault:
                raise _StepFailure(f"faulted {exc.code.value}: {exc.detail}") from None
            return f"faulted {exc.code.value} (expected next)"
        return f"{len(self.last_results)} results"

    def _do_expect(self, name, op, expected_text, tol, tolerate_fault=False):
        actual = next((r for r in self.last_results if r.name == name), None)
        if actual is None:
            raise _StepFailure(f"no result named {name!r} "
                               f"(have {[r.name for r in self.last_results]})")
        if op == "==":
            if actual.text() != expected_text and str(actual.value) != expected_text:
                raise _StepFailure(f"{name} = {actual.text()!r}, expected {expected_text!r}")
            return f"{name} = {actual.text()}"
        try:
            expected = float(expected_text)
            value = float(actual.value)
        except (TypeError, ValueError):
            raise _StepFailure(f"{name} is not numeric ({actual.kind})") from None
        limit = 1e-9 if op == "~=" else tol
        if abs(value - expected) > limit:
            raise _StepFailure(f"{name} = {value!r}, expected {expected!r} within {limit}")
        return f"{name} = {actual.text()}"

    def _do_expect_fault(self, code, tolerate_fault=False):
        if self.last_fault is None:
            raise _StepFailure(f"expected fault {code.value}, last invoke succeeded")
        if self.last_fault.code is not code:
            raise _StepFailure(
                f"expected fault {code.value}, got {self.last_fault.code.value}")
        return code.value

    def _do_sleep(self, ms, tolerate_fault=False):
        time.sleep(ms / 1000.0)
        return f"{ms} ms"


class _StepFailure(Exception):
    pass


def _flatten(args):
    for a in args:
        if isinstance(a, tuple):
            yield from (f"{n}={v}" for n, v in a)
        else:
            yield a


def run_mission(text: str, client: RoverClient) -> MissionReport:
    return _Runner(client).run(parse_mission(text))
