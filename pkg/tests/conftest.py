import sys

import pytest

from rover_esb.client import RoverClient
from rover_esb.dsn import LinkParams
from rover_esb.stack import LocalStack

ROVER_SECRET = "rover-secret"
MGMT_SECRET = "mgmt-secret"


@pytest.fixture
def stack():
    """Bus + three fixture services, no link simulator in the path."""
    s = LocalStack(with_dsn=False)
    s.start()
    yield s
    s.stop()


@pytest.fixture
def linked_stack():
    """Full deployment with a transparent (0 delay, 0 loss) link."""
    s = LocalStack(with_dsn=True, dsn_params=LinkParams(0.0, 0.0, 0.0, seed=7))
    s.start()
    yield s
    s.stop()


@pytest.fixture
def client(stack):
    return RoverClient(stack.rover_url, credential=ROVER_SECRET)


def pytest_runtest_logreport(report):
    # one visible verdict line per acceptance criterion
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.rsplit("::", 1)[-1]
        verdict = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        print(f"[acceptance] {verdict}  {name}  ({report.duration:.2f}s)",
              file=sys.__stderr__, flush=True)
