"""The management surface over real HTTP: lifecycle endpoints, audit
reads, the event stream, and the image sink."""

import json
import threading
import time

import requests

from rover_esb.services.imageops import Image, ppm_encode
from tests.conftest import MGMT_SECRET

AUTH = {"X-Esb-Credential": MGMT_SECRET}


def url(stack, path):
    return f"{stack.management_url}{path}"


def demo_descriptor(name="DrillService", ops=None):
    return {
        "service_name": name,
        "protocol": "REST",
        "endpoint": "127.0.0.1:59999",
        "operations": ops or [
            {"name": "DrillSample", "description": "Bore a shallow sample hole",
             "params": [{"name": "depth_cm", "kind": "int"}],
             "returns": [{"name": "sample_id", "kind": "text"}]},
        ],
    }


def test_services_and_operations_listing(stack):
    services = requests.get(url(stack, "/ops/services")).json()["services"]
    assert {s["service_name"] for s in services} == {
        "ImagingService", "SpectrometryService", "EnvironmentService"}
    ops = requests.get(url(stack, "/ops/operations")).json()["operations"]
    assert len(ops) == 12
    assert [o["operation"] for o in ops] == sorted(o["operation"] for o in ops)
    speed = next(o for o in ops if o["operation"] == "AnalyzeParticlesSpeed")
    assert speed["service"] == "SpectrometryService"
    assert speed["params"] == [{"name": "mass", "kind": "float"},
                               {"name": "weight", "kind": "float"}]


def test_describe_single_service(stack):
    d = requests.get(url(stack, "/ops/services/ImagingService")).json()
    assert d["protocol"] == "SOAP" and d["version"] == 1
    assert requests.get(url(stack, "/ops/services/Nope")).status_code == 404


def test_publish_requires_credential(stack):
    r = requests.post(url(stack, "/ops/services"), json=demo_descriptor())
    assert r.status_code == 401
    assert r.json()["fault"] == "AUTH_FAILED"


def test_publish_appears_everywhere(stack):
    r = requests.post(url(stack, "/ops/services"), json=demo_descriptor(), headers=AUTH)
    assert r.status_code == 200 and r.json()["version"] == 1
    services = requests.get(url(stack, "/ops/services")).json()["services"]
    assert "DrillService" in {s["service_name"] for s in services}
    ops = requests.get(url(stack, "/ops/operations")).json()["operations"]
    assert "DrillSample" in [o["operation"] for o in ops]


def test_publish_conflict_is_409(stack):
    requests.post(url(stack, "/ops/services"), json=demo_descriptor(), headers=AUTH)
    stolen = demo_descriptor(name="CopycatService")
    r = requests.post(url(stack, "/ops/services"), json=stolen, headers=AUTH)
    assert r.status_code == 409
    assert r.json()["fault"] == "CONFLICT"


def test_malformed_descriptor_is_400(stack):
    r = requests.post(url(stack, "/ops/services"), json={"service_name": "x"}, headers=AUTH)
    assert r.status_code == 400
    r = requests.post(url(stack, "/ops/services"), data=b"not json", headers=AUTH)
    assert r.status_code == 400


def test_unpublish_and_status_cycle(stack):
    requests.post(url(stack, "/ops/services"), json=demo_descriptor(), headers=AUTH)
    r = requests.post(url(stack, "/ops/services/DrillService/status"),
                      json={"status": "FAILED"}, headers=AUTH)
    assert r.json()["previous"] == "ACTIVE"
    assert requests.get(url(stack, "/ops/services/DrillService")).json()["status"] == "FAILED"
    r = requests.delete(url(stack, "/ops/services/DrillService"), headers=AUTH)
    assert r.status_code == 200 and r.json()["service_name"] == "DrillService"
    assert requests.delete(url(stack, "/ops/services/DrillService"),
                           headers=AUTH).status_code == 404


def test_audit_read_with_after_cursor(stack, client):
    client.bind()
    client.invoke("AnalyzeParticlesSpeed", {"mass": 5, "weight": 10})
    records = requests.get(url(stack, "/ops/audit")).json()["records"]
    assert records, "pipeline should have produced audit records"
    cutoff = records[len(records) // 2]["seq"]
    rest = requests.get(url(stack, f"/ops/audit?after={cutoff}")).json()["records"]
    assert all(r["seq"] > cutoff for r in rest)
    assert len(rest) < len(records)


def test_image_sink_roundtrip(stack):
    payload = ppm_encode(Image.filled(2, 2, (7, 8, 9)))
    r = requests.post(url(stack, "/ops/images"), data=payload, headers=AUTH)
    assert r.status_code == 200
    storage_id = r.json()["storage_id"]
    back = requests.get(url(stack, f"/ops/images/{storage_id}"))
    assert back.content == payload
    r2 = requests.post(url(stack, "/ops/images"), data=b"junk", headers=AUTH)
    assert r2.status_code == 400


def test_dsn_endpoint_when_detached(stack):
    assert requests.get(url(stack, "/ops/dsn")).json() == {"attached": False}
    r = requests.put(url(stack, "/ops/dsn"), json={"loss_probability": 1.0}, headers=AUTH)
    assert r.status_code == 404


def test_dsn_endpoint_when_attached(linked_stack):
    stack = linked_stack
    doc = requests.get(url(stack, "/ops/dsn")).json()
    assert doc["attached"] is True
    assert doc["params"]["loss_probability"] == 0.0
    assert doc["stats"]["total"]["sent"] == 0
    r = requests.put(url(stack, "/ops/dsn"),
                     json={"one_way_delay_ms": 5.0, "jitter_ms": 1.0}, headers=AUTH)
    assert r.status_code == 200
    assert r.json()["params"]["one_way_delay_ms"] == 5.0
    r = requests.put(url(stack, "/ops/dsn"), json={"bogus": 1}, headers=AUTH)
    assert r.status_code == 400


def collect_sse(stack, out, stop):
    with requests.get(url(stack, "/ops/events"), stream=True, timeout=10) as resp:
        event = None
        for line in resp.iter_lines():
            if stop.is_set():
                return
            if line.startswith(b"event: "):
                event = line[7:].decode()
            elif line.startswith(b"data: ") and event:
                out.append((event, json.loads(line[6:])))
                event = None


def test_event_stream_carries_registry_and_audit(stack, client):
    events = []
    stop = threading.Event()
    t = threading.Thread(target=collect_sse, args=(stack, events, stop), daemon=True)
    t.start()
    time.sleep(0.3)  # let the subscription attach

    requests.post(url(stack, "/ops/services"), json=demo_descriptor(), headers=AUTH)
    client.bind()
    client.invoke("AnalyzeParticlesSpeed", {"mass": 5, "weight": 10})

    deadline = time.time() + 5
    while time.time() < deadline:
        kinds = {e for e, _ in events}
        if "registry" in kinds and "audit" in kinds:
            break
        time.sleep(0.05)
    stop.set()
    registry_events = [d for e, d in events if e == "registry"]
    audit_events = [d for e, d in events if e == "audit"]
    assert any(d["change"] == "publish" and d["service"] == "DrillService"
               for d in registry_events)
    assert any(d["step"] == "DELIVERED" for d in audit_events)


def test_unknown_route_is_structured(stack):
    r = requests.post(url(stack, "/ops/unknown"), headers=AUTH)
    assert r.status_code == 400
    assert r.json()["fault"] == "VALIDATION"
