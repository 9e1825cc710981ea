"""Each fixture service spoken to over its own protocol, plus
self-registration and the derived-name dispatch convention."""

import socket

import numpy as np
import pytest
import requests

from rover_esb.model import (
    FaultCode,
    ParamValue,
    RequestEnvelope,
)
from rover_esb.services.environment import EnvironmentService
from rover_esb.services.imaging import ImagingService
from rover_esb.services.imageops import Image, ppm_decode, ppm_encode
from rover_esb.services.spectrometry import SpectrometryService
from rover_esb.wire import frames, soap


@pytest.fixture(scope="module")
def spectrometry():
    svc = SpectrometryService().start()
    yield svc
    svc.stop()


@pytest.fixture(scope="module")
def environment():
    svc = EnvironmentService().start()
    yield svc
    svc.stop()


@pytest.fixture(scope="module")
def imaging():
    svc = ImagingService().start()
    yield svc
    svc.stop()


class TestSpectrometryRest:
    def base(self, svc):
        return f"http://{svc.endpoint()}"

    def test_query_string_invocation(self, spectrometry):
        r = requests.get(self.base(spectrometry)
                         + "/invoke/AnalyzeParticlesSpeed?mass=5&weight=10")
        assert r.status_code == 200
        assert r.json() == {"velocity": 11.332}

    def test_unknown_operation_404_with_code(self, spectrometry):
        r = requests.get(self.base(spectrometry) + "/invoke/Nope")
        assert r.status_code == 404
        assert r.json()["fault"] == "UNKNOWN_OPERATION"

    def test_domain_error_is_validation(self, spectrometry):
        r = requests.get(self.base(spectrometry)
                         + "/invoke/AnalyzeParticlesSpeed?mass=0&weight=10")
        assert r.status_code == 400
        assert r.json()["fault"] == "VALIDATION"

    def test_wrong_params_are_type_mismatch(self, spectrometry):
        r = requests.get(self.base(spectrometry)
                         + "/invoke/AnalyzeParticlesSpeed?mass=5")
        assert r.status_code == 400
        assert r.json()["fault"] == "TYPE_MISMATCH"
        assert "weight" in r.json()["detail"]

    def test_abundance_operations(self, spectrometry):
        r = requests.get(self.base(spectrometry) + "/invoke/AnalyzeReleasedXRays?sample_id=A")
        body = r.json()
        assert body == {"Si": 1 / 138, "Fe": 34 / 138, "Mg": 67 / 138, "Ca": 36 / 138}
        r = requests.get(self.base(spectrometry) + "/invoke/ContainsCarbon?sample_id=B")
        assert r.json() == {"carbon": True}

    def test_call_counters(self, spectrometry):
        before = spectrometry.table.calls.get("ContainsOxygen", 0)
        requests.get(self.base(spectrometry) + "/invoke/ContainsOxygen?sample_id=")
        assert spectrometry.table.calls["ContainsOxygen"] == before + 1


class TestEnvironmentFrames:
    def exchange(self, svc, operation, message_id="m-env"):
        env = RequestEnvelope(message_id, "rover-1", "", operation, ())
        with socket.create_connection(("127.0.0.1", svc.port), timeout=2) as sock:
            sock.sendall(frames.encode_request(env))
            raw = frames.read_frame(sock)
        return frames.decode(raw)

    def test_first_sample_is_base(self):
        svc = EnvironmentService().start()
        try:
            reply = self.exchange(svc, "MeasurePressure")
            assert reply.status == "OK"
            assert reply.correlation_id == "m-env"
            assert reply.results[0].name == "pressure"
            assert reply.results[0].value == 715.0  # tick 0
        finally:
            svc.stop()

    def test_tick_shared_across_operations(self):
        svc = EnvironmentService().start()
        try:
            self.exchange(svc, "MeasurePressure")      # tick 0
            reply = self.exchange(svc, "MeasureWindSpeed")  # tick 1
            expected = svc.model.channels["wind"].value(1)
            assert reply.results[0].value == expected
        finally:
            svc.stop()

    def test_unknown_operation_fault_frame(self, environment):
        reply = self.exchange(environment, "MeasureGravity")
        assert reply.status == "FAULT"
        assert reply.fault.code is FaultCode.UNKNOWN_OPERATION

    def test_garbage_frame_answered_with_validation(self, environment):
        with socket.create_connection(("127.0.0.1", environment.port), timeout=2) as sock:
            sock.sendall(frames.frame("not a real frame"))
            reply = frames.decode(frames.read_frame(sock))
        assert reply.status == "FAULT"
        assert reply.fault.code is FaultCode.VALIDATION


class TestImagingSoap:
    def call(self, svc, operation, params, message_id="m-img"):
        env = RequestEnvelope(message_id, "rover-1", "ImagingService", operation,
                              tuple(params), session="s-1")
        r = requests.post(f"http://127.0.0.1:{svc.port}/service",
                          data=soap.encode_request(env),
                          headers={"Content-Type": "text/xml"})
        assert r.status_code == 200
        return soap.decode(r.content)

    def test_magnify_over_the_wire(self, imaging):
        img = Image(np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8))
        reply = self.call(imaging, "MagnifyImage", [
            ParamValue("image", "bytes", ppm_encode(img)),
            ParamValue("newWidth", "int", 4),
            ParamValue("newHeight", "int", 1),
        ])
        assert reply.status == "OK"
        out = ppm_decode(reply.result("image").value)
        assert out.pixels[0, :, 0].tolist() == [0, 64, 191, 255]

    def test_noise_reduction_over_the_wire(self, imaging):
        px = np.zeros((3, 3, 3), dtype=np.uint8)
        px[1, 1] = 255
        reply = self.call(imaging, "NoiseReduction",
                          [ParamValue("image", "bytes", ppm_encode(Image(px)))])
        out = ppm_decode(reply.result("image").value)
        assert out.pixels[1, 1].tolist() == [0, 0, 0]

    def test_bad_dimensions_fault(self, imaging):
        img = ppm_encode(Image.filled(2, 2))
        reply = self.call(imaging, "MagnifyImage", [
            ParamValue("image", "bytes", img),
            ParamValue("newWidth", "int", 0),
            ParamValue("newHeight", "int", 5),
        ])
        assert reply.status == "FAULT"
        assert reply.fault.code is FaultCode.VALIDATION

    def test_send_image_without_sink_faults_internal(self, imaging):
        reply = self.call(imaging, "SendImage",
                          [ParamValue("image", "bytes", ppm_encode(Image.filled(1, 1)))])
        assert reply.status == "FAULT"
        assert reply.fault.code is FaultCode.INTERNAL


class TestSelfRegistration:
    def test_services_register_on_start(self, stack):
        services = requests.get(f"{stack.management_url}/ops/services").json()["services"]
        by_name = {s["service_name"]: s for s in services}
        assert by_name["ImagingService"]["protocol"] == "SOAP"
        assert by_name["ImagingService"]["endpoint"].endswith("/service")
        assert by_name["SpectrometryService"]["protocol"] == "REST"
        assert by_name["EnvironmentService"]["protocol"] == "SOCKET"
        ops = requests.get(f"{stack.management_url}/ops/operations").json()["operations"]
        assert [o["operation"] for o in ops] == [
            "AnalyzeParticlesSpeed", "AnalyzeReleasedXRays", "AnalyzeVaporizedBits",
            "ContainsCarbon", "ContainsOxygen", "MagnifyImage", "MeasureHumidity",
            "MeasurePressure", "MeasureUltravioletRadiation", "MeasureWindSpeed",
            "NoiseReduction", "SendImage",
        ]

    def test_declared_operations_match_served_operations(self, stack):
        for svc in stack.services.values():
            declared = {s.name for s in svc.descriptor().operations}
            served = {s.name for s in svc.table.signatures()}
            assert declared == served


class TestDerivedDispatch:
    def test_prefixed_name_resolves_to_base_implementation(self, spectrometry):
        r = requests.get(f"http://{spectrometry.endpoint()}"
                         + "/invoke/Twin_AnalyzeParticlesSpeed?mass=5&weight=10")
        assert r.status_code == 200
        assert r.json() == {"velocity": 11.332}

    def test_unknown_suffix_still_faults(self, spectrometry):
        r = requests.get(f"http://{spectrometry.endpoint()}/invoke/Twin_Nope")
        assert r.status_code == 404


def test_send_image_through_bus_matches_external_checksum(stack, client, tmp_path):
    import hashlib

    payload = ppm_encode(Image.filled(4, 3, (250, 1, 128)))
    client.bind()
    results = client.invoke("SendImage", [ParamValue("image", "bytes", payload)])
    storage_id = results[0].value
    assert storage_id == hashlib.sha256(payload).hexdigest()
    again = client.invoke("SendImage", [ParamValue("image", "bytes", payload)])
    assert again[0].value == storage_id
    assert stack.core.images.count() == 1
    stored = requests.get(f"{stack.management_url}/ops/images/{storage_id}")
    assert stored.content == payload
