import threading

import pytest
import requests

from rover_esb.config import Config, load_kv
from rover_esb.esb_http import server_from_config


def test_load_kv(tmp_path):
    path = tmp_path / "bus.conf"
    path.write_text(
        "# bus settings\n"
        "rover_port = 0\n"
        "rover_secret = open-sesame\n"
        "\n"
        "invoke_timeout_s = 2.5\n"
        "audit_capacity=500\n"
    )
    values = load_kv(path)
    assert values == {"rover_port": "0", "rover_secret": "open-sesame",
                      "invoke_timeout_s": "2.5", "audit_capacity": "500"}


def test_load_kv_rejects_garbage(tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("just words\n")
    with pytest.raises(ValueError) as exc:
        load_kv(path)
    assert "bad.conf:1" in str(exc.value)


def test_typed_accessors():
    cfg = Config({"a": "3", "b": "2.5", "c": "true", "d": "off"})
    assert cfg.get_int("a", 0) == 3
    assert cfg.get_float("b", 0.0) == 2.5
    assert cfg.get_bool("c", False) is True
    assert cfg.get_bool("d", True) is False
    assert cfg.get_int("missing", 7) == 7
    with pytest.raises(ValueError):
        cfg.get_bool("a", False)


def test_bus_built_from_config_file(tmp_path):
    conf = tmp_path / "bus.conf"
    conf.write_text(
        "rover_port = 0\n"
        "management_port = 0\n"
        "rover_secret = open-sesame\n"
        "management_secret = topside\n"
        f"image_dir = {tmp_path / 'imgs'}\n"
        "audit_capacity = 64\n"
        f"audit_file = {tmp_path / 'audit.jsonl'}\n"
    )
    server = server_from_config(Config.from_file(conf)).start()
    try:
        assert requests.get(f"{server.management_url}/ops/health").json() == {"ok": True}
        # the configured secrets gate bind and management writes
        from rover_esb.client import RoverClient

        client = RoverClient(server.rover_url, credential="open-sesame")
        client.bind()
        r = requests.post(f"{server.management_url}/ops/services", json={},
                          headers={"X-Esb-Credential": "wrong"})
        assert r.status_code == 401
        # audit file sink got the bind trace
        server.core.audit.close()
        lines = (tmp_path / "audit.jsonl").read_text().strip().splitlines()
        assert any('"DELIVERED"' in line for line in lines)
    finally:
        server.stop()
