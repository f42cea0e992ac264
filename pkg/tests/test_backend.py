import json

import pytest

from wifi_occupancy.backend import (
    BackendCore,
    LocalClient,
    RoomNotRegisteredError,
    SchemaError,
    TcpBackendServer,
    TcpClient,
    create_app,
    parse_topic,
    topic_for,
)
from wifi_occupancy.sensor import GroundTruthMsg


def report_payload(room="lab", window_start=0.0, estimate=4):
    return {
        "room": room,
        "window_start": window_start,
        "window_duration_s": 120.0,
        "estimate_raw": float(estimate),
        "estimate": estimate,
        "alpha": 1.0,
        "beta": 0.1,
        "theta_dbm": -80,
        "n_valid": [estimate] * 40,
        "n_random": [0] * 40,
    }


@pytest.fixture
def core(tmp_path):
    return BackendCore(tmp_path / "data", rooms=["lab", "aula"])


class TestTopics:
    def test_roundtrip(self):
        assert topic_for("lab", "estimate") == "occupancy/lab/estimate"
        assert parse_topic("occupancy/lab/groundtruth") == ("lab", "groundtruth")

    def test_invalid_room_token(self):
        with pytest.raises(ValueError):
            topic_for("a/b", "estimate")

    def test_bad_topic(self):
        with pytest.raises(ValueError):
            parse_topic("foo/bar")


class TestGroundTruth:
    def test_set_then_get(self, core):
        core.set_groundtruth("lab", 12, ttl_s=600.0, now=100.0)
        msg = core.get_groundtruth("lab")
        assert msg.count == 12
        assert msg.issued_at == 100.0

    def test_latest_value_wins(self, core):
        core.set_groundtruth("lab", 12, ttl_s=600.0, now=100.0)
        core.set_groundtruth("lab", 15, ttl_s=600.0, now=200.0)
        assert core.get_groundtruth("lab").count == 15

    def test_sensor_side_ttl_semantics(self, core):
        core.set_groundtruth("lab", 12, ttl_s=600.0, now=0.0)
        msg = core.get_groundtruth("lab")
        assert not msg.expired(30.0)
        assert msg.expired(601.0)

    def test_unknown_room(self, core):
        with pytest.raises(RoomNotRegisteredError):
            core.set_groundtruth("nope", 1, 60.0)

    def test_invalid_ttl(self, core):
        with pytest.raises(SchemaError):
            core.set_groundtruth("lab", 1, ttl_s=0.0)


class TestIngestReport:
    def test_ingest_and_query(self, core):
        core.ingest_report(report_payload(), now=10.0)
        series = core.query_timeseries("lab", kind="occupancy")
        assert len(series) == 1
        assert core.latest("lab")["estimate"]["estimate"] == 4

    def test_duplicate_window_idempotent(self, core):
        core.ingest_report(report_payload(window_start=5.0), now=10.0)
        out = core.ingest_report(report_payload(window_start=5.0), now=11.0)
        assert out["duplicate"]
        assert len(core.query_timeseries("lab", kind="occupancy")) == 1

    def test_unregistered_room_rejected(self, core):
        with pytest.raises(RoomNotRegisteredError):
            core.ingest_report(report_payload(room="nope"))

    def test_schema_error_names_field(self, core):
        bad = report_payload()
        del bad["alpha"]
        with pytest.raises(SchemaError, match="estimate.alpha"):
            core.ingest_report(bad)
        bad = report_payload()
        bad["estimate"] = "four"
        with pytest.raises(SchemaError, match="estimate.estimate"):
            core.ingest_report(bad)


class TestQueries:
    def test_range_and_order(self, core):
        for i in range(3):
            core.ingest_report(report_payload(window_start=float(i)), now=float(i))
        records = core.query_timeseries("lab", start=0.0, end=10.0)
        assert [r["window_start"] for r in records] == [0.0, 1.0, 2.0]

    def test_disjoint_range_empty(self, core):
        core.ingest_report(report_payload(), now=5.0)
        assert core.query_timeseries("lab", start=100.0, end=200.0) == []

    def test_params_series(self, core):
        core.ingest_params("lab", {"alpha": 1.0, "beta": 0.1, "theta_dbm": -80, "trained_at": None}, now=0.0)
        core.ingest_params("lab", {"alpha": 1.2, "beta": 0.1, "theta_dbm": -78, "trained_at": 9.0}, now=9.0)
        series = core.query_timeseries("lab", kind="params")
        assert [e["alpha"] for e in series] == [1.0, 1.2]

    def test_unknown_series_kind(self, core):
        with pytest.raises(ValueError):
            core.query_timeseries("lab", kind="bogus")


class TestDurability:
    def test_replay_reconstructs_state(self, tmp_path):
        data = tmp_path / "data"
        core = BackendCore(data, rooms=["lab"])
        core.set_groundtruth("lab", 9, ttl_s=600.0, now=50.0)
        for i in range(3):
            core.ingest_report(report_payload(window_start=float(i)), now=float(i))
        core.ingest_params("lab", {"alpha": 1.0, "beta": 0.1, "theta_dbm": -80, "trained_at": None}, now=1.0)

        reborn = BackendCore(data)
        assert reborn.room_list() == ["lab"]
        assert reborn.get_groundtruth("lab").count == 9
        assert reborn.query_timeseries("lab") == core.query_timeseries("lab")
        assert reborn.query_timeseries("lab", kind="params") == core.query_timeseries("lab", kind="params")
        assert reborn.latest("lab") == core.latest("lab")

    def test_log_is_line_json(self, tmp_path):
        core = BackendCore(tmp_path / "data", rooms=["lab"])
        core.ingest_report(report_payload(), now=0.0)
        files = list((tmp_path / "data").glob("events-*.jsonl"))
        assert files
        for line in files[0].read_text().splitlines():
            json.loads(line)


class TestTcpTransport:
    def test_sensor_protocol_roundtrip(self, tmp_path):
        core = BackendCore(tmp_path / "data", rooms=["lab"])
        server = TcpBackendServer(core, port=0)
        server.serve_background()
        try:
            host, port = server.address
            client = TcpClient(host, port)
            assert client.fetch_groundtruth("lab") is None
            core.set_groundtruth("lab", 7, ttl_s=300.0, now=10.0)
            msg = client.fetch_groundtruth("lab")
            assert isinstance(msg, GroundTruthMsg)
            assert msg.count == 7
            client.publish_report(report_payload())
            client.publish_environment(
                {"room": "lab", "temperature_c": 21.0, "humidity_pct": 40.0,
                 "pressure_hpa": 1013.0, "light_lux": 250.0}
            )
            client.publish_params("lab", {"alpha": 1.0, "beta": 0.1, "theta_dbm": -80, "trained_at": None})
            assert len(core.query_timeseries("lab", kind="occupancy")) == 1
            assert len(core.query_timeseries("lab", kind="environment")) == 1
            assert len(core.query_timeseries("lab", kind="params")) == 1
            client.close()
        finally:
            server.shutdown()

    def test_malformed_line_keeps_connection(self, tmp_path):
        import socket

        core = BackendCore(tmp_path / "data", rooms=["lab"])
        server = TcpBackendServer(core, port=0)
        server.serve_background()
        try:
            sock = socket.create_connection(server.address, timeout=5)
            f = sock.makefile("rwb")
            f.write(b"this is not json\n")
            f.flush()
            resp = json.loads(f.readline())
            assert resp["ok"] is False
            f.write((json.dumps({"op": "get", "topic": "occupancy/lab/groundtruth"}) + "\n").encode())
            f.flush()
            resp = json.loads(f.readline())
            assert resp["ok"] is True
            sock.close()
        finally:
            server.shutdown()


class TestHttpApi:
    @pytest.fixture
    def client(self, core):
        from fastapi.testclient import TestClient

        return TestClient(create_app(core))

    def test_rooms(self, client):
        assert client.get("/rooms").json() == {"rooms": ["aula", "lab"]}

    def test_latest_empty_room(self, client):
        body = client.get("/rooms/lab/latest").json()
        assert body["estimate"] is None

    def test_post_groundtruth_and_series(self, core, client):
        resp = client.post("/rooms/lab/groundtruth", json={"count": 12, "ttl_s": 600})
        assert resp.status_code == 200
        assert core.get_groundtruth("lab").count == 12

    def test_post_invalid_count_rejected(self, client):
        resp = client.post("/rooms/lab/groundtruth", json={"count": -1, "ttl_s": 600})
        assert resp.status_code == 422

    def test_unknown_room_404(self, client):
        assert client.get("/rooms/nope/latest").status_code == 404
        resp = client.post("/rooms/nope/groundtruth", json={"count": 1, "ttl_s": 60})
        assert resp.status_code == 404

    def test_series_endpoint(self, core, client):
        core.ingest_report(report_payload(), now=1.0)
        body = client.get("/rooms/lab/series", params={"kind": "occupancy"}).json()
        assert len(body["records"]) == 1
        assert body["records"][0]["estimate"] == 4

    def test_bad_series_kind_400(self, client):
        assert client.get("/rooms/lab/series", params={"kind": "bogus"}).status_code == 400
