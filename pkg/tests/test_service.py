import math

import pytest
from fastapi.testclient import TestClient

from equiweyl.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_healthz(client):
    body = client.get("/healthz").json()
    assert body["status"] == "ok"


def test_models_list(client):
    body = client.get("/models").json()
    names = [m["name"] for m in body["models"]]
    assert names == ["bumpy_torus", "flat_torus", "sphere", "spheroid"]
    sphere = next(m for m in body["models"] if m["name"] == "sphere")
    assert sphere["isotropy_chain_length"] == 2
    assert sphere["fixed_points"] == [0.0, math.pi]


def test_model_detail(client):
    body = client.get("/models/sphere", params={"samples": 17}).json()
    assert len(body["profile"]) == 17
    assert client.get("/models/moebius").status_code == 404


def test_spectrum_exact(client):
    resp = client.post(
        "/spectrum",
        json={"model": "sphere", "k": 0, "h": 1.0, "e_max": 25.0},
    )
    energies = [r["energy"] for r in resp.json()["rows"]]
    assert energies == [0.0, 2.0, 6.0, 12.0, 20.0]


def test_spectrum_fd_with_warning(client):
    resp = client.post(
        "/spectrum",
        json={"model": "sphere", "k": 8, "h": 1.0, "e_max": 70.0,
              "backend": "fd", "n": 32},
    )
    body = resp.json()
    assert body["warnings"]
    assert all(r["provenance"] == "fd" for r in body["rows"])


def test_spectrum_fd_needs_n(client):
    resp = client.post(
        "/spectrum",
        json={"model": "sphere", "k": 0, "h": 1.0, "e_max": 5.0, "backend": "fd"},
    )
    assert resp.status_code == 422


def test_reduce_endpoint(client):
    resp = client.post("/reduce", json={"model": "sphere", "c_values": [1.0]})
    rows = resp.json()["rows"]
    assert abs(rows[0]["volume"] - math.pi) <= 1e-6
    assert "c,volume,method,error_estimate" in resp.json()["csv"]


def test_reduce_rejects_nonregular(client):
    resp = client.post(
        "/reduce",
        json={"model": "flat_torus", "c_values": [1.0], "potential": "cos_well"},
    )
    assert resp.status_code == 422


def test_run_endpoint(client):
    cfg = {
        "model": "sphere", "theorem": "counting_single", "c": 1.0, "delta": 0.16,
        "k_values": [0],
        "h_schedule": {"h_max": 1e-2, "h_min": 1e-4, "count": 7},
    }
    resp = client.post("/experiments/run", json={"config": cfg})
    body = resp.json()
    assert body["summary"]["slope"] > 0
    assert body["csv"].startswith("# equiweyl report v1")
    assert body["config_hash"] == body["summary"]["config_hash"]


def test_run_endpoint_validates(client):
    cfg = {
        "model": "sphere", "theorem": "counting_single", "c": 1.0, "delta": 0.4,
        "k_values": [0],
        "h_schedule": {"h_max": 1e-2, "h_min": 1e-4, "count": 7},
    }
    resp = client.post("/experiments/run", json={"config": cfg})
    assert resp.status_code == 422
    assert any("delta" in p for p in resp.json()["detail"])


def test_fit_endpoint(client):
    rows = [[h, 2.0 + h**0.5, 2.0, h**0.5] for h in (1e-1, 1e-2, 1e-3, 1e-4)]
    resp = client.post("/fit", json={"rows": rows, "params": {"chain_length": 1}})
    assert abs(resp.json()["summary"]["slope"] - 0.5) <= 1e-6


def test_schema_endpoint(client):
    body = client.get("/config/schema").json()
    assert body["title"] == "ExperimentConfig"
