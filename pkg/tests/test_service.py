import base64

import pytest
from fastapi.testclient import TestClient

from pilothash import BuildConfig, build, gen_keys
from pilothash.service import create_app

BUILD_BODY = {
    "n": 2000,
    "seed": 5,
    "lambda": 4.0,
    "partition_size": 500.0,
    "encoder": "ic-r",
    "assignment": "beta-eps",
}


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


@pytest.fixture(scope="module")
def built(client):
    resp = client.post("/build", json=BUILD_BODY)
    assert resp.status_code == 200, resp.text
    return resp.json()


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_build_reports(built):
    assert built["verified"] is True
    assert built["n"] == 2000
    assert built["bits_per_key"] > 1.44
    assert built["construction_ns_per_key"] > 0
    assert built["encoder"] == "ic-r"
    assert built["assignment"] == "beta_eps"
    assert built["mphf_id"].startswith("mphf-")


def test_build_matches_local_library(client, built):
    """The service is a wrapper: same config must give the same structure."""
    corpus = gen_keys(2000, 5)
    local = build(
        corpus,
        BuildConfig(lambda_=4.0, partition_size=500.0, global_seed=5, encoder="ic-r"),
    )
    assert built["bits_per_key"] == pytest.approx(local.bits_per_key(), rel=1e-12)
    raw = client.get(f"/mphf/{built['mphf_id']}/bytes").content
    assert raw == local.serialize()
    some = [corpus[i].decode() for i in (0, 10, 99)]
    resp = client.post(f"/mphf/{built['mphf_id']}/query", json={"keys": some})
    assert resp.json()["indices"] == [local.query(k.encode()) for k in some]


def test_info_endpoint(client, built):
    resp = client.get(f"/mphf/{built['mphf_id']}")
    assert resp.status_code == 200
    info = resp.json()
    assert info["n"] == 2000
    assert info["bucket_count"] == built["bucket_count"]


def test_import_export_roundtrip(client, built):
    raw = client.get(f"/mphf/{built['mphf_id']}/bytes").content
    resp = client.post(
        "/mphf/import", json={"data_base64": base64.b64encode(raw).decode()}
    )
    assert resp.status_code == 200
    assert resp.json()["bits_per_key"] == built["bits_per_key"]


def test_import_garbage_rejected(client):
    resp = client.post(
        "/mphf/import", json={"data_base64": base64.b64encode(b"not a phob").decode()}
    )
    assert resp.status_code == 422


def test_query_bench(client, built):
    resp = client.post(
        "/bench/query", json={"mphf_id": built["mphf_id"], "n": 2000, "seed": 5}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["verified"] is True
    assert body["ns_per_query"] > 0


def test_query_bench_wrong_corpus(client, built):
    resp = client.post(
        "/bench/query", json={"mphf_id": built["mphf_id"], "n": 999, "seed": 5}
    )
    assert resp.status_code == 422
    resp = client.post(
        "/bench/query", json={"mphf_id": built["mphf_id"], "n": 2000, "seed": 6}
    )
    assert resp.status_code == 409


def test_analyze(client):
    resp = client.post(
        "/analyze",
        json={
            "n": 3000,
            "seed": 2,
            "lambdas": [4.0],
            "assignments": ["uniform", "skew", "beta-eps"],
            "partition_size": 500.0,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert [r["assignment"] for r in body["rows"]] == ["uniform", "skew", "beta_eps"]
    assert body["csv"].startswith("assignment,lambda,partition_size,")
    assert len(body["csv"].strip().split("\n")) == 4


def test_analyze_deterministic(client):
    req = {"n": 1500, "seed": 3, "lambdas": [4.0], "assignments": ["beta-eps"],
           "partition_size": 500.0}
    a = client.post("/analyze", json=req).json()["rows"][0]
    b = client.post("/analyze", json=req).json()["rows"][0]
    for field in ("trials_per_key", "bits_per_key"):
        assert a[field] == b[field]


def test_validation_errors(client):
    assert client.post("/build", json={**BUILD_BODY, "n": 0}).status_code == 422
    assert client.post("/build", json={**BUILD_BODY, "lambda": -2.0}).status_code == 422
    assert client.post("/build", json={**BUILD_BODY, "encoder": "zip"}).status_code == 422
    assert client.post("/build", json={**BUILD_BODY, "assignment": "nope"}).status_code == 422


def test_missing_mphf_404(client):
    assert client.get("/mphf/mphf-99999").status_code == 404


def test_delete(client):
    mphf_id = client.post("/build", json={**BUILD_BODY, "n": 500}).json()["mphf_id"]
    assert client.delete(f"/mphf/{mphf_id}").status_code == 200
    assert client.get(f"/mphf/{mphf_id}").status_code == 404
