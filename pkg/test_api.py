"""HTTP surface tests using FastAPI's TestClient."""
import pytest
from fastapi.testclient import TestClient

from main import app

client = TestClient(app)

PATH_INSTANCE = {"rows": [[0, 1], [1, 2]], "n_vars": 3}


def test_health():
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy"}


def test_validate_reports_offending_rows():
    response = client.post("/instances/validate", json={"instance": PATH_INSTANCE, "point": [1, 1, 0]})
    assert response.status_code == 200
    body = response.json()
    assert body["feasible"] is False
    assert body["offending_rows"] == [0]
    assert body["max_row_sum"] == 2.0


def test_validate_rejects_wrong_length():
    response = client.post("/instances/validate", json={"instance": PATH_INSTANCE, "point": [0.5, 0.5]})
    assert response.status_code == 400


def test_evaluate():
    response = client.post("/instances/evaluate", json={"instance": PATH_INSTANCE, "solution": [1, 1, 0]})
    assert response.status_code == 200
    body = response.json()
    assert body["linf_load"] == 2
    assert body["objective"] == 2.0


def test_generate_is_deterministic():
    spec = {"family": "k-sparse-exact", "m": 8, "n": 16, "k": 4, "seed": 7}
    first = client.post("/generate", json=spec).json()
    second = client.post("/generate", json=spec).json()
    assert first["digest"] == second["digest"]
    assert all(len(row) == 4 for row in first["instance"]["rows"])
    assert first["point"] is None


def test_generate_rejects_bad_parameters():
    response = client.post("/generate", json={"family": "k-sparse-exact", "m": 8, "n": 4, "k": 6})
    assert response.status_code == 422


@pytest.mark.parametrize("method", ["rt", "greedy", "walk-lll", "lll"])
def test_round(method):
    instance = client.post("/generate", json={"family": "k-sparse-exact", "m": 16, "n": 16, "k": 3, "seed": 2}).json()
    response = client.post("/round", json={"instance": instance["instance"], "method": method, "seed": 3})
    assert response.status_code == 200
    body = response.json()
    assert len(body["solution"]) == 16
    assert body["instance_digest"] == instance["digest"]


def test_round_rejects_infeasible_point():
    response = client.post("/round", json={"instance": PATH_INSTANCE, "point": [1, 1, 0], "method": "rt"})
    assert response.status_code == 400


def test_lower_bound_endpoint():
    response = client.post("/analysis/lower-bound", json={"m": 300, "n": 10, "k": 2, "t": 2})
    assert response.status_code == 200
    assert response.json()["condition"] is True


def test_hit_probability_endpoint():
    response = client.post("/analysis/hit-probability", json={"n": 12, "k": 3, "t": 1})
    assert response.status_code == 200
    body = response.json()
    assert body["target_size"] == 4
    assert body["exact"] == pytest.approx(0.745454, rel=1e-5)
