"""HTTP service endpoints, error kinds, and status codes."""

import pytest

from conftest import api, read_config


@pytest.fixture(scope="module")
def built_dir(tmp_path_factory):
    d = str(tmp_path_factory.mktemp("svc") / "stack")
    r = api("POST", "/stacks/build",
            {"config": read_config("staged_t8"), "directory": d})
    assert r.status_code == 200
    return d


def test_health():
    r = api("GET", "/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_build_reports_checks_and_costs(built_dir):
    r = api("GET", "/stacks/manifest", params={"directory": built_dir})
    assert r.status_code == 200
    man = r.json()["manifest"]
    assert man["format"] == "rrns-stack"
    assert man["predicted_costs"][-1]["montgomery"] == 8931


def test_build_rejects_infeasible_config(tmp_path):
    r = api("POST", "/stacks/build",
            {"config": read_config("remark_claimed"),
             "directory": str(tmp_path / "x")})
    assert r.status_code == 422
    detail = r.json()["detail"]
    assert detail["kind"] == "bound_violation"
    assert detail["name"] == "right-base-product"


def test_build_rejects_malformed_config(tmp_path):
    r = api("POST", "/stacks/build",
            {"config": {"word_size": 8}, "directory": str(tmp_path / "y")})
    assert r.status_code == 400
    assert r.json()["detail"]["kind"] == "invalid_config"


def test_missing_directory_404():
    r = api("GET", "/stacks/manifest", params={"directory": "/nonexistent"})
    assert r.status_code == 404
    assert r.json()["detail"]["kind"] == "not_found"


def test_exp_without_modulus_409(built_dir):
    r = api("POST", "/exp", {"directory": built_dir,
                             "bases": ["2"], "exponents": ["10"]})
    assert r.status_code == 409
    assert r.json()["detail"]["kind"] == "state"


def test_exp_with_inline_modulus(built_dir):
    n = (1 << 180) + 13
    r = api("POST", "/exp", {"directory": built_dir, "modulus": hex(n),
                             "bases": ["0x2"], "exponents": ["0x100"],
                             "verify": True})
    assert r.status_code == 200
    body = r.json()
    assert int(body["results"][0], 16) == pow(2, 0x100, n)
    assert body["verified"] is True and body["mismatches"] == 0
    assert body["operations"]["total"] > 0
    # inline modulus must not persist
    r2 = api("POST", "/exp", {"directory": built_dir,
                              "bases": ["2"], "exponents": ["10"]})
    assert r2.status_code == 409


def test_set_modulus_persists(built_dir):
    n = (1 << 150) + 67
    r = api("POST", "/stacks/set-modulus",
            {"directory": built_dir, "modulus": hex(n)})
    assert r.status_code == 200
    r = api("POST", "/exp", {"directory": built_dir,
                             "bases": ["3"], "exponents": ["0x20"]})
    assert r.status_code == 200
    assert int(r.json()["results"][0], 16) == pow(3, 0x20, n)


def test_set_modulus_over_capacity_422(built_dir):
    r = api("POST", "/stacks/set-modulus",
            {"directory": built_dir, "modulus": hex(1 << 210)})
    assert r.status_code == 422
    assert r.json()["detail"]["name"] == "modulus-capacity"


def test_bench_reports_overhead(built_dir):
    r = api("POST", "/bench", {"directory": built_dir,
                               "products": 3, "batch": 2})
    assert r.status_code == 200
    body = r.json()
    assert body["measured_per_product"]["total"] == 12931
    assert body["predicted_montgomery"] == 8931
    assert body["overhead_percent"] == pytest.approx(
        100 * (12931 - 8931) / 8931)


def test_selftest_clean(built_dir):
    r = api("POST", "/selftest", {"directory": built_dir, "trials": 12})
    assert r.status_code == 200
    body = r.json()
    assert body["congruence_failures"] == 0
    assert body["closure_failures"] == 0
    assert body["roundtrip_failures"] == 0


def test_selftest_needs_exactly_one_source():
    r = api("POST", "/selftest", {"trials": 4})
    assert r.status_code == 400
    r = api("POST", "/selftest",
            {"trials": 4, "directory": "/x",
             "config": read_config("remark_sound")})
    assert r.status_code == 400


def test_selftest_from_config():
    r = api("POST", "/selftest",
            {"config": read_config("remark_sound"), "trials": 30})
    assert r.status_code == 200
    assert r.json()["congruence_failures"] == 0


def test_cost_endpoint_frozen_values():
    r = api("POST", "/cost", {"layers": [[9, 9], [32, 32]],
                              "bits": 2048, "word_size": 8})
    assert r.status_code == 200
    body = r.json()
    assert body["levels"][-1]["montgomery"] == 158019
    assert body["simplified_level3"] == 135936
    assert body["optimal_bottom_width"] == pytest.approx(9.2376, abs=1e-4)
    assert body["simplified_min_ops"] == pytest.approx(113511.68, abs=0.01)


def test_cost_rejects_bad_pairs():
    r = api("POST", "/cost", {"layers": [[9]]})
    assert r.status_code == 400
