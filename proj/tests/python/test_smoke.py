"""Smoke tests for the python bindings."""

import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import l1ac

CONFIG_DIR = Path(os.environ.get("L1AC_CONFIG_DIR", "configs"))


def read_config(name):
    return (CONFIG_DIR / name).read_text()


def test_linalg_primitives():
    A = np.array([[0.0, 1.0], [-4.0, -3.0]])
    E0 = l1ac.expm(np.zeros((3, 3)), 1.0)
    assert np.allclose(E0, np.eye(3))
    # semigroup
    assert np.allclose(l1ac.expm(A, 0.3) @ l1ac.expm(A, 0.7), l1ac.expm(A, 1.0))
    B = np.array([[0.0], [1.0]])
    assert np.allclose(l1ac.pinv(B) @ B, np.eye(1))
    W = l1ac.bperp(B)
    assert np.allclose(B.T @ W, 0.0)
    P = l1ac.lyap_solve(-np.eye(2), np.eye(2))
    assert np.allclose(P, 0.5 * np.eye(2))
    assert l1ac.gev_max(2.0 * np.eye(2), np.eye(2)) == pytest.approx(2.0)
    assert l1ac.dwell_time(1.0, math.e, 0.5) == pytest.approx(2.0)


def test_simulate_benchmark():
    out = l1ac.simulate(read_config("benchmark.json"))
    assert not out["aborted"]
    cols = out["columns"]
    data = out["data"]
    assert data.shape == (len(data), len(cols))
    assert cols[0] == "t"
    assert out["sups"]["xtilde"] < 0.01
    # deterministic
    again = l1ac.simulate(read_config("benchmark.json"))
    assert np.array_equal(data, again["data"])


def test_certify_and_bounds():
    cert = l1ac.certify(read_config("benchmark.json"))
    assert cert["feasible"]
    assert cert["eq17_satisfied"]
    assert cert["tau_d"] >= 0.0

    full = l1ac.theorem1_check(read_config("benchmark.json"))
    assert full["theorem1"]["all_pass"]


def test_certify_negative():
    cert = l1ac.certify(read_config("negative/filter_too_slow.json"))
    assert not cert["feasible"]
    assert "reference Lyapunov" in cert["infeasible_reason"]


def test_monte_carlo_determinism():
    cfg = read_config("benchmark.json")
    a = l1ac.monte_carlo(cfg, 2, 5)
    b = l1ac.monte_carlo(cfg, 2, 5)
    assert a["worst"] == b["worst"]
    assert len(a["per_run_sups"]) == 2


def test_aircraft_scenario():
    out = l1ac.simulate(read_config("l2f_nominal.json"))
    assert not out["aborted"]
    cols = out["columns"]
    assert "theta" in cols and "Cm_alpha_hat" in cols
    final = out["data"][-1]
    cma = final[cols.index("Cm_alpha_hat")]
    assert cma == pytest.approx(-0.82, rel=1e-3)


def test_config_errors_are_raised():
    with pytest.raises(Exception, match="unknown key"):
        l1ac.simulate(json.dumps({"plant": {}, "zzz": 1}))
