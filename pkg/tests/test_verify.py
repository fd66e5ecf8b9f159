import json

import pytest

from diracbie.config import RunConfig
from diracbie.verify import (Check, VerificationReport, _growth_excess, _order_residual, _sig,
                             convergence_sweep, run_suite_2d, run_suite_3d)
from diracbie.trigcalc import OrderEstimate


def test_check_verdict():
    assert Check("a", "ref", 1e-11, 1e-10).verdict == "PASS"
    assert Check("a", "ref", 2e-10, 1e-10).verdict == "FAIL"
    assert Check("a", "ref", 0.0, 0.0).verdict == "PASS"


def test_significant_digit_rounding():
    assert _sig(1.23456789e-13) == 1.23457e-13
    assert _sig(0.0) == 0.0


def test_growth_excess_ignores_roundoff():
    assert _growth_excess([1e-3, 1e-5, 1e-7], 1e-12) == 0.0
    assert _growth_excess([1e-13, 5e-13, 2e-13], 1e-12) == 0.0
    assert _growth_excess([1e-3, 2e-3], 1e-12) == pytest.approx(1e-3)


def test_order_residual_roundoff_family():
    rows = [{"N": n, "norm": 1e-15, "zero_level": 1e-10} for n in (8, 16, 32)]
    assert _order_residual(OrderEstimate("PASS", -1, 0, rows)) == 0.0
    rows[-1]["norm"] = 1.0
    assert _order_residual(OrderEstimate("FAIL", -1, 0, rows)) == pytest.approx(1e15)


def test_report_json_is_sorted_and_timestamp_optional():
    rep = VerificationReport("2d", {"name": "circle"}, {"z": 0.0})
    rep.add("x", "ref", 1e-13, 1e-10)
    rep.add_table("t", [{"N": 4, "norm": 0.123456789}])
    d = json.loads(rep.to_json())
    assert "timestamp" in d
    assert "timestamp" not in json.loads(rep.to_json(timestamp=False))
    assert rep.table_csv("t") == "N,norm\n4,0.123457\n"
    assert rep.passed and rep.check("x").verdict == "PASS"


def test_suite_2d_is_deterministic():
    cfg = RunConfig(geometry="bean", n=40, resolutions=[24, 32, 40], seed=7)
    a = run_suite_2d(cfg).to_json(timestamp=False)
    b = run_suite_2d(RunConfig(geometry="bean", n=40, resolutions=[24, 32, 40], seed=7)).to_json(
        timestamp=False)
    assert a == b


def test_convergence_sweep_2d():
    cfg = RunConfig(geometry="ellipse", resolutions=[16, 32, 64])
    rep = convergence_sweep(cfg)
    assert rep.passed, rep.summary()
    rows = next(t["rows"] for t in rep.tables if t["name"] == "identity_residuals")
    assert [r["N"] for r in rows] == [16, 32, 64]


def test_convergence_sweep_needs_three():
    with pytest.raises(ValueError):
        convergence_sweep(RunConfig(resolutions=[16, 32]))


def test_suite_3d_level1():
    rep = run_suite_3d(RunConfig(dim=3, level=1, levels=[1]))
    assert rep.passed, rep.summary()
    ids = {c.id for c in rep.checks}
    assert {"R_squared", "anticommutation", "square_identity", "spectral_pairing",
            "dimension_balance", "control_naive_pv", "C_m_limit"} <= ids
    info = next(t["rows"] for t in rep.tables if t["name"] == "informational")
    assert {r["quantity"] for r in info} >= {"corollary_remainder_norm", "naive_R_squared"}
