"""Release criteria at full desk scale.

Each test runs one check from :mod:`cogbeam.suites`, re-asserts its thresholds
on the raw metrics, and records a PASS/FAIL line that is printed in the
terminal summary.
"""
import math

import numpy as np
import pytest

from cogbeam import suites

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

REPORT: list[str] = []


@pytest.fixture(scope="module")
def tally():
    return suites.KktTally()


def _record(label, ok, detail, seconds, limit=None):
    timing = f"{seconds:.1f}s" + (f" (limit {limit:.0f}s)" if limit else "")
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail} [{timing}]"
    REPORT.append(line)
    print(line)


def test_criterion_1_exactness(tally):
    res = suites.check_exactness(n_per_k=100, tally=tally)
    m = res.metrics
    ratios = np.concatenate([m["ratios_k1"], m["ratios_k2"]])
    ok = (len(m["ratios_k1"]) == 100 and len(m["ratios_k2"]) == 100
          and np.max(np.abs(ratios - 1)) <= 1e-6 and np.max(m["violations"]) <= 1e-8
          and set(m["provenance"]) <= {"ExactK1", "ExactK2"} and res.seconds < 120)
    _record("1 exactness K<=2", ok, res.summary, res.seconds, 120)
    assert ok


def test_criterion_2_rounding_quality(tally):
    res = suites.check_rounding_quality(n_realizations=100, draws=100, tally=tally)
    m = res.metrics
    ok = (np.max(m["violations"]) <= 1e-8 and np.max(m["draw_levels"]) <= 1 + 1e-8
          and np.max(m["ratios"]) <= 1 + 1e-7 and res.seconds < 300)
    q = np.quantile(m["ratios"], [0.0, 0.1, 0.5, 0.9])
    detail = (f"{res.summary}; deciles min/10%/50%/90% = " + "/".join(f"{v:.6f}" for v in q))
    _record("2 rounding quality", ok, detail, res.seconds, 300)
    assert ok
    # the median target is a calibration value; it is reported, not enforced
    if not m["calibration_met"]:
        pytest.skip("median ratio below the 0.95 calibration target")


def test_criterion_3_rounding_bound(tally):
    res = suites.check_rounding_bound(n_instances=100, trials_per_instance=10, alphas=(8.0, 16.0, 32.0),
                                      tally=tally)
    rows = res.metrics["by_alpha"]
    ok = res.metrics["trials"] == 1000 and res.seconds < 300
    for a, r in rows.items():
        se = math.sqrt(r["bound"] * (1 - r["bound"]) / res.metrics["trials"])
        ok &= r["frequency"] >= r["bound"] - 3 * se
    _record("3 single-draw probability bound", ok, res.summary, res.seconds, 300)
    assert ok


def test_criterion_4_chance_boundary():
    res = suites.check_boundary_outage(n_samples=100_000)
    cases = [c for c in res.metrics["cases"] if "source" not in c]
    ok = len(cases) == 6 and res.seconds < 60
    for c in res.metrics["cases"]:
        sigma = math.sqrt(c["delta"] * (1 - c["delta"]) / 100_000)
        ok &= abs((1 - c["p_hat"]) - (1 - c["delta"])) <= 3 * sigma
    _record("4 chance-constraint tightness", ok, res.summary, res.seconds, 60)
    assert ok


def test_criterion_5_scenario3(tally):
    res = suites.check_scenario3(n_samples=100_000, tally=tally)
    ok = res.seconds < 60 and np.max(res.metrics["closed_vs_sdp"]) <= 1e-6
    for t in res.metrics["tails"]:
        ok &= abs(t["p_hat"] - t["delta"]) <= 3 * math.sqrt(t["delta"] * (1 - t["delta"]) / 100_000)
    _record("5 scenario-3 calculus", ok, res.summary, res.seconds, 60)
    assert ok


def test_criterion_6_isotropy():
    res = suites.check_isotropy(n_samples=50_000, N_k=4, K=3)
    p = res.metrics["p_values"]
    ok = set(p) == {"MF", "ZF", "MMSE"} and all(v > 0.01 for v in p.values()) \
        and res.metrics["negative_control"] < 1e-6
    _record("6 receiver isotropy", ok, res.summary, res.seconds)
    assert ok


def test_criterion_7_figure_shapes(tally):
    res = suites.check_figure_shapes(n_realizations=200, eps_steps=11, delta_steps=11, tally=tally)
    ok = res.seconds < 900
    for preset, f in res.metrics.items():
        ok &= all(f[f"eps_monotone_{s}"] for s in ("S1", "S2", "S3"))
        ok &= f["ordering"] and f["gap_0db"] > f["gap_10db"]
        ok &= f["delta_monotone_S2"] and f["delta_monotone_S3"]
    _record("7 figure shapes", ok, res.summary, res.seconds, 900)
    assert ok


def test_criterion_8_oracle_sandwich(tally):
    res = suites.check_oracle_sandwich(n_per_k=20, grid_resolution=100, draws_k3=1000, tally=tally)
    rows = res.metrics["rows"]
    ok = len(rows) == 60
    for r in rows:
        ok &= r["brute"] <= r["upper"] + 1e-6
        ok &= abs(r["brute"] - r["solution"]) <= 1e-3 * abs(r["brute"])
    _record("8 oracle sandwich", ok, res.summary, res.seconds)
    assert ok


def test_criterion_9_kkt(tally):
    res = suites.check_kkt(tally=tally)
    m = res.metrics
    ok = m["kkt_failed"] == 0 and all(g == n for g, n in m["slater"].values())
    _record("9 KKT certification", ok, res.summary, res.seconds)
    assert ok
