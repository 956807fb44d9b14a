"""Death-cost derivation and criterion-sweep tests.

Small grids keep the sweep fast; the full-resolution comparative
statics live in the acceptance tests.
"""

import math

import numpy as np
import pytest

from epiethics import EpidemicState, PlannerParams
from epiethics.ethics import WelfareCriterion, default_criteria
from epiethics.planner import GridSpec, SolverConvergenceError
from epiethics.sensitivity import (
    DEFAULT_REFERENCE,
    VictimProfile,
    death_cost_from_criterion,
    run_sensitivity,
)

SMALL = GridSpec(n_S=40, n_I=40, n_L=11)
PARAMS = PlannerParams()


# ---------------------------------------------------------------------------
# pricing a death
# ---------------------------------------------------------------------------

def test_sum_criteria_price_the_remaining_life_flat():
    victim = VictimProfile(lived=30.0, remaining=20.0, exchange_rate=1.0)
    for kind in ("CU", "TU"):
        crit = WelfareCriterion(kind)
        assert death_cost_from_criterion(crit, (50.0, 50.0), victim) == 20.0
    clu = WelfareCriterion("CLU", c=1.0)
    assert death_cost_from_criterion(clu, (50.0, 50.0), victim) == 20.0


def test_averaging_criterion_dilutes_by_population():
    victim = VictimProfile(lived=30.0, remaining=20.0, exchange_rate=1.0)
    got = death_cost_from_criterion(WelfareCriterion("AU"), (50.0, 50.0),
                                    victim)
    assert abs(got - 20.0 / 3.0) < 1e-12


def test_rank_discounting_halves_the_worst_off_loss():
    victim = VictimProfile(lived=30.0, remaining=20.0, exchange_rate=1.0)
    rd = WelfareCriterion("RDCLU", c=0.0, rank_discount=0.5)
    # The victim is the worst off in both worlds: rank-1 weight 0.5.
    assert death_cost_from_criterion(rd, (50.0, 50.0), victim) == 10.0


def test_exchange_rate_scales_linearly():
    victim = VictimProfile(lived=30.0, remaining=20.0, exchange_rate=2.5)
    assert death_cost_from_criterion(WelfareCriterion("TU"), (50.0, 50.0),
                                     victim) == 50.0


def test_default_reference_population_is_small_and_synthetic():
    assert len(DEFAULT_REFERENCE) >= 1
    got = death_cost_from_criterion(WelfareCriterion("CU"))
    assert got == VictimProfile().remaining * VictimProfile().exchange_rate


def test_victim_profile_validation():
    with pytest.raises(ValueError, match="remaining"):
        VictimProfile(remaining=-1.0)
    with pytest.raises(ValueError, match="exchange_rate"):
        VictimProfile(exchange_rate=0.0)
    with pytest.raises(ValueError, match="finite"):
        VictimProfile(lived=float("nan"))


# ---------------------------------------------------------------------------
# the sweep
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def report():
    return run_sensitivity(PARAMS, default_criteria(), grid=SMALL,
                           ladder=(0.0, 10.0, 20.0, 40.0))


def test_report_rows_follow_input_order(report):
    labels = [row.label for row in report.rows]
    assert labels == [crit.label for crit in default_criteria()]
    assert report.baseline.label == "benchmark"
    assert [row.label for row in report.ladder] == [
        "fixed:0", "fixed:10", "fixed:20", "fixed:40"]


def test_flat_cost_criteria_reproduce_the_baseline(report):
    # CU prices a death exactly like the benchmark config, so its row is
    # the same solve: every reported number must coincide bitwise.
    baseline, cu_row = report.baseline, report.rows[0]
    assert cu_row.cost_per_death == baseline.cost_per_death == 20.0
    for name in ("peak_L", "lockdown_years", "deaths", "gdp_loss", "value"):
        assert getattr(cu_row, name) == getattr(baseline, name)


def test_identical_cost_rows_have_zero_policy_distance(report):
    diffs = {frozenset((a, b)): d for a, b, d in report.policy_diffs}
    assert diffs[frozenset(("CU", "TU"))] == 0.0
    assert diffs[frozenset(("CU", "CLU(c=1)"))] == 0.0
    # The averaging criterion prices deaths lower and locks down less.
    assert diffs[frozenset(("CU", "AU"))] > 0.0


def test_zero_cost_row_never_locks_down(report):
    row = next(r for r in report.ladder if r.cost_per_death == 0.0)
    assert row.peak_L == 0.0
    assert row.lockdown_years == 0.0
    # With no lockdown the deaths match the uncontrolled epidemic: the
    # highest death toll of the whole ladder.
    assert row.deaths == max(r.deaths for r in report.ladder)


def test_ladder_monotonicity(report):
    deaths = [r.deaths for r in report.ladder]
    peaks = [r.peak_L for r in report.ladder]
    assert all(b <= a + 1e-3 for a, b in zip(deaths, deaths[1:]))
    assert all(b >= a - 1e-3 for a, b in zip(peaks, peaks[1:]))


def test_sweep_is_deterministic(report):
    again = run_sensitivity(PARAMS, default_criteria(), grid=SMALL,
                            ladder=(0.0, 10.0, 20.0, 40.0))
    assert again == report


def test_failed_rows_are_recorded_and_skipped(monkeypatch):
    from epiethics import sensitivity as mod

    real = mod.solve_value_function

    def flaky(params, grid, tol=None, max_iters=500, **kw):
        if params.cost_per_death != PARAMS.cost_per_death:
            raise SolverConvergenceError("induced failure", residual=1.0,
                                         row=1)
        return real(params, grid, tol=tol, max_iters=max_iters, **kw)

    monkeypatch.setattr(mod, "solve_value_function", flaky)
    rep = run_sensitivity(PARAMS, (WelfareCriterion("CU"),
                                   WelfareCriterion("AU")), grid=SMALL)
    cu_row, au_row = rep.rows
    assert cu_row.ok and not au_row.ok
    assert "induced failure" in au_row.error
    assert math.isnan(au_row.peak_L)
    # The missing policy propagates as a NaN distance, not a crash.
    assert math.isnan(rep.policy_diffs[0][2])


def test_report_rows_expose_scenario_outcomes(report):
    for row in (report.baseline,) + report.rows:
        assert row.ok
        assert 0.0 <= row.peak_L <= PARAMS.L_bar
        assert 0.0 <= row.deaths < 0.05
        assert row.value > 0.0
    costs = {row.label: row.cost_per_death for row in report.rows}
    assert costs["AU"] < costs["RDCLU(c=1,rd=0.9)"] < costs["CU"]
