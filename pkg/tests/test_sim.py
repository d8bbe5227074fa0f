"""Monte Carlo simulator: exactness, determinism, calibration."""

from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from persuade.errors import HorizonTooShort, OutOfRange
from persuade.oracle import slide_only_policy
from persuade.sim import (
    SimConfig,
    compare_policies,
    default_period,
    simulate,
    write_calibration_csv,
    write_trace_csv,
)
from persuade.solver import solve


# --- configuration ------------------------------------------------------------

def test_default_period_scales_with_rates(canon_problem):
    assert default_period(canon_problem) == 0.01 / 3.0


@pytest.mark.parametrize("kwargs", [
    {"delta": 0.0}, {"horizon": 0}, {"n_paths": 0}, {"initial_belief": 1.5},
    {"initial_belief": -0.1},
])
def test_config_validation(kwargs):
    base = {"delta": 0.01, "horizon": 100, "n_paths": 10, "seed": 0,
            "initial_belief": 0.5}
    base.update(kwargs)
    with pytest.raises(OutOfRange):
        SimConfig(**base)


def test_horizon_too_short(canon_problem, canon_solution):
    config = SimConfig(delta=0.01, horizon=10, n_paths=100, seed=0, initial_belief=0.5)
    with pytest.raises(HorizonTooShort) as exc:
        simulate(canon_problem, canon_solution.policy, config)
    assert "periods" in str(exc.value)


def test_tail_bound_formula(canon_problem, canon_solution):
    config = SimConfig(delta=0.01, horizon=400, n_paths=16, seed=0, initial_belief=0.5)
    res = simulate(canon_problem, canon_solution.policy, config)
    assert res.tail_bound == math.exp(-0.01) ** 400 * 1.0


# --- exact cases --------------------------------------------------------------

def test_flat_payoff_mean_is_deterministic(flat_problem):
    config = SimConfig(delta=0.05, horizon=200, n_paths=50, seed=1, initial_belief=0.3)
    res = simulate(flat_problem, slide_only_policy(flat_problem), config)
    x = math.exp(-0.05)
    assert res.mean_discounted_payoff == pytest.approx(0.6 * (1.0 - x ** 200), abs=1e-12)
    # Identical paths; the variance formula leaves only cancellation noise.
    assert res.std_error <= 1e-7
    assert res.tail_bound == 0.0       # zero payoff spread, truncation is free


def test_stationary_slide_mean_exact(canon_problem):
    # At p* with no disclosure the belief never moves, so every path collects
    # the flow 0.8 with the mass-one weights: mean = 0.8 (1 - x^horizon).
    config = SimConfig(delta=0.01, horizon=301, n_paths=64, seed=3, initial_belief=0.5)
    res = simulate(canon_problem, slide_only_policy(canon_problem), config)
    x = math.exp(-0.01)
    assert res.mean_discounted_payoff == pytest.approx(0.8 * (1.0 - x ** 301), abs=1e-12)
    assert res.std_error <= 1e-7


def test_single_path_has_no_std_error(flat_problem):
    config = SimConfig(delta=0.05, horizon=100, n_paths=1, seed=0, initial_belief=0.5)
    res = simulate(flat_problem, slide_only_policy(flat_problem), config)
    assert math.isnan(res.std_error)
    assert math.isfinite(res.mean_discounted_payoff)


# --- determinism --------------------------------------------------------------

def test_same_seed_bit_identical(canon_problem, canon_solution):
    config = SimConfig(delta=0.01, horizon=400, n_paths=5000, seed=11, initial_belief=0.4)
    a = simulate(canon_problem, canon_solution.policy, config, record_trace=True)
    b = simulate(canon_problem, canon_solution.policy, config, record_trace=True)
    assert a.mean_discounted_payoff == b.mean_discounted_payoff
    assert a.std_error == b.std_error
    assert a.calibration == b.calibration
    np.testing.assert_array_equal(a.trace, b.trace)


def test_thread_count_does_not_change_results(canon_problem, canon_solution, monkeypatch):
    config = SimConfig(delta=0.01, horizon=300, n_paths=9000, seed=7, initial_belief=0.4)
    serial = simulate(canon_problem, canon_solution.policy, config)
    monkeypatch.setenv("PERSUADE_THREADS", "3")
    threaded = simulate(canon_problem, canon_solution.policy, config)
    assert serial.mean_discounted_payoff == threaded.mean_discounted_payoff
    assert serial.std_error == threaded.std_error
    assert serial.calibration == threaded.calibration


def test_different_seeds_differ(canon_problem, canon_solution):
    config = SimConfig(delta=0.01, horizon=300, n_paths=500, seed=0, initial_belief=0.4)
    other = SimConfig(delta=0.01, horizon=300, n_paths=500, seed=1, initial_belief=0.4)
    a = simulate(canon_problem, canon_solution.policy, config)
    b = simulate(canon_problem, canon_solution.policy, other)
    assert a.mean_discounted_payoff != b.mean_discounted_payoff


# --- statistical checks -------------------------------------------------------

def test_state_frequency_matches_stationary_belief(canon_problem):
    # Holding the belief at p* = 0.5, the state itself is a symmetric chain
    # started from its stationary law, so the long-run state-1 share is 0.5.
    config = SimConfig(delta=0.01, horizon=300, n_paths=4000, seed=5, initial_belief=0.5)
    res = simulate(canon_problem, slide_only_policy(canon_problem), config)
    total = sum(b.count for b in res.calibration)
    ones = sum(b.state_one for b in res.calibration)
    beliefs = sum(b.belief_sum for b in res.calibration)
    assert total == 4000 * 300
    assert beliefs / total == pytest.approx(0.5, abs=1e-12)
    # Paths are independent; a per-path time average has SD at most 0.5.
    assert abs(ones / total - 0.5) <= 3.0 * 0.5 / math.sqrt(4000)


def test_calibration_bins_match_beliefs(canon_problem, canon_solution):
    # From 0.3 the optimal policy visits the posterior atoms 0.2, 0.4, 0.6,
    # so three separate bins accumulate enough mass to test.
    config = SimConfig(delta=0.01, horizon=400, n_paths=4000, seed=9, initial_belief=0.3)
    res = simulate(canon_problem, canon_solution.policy, config)
    checked = 0
    for b in res.calibration:
        if b.count < 1000:
            continue
        checked += 1
        assert abs(b.frequency - b.center) <= 3.0 * b.std_error + b.half_width
    assert checked >= 3


def test_calibration_counts_are_consistent(canon_problem, canon_solution):
    config = SimConfig(delta=0.01, horizon=301, n_paths=1000, seed=2, initial_belief=0.6)
    res = simulate(canon_problem, canon_solution.policy, config)
    for b in res.calibration:
        assert 0 <= b.state_one <= b.count
        if b.count:
            assert b.lo - 1e-12 <= b.predicted <= b.hi + 1e-12


# --- policy comparison --------------------------------------------------------

def test_compare_policies_nothing_beats_the_solution(canon_problem, canon_solution):
    config = SimConfig(delta=0.01, horizon=400, n_paths=4000, seed=13, initial_belief=0.5)
    rows = compare_policies(
        canon_problem, canon_solution,
        {"sigma_star": canon_solution.policy,
         "slide_only": slide_only_policy(canon_problem)},
        beliefs=[0.3, 0.5], config=config,
    )
    assert len(rows) == 4
    assert {row["policy"] for row in rows} == {"sigma_star", "slide_only"}
    for row in rows:
        assert not row["beats_value"], row
    # The silent policy is clearly suboptimal away from the stationary belief.
    slide_at_03 = next(r for r in rows
                       if r["policy"] == "slide_only" and r["initial_belief"] == 0.3)
    shortfall = slide_at_03["solver_value"] - slide_at_03["mean"]
    assert shortfall > 3.0 * slide_at_03["std_error"] + 0.01


def test_compare_policies_optimal_within_noise(canon_problem, canon_solution):
    config = SimConfig(delta=0.005, horizon=900, n_paths=4000, seed=17, initial_belief=0.5)
    rows = compare_policies(canon_problem, canon_solution,
                            {"sigma_star": canon_solution.policy},
                            beliefs=[0.5], config=config)
    (row,) = rows
    assert abs(row["excess"]) <= 3.0 * row["std_error"] + 0.01


def test_compare_policies_empty_input(canon_problem, canon_solution):
    config = SimConfig(delta=0.01, horizon=400, n_paths=10, seed=0, initial_belief=0.5)
    assert compare_policies(canon_problem, canon_solution, {}, [0.5], config) == []


# --- trace and CSV output -----------------------------------------------------

def test_trace_shape_and_columns(canon_problem, canon_solution):
    config = SimConfig(delta=0.02, horizon=160, n_paths=8, seed=21, initial_belief=0.35)
    res = simulate(canon_problem, canon_solution.policy, config, record_trace=True)
    assert res.trace is not None
    assert res.trace.shape == (160, 5)
    np.testing.assert_array_equal(res.trace[:, 0], np.arange(160))
    np.testing.assert_allclose(res.trace[:, 1], 0.02 * np.arange(1, 161), atol=1e-15)
    assert set(np.unique(res.trace[:, 2])) <= {0.0, 1.0}
    assert np.all((res.trace[:, 3] >= 0.0) & (res.trace[:, 3] <= 1.0))
    assert np.all((res.trace[:, 4] >= 0.0) & (res.trace[:, 4] <= 1.0))


def test_trace_absent_by_default(flat_problem):
    config = SimConfig(delta=0.05, horizon=100, n_paths=4, seed=0, initial_belief=0.5)
    res = simulate(flat_problem, slide_only_policy(flat_problem), config)
    assert res.trace is None
    with pytest.raises(ValueError):
        write_trace_csv(res, "/dev/null")


def test_trace_csv_round_trip(tmp_path, canon_problem, canon_solution):
    config = SimConfig(delta=0.02, horizon=160, n_paths=4, seed=33, initial_belief=0.5)
    res = simulate(canon_problem, canon_solution.policy, config, record_trace=True)
    path = tmp_path / "trace.csv"
    write_trace_csv(res, path)
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["period", "time", "state", "drifted_belief", "belief"]
    assert len(rows) == 161
    assert float(rows[1][4]) == res.trace[0, 4]


def test_calibration_csv(tmp_path, canon_problem, canon_solution):
    config = SimConfig(delta=0.01, horizon=301, n_paths=500, seed=4, initial_belief=0.5)
    res = simulate(canon_problem, canon_solution.policy, config)
    path = tmp_path / "calib.csv"
    write_calibration_csv(res, path)
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0][:3] == ["bin_lo", "bin_hi", "bin_center"]
    assert len(rows) == 22
    assert float(rows[1][0]) == 0.0
    assert float(rows[-1][1]) == 1.0


# --- cross-checks against the solved value ------------------------------------

def test_simulated_optimal_value_near_solver(canon_problem, canon_solution):
    config = SimConfig(delta=0.005, horizon=900, n_paths=8000, seed=41, initial_belief=0.3)
    res = simulate(canon_problem, canon_solution.policy, config)
    target = float(canon_solution.value.value(0.3))
    budget = 3.0 * res.std_error + res.tail_bound + 0.01
    assert abs(res.mean_discounted_payoff - target) <= budget


def test_pinned_instance_simulates(pinned_problem):
    sol = solve(pinned_problem)
    config = SimConfig(delta=0.01, horizon=301, n_paths=2000, seed=8, initial_belief=0.5)
    res = simulate(pinned_problem, sol.policy, config)
    budget = 3.0 * res.std_error + res.tail_bound + 0.01
    assert abs(res.mean_discounted_payoff - 0.7) <= budget
