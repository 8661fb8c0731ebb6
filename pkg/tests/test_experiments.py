import json
import math

import numpy as np
import pytest

from boselab.equilibrium import RegimeError, deviation_radius, solve_b, threshold
from boselab.exact_oracle import enumerate_configs, exact_linear_statistic
from boselab.experiments import (
    choose_backend,
    resolve_f,
    run_coloring,
    run_condensation,
    run_deviation,
    run_profile,
)
from boselab.multiplicities import MultiplicitySpec

LINEAR = MultiplicitySpec("power_law", d=2)
D3 = MultiplicitySpec("power_law", d=3)


def _replayable(rep):
    d = rep.to_dict()
    d.pop("wall_time")
    return d


def test_zero_statistic_never_deviates():
    rep = run_deviation(LINEAR, 50, f_choice=0.0, count=300, seed=1, delta=0.0)
    assert rep.empirical_tail == 0 and rep.statistic == "custom"


def test_tiny_deviation_matches_enumeration():
    M, delta = 8, 1.5
    rep = run_deviation(LINEAR, M, "all_ones", count=20_000, seed=2, delta=delta)
    p = exact_linear_statistic(LINEAR, M, 1.0).abs_tail(delta)
    se = max(rep.stderr, math.sqrt(p * (1 - p) / rep.count))
    assert abs(rep.empirical_tail - p) <= 3 * se
    assert 0 <= rep.empirical_tail <= 1


def test_reports_replay_exactly():
    a = run_deviation(LINEAR, 300, "alternating", count=200, seed=7)
    b = run_deviation(LINEAR, 300, "alternating", count=200, seed=7)
    assert _replayable(a) == _replayable(b)
    c = run_condensation(D3, 300, 2 * round(threshold(D3, 300)), count=100, seed=7)
    d = run_condensation(D3, 300, 2 * round(threshold(D3, 300)), count=100, seed=7)
    assert _replayable(c) == _replayable(d)


def test_deviation_tail_decreases_with_M():
    reps = [run_deviation(LINEAR, M, "all_ones", count=400, seed=3, chi="const:0.15") for M in (500, 2000, 8000)]
    for a, b in zip(reps, reps[1:]):
        assert b.empirical_tail <= a.empirical_tail + 2 * math.hypot(a.stderr, b.stderr)
    assert reps[0].delta < reps[1].delta < reps[2].delta


def test_acceptance_style_deviation_run():
    rep = run_deviation(LINEAR, 2000, "all_ones", count=1000, seed=4)
    assert rep.empirical_tail <= 0.05 and rep.passed
    assert rep.backend == "exact_sequential"
    assert rep.theory["Nbar"] == pytest.approx(solve_b(LINEAR, 2000).Nbar)


def test_tail_from_l_choice():
    label, f = resolve_f("tail_from_l:3")
    assert label == "tail_from_l:3"
    np.testing.assert_array_equal(f(np.arange(6)), [0, 0, 0, 1, 1, 1])
    rep = run_deviation(LINEAR, 200, "tail_from_l", l=2, count=200, seed=5)
    assert rep.statistic == "tail_from_l:2"
    with pytest.raises(ValueError):
        resolve_f("tail_from_l")
    with pytest.raises(ValueError):
        resolve_f("sinusoid")


def test_condensation_rejects_normal_regime():
    with pytest.raises(RegimeError):
        run_condensation(D3, 500, int(threshold(D3, 500)), count=10, seed=1)


@pytest.mark.parametrize("factor", ["plus_delta", "ten"])
def test_condensate_tracks_excess(factor):
    M = 500
    t = threshold(D3, M)
    delta = deviation_radius(t, 3).delta
    N = math.ceil(t + delta) if factor == "plus_delta" else round(10 * t)
    rep = run_condensation(D3, M, N, count=300, seed=6)
    assert abs(rep.details["mean_N0"] - (N - t)) <= rep.delta
    assert rep.empirical_tail <= 0.05 and rep.passed


def test_backend_selection():
    assert choose_backend(D3, 100, 20) == "exact_fixed_table"
    assert choose_backend(D3, 2000, 353) == "exact_projected"
    assert choose_backend(D3, 2000) == "exact_sequential"
    assert choose_backend(D3, 2000, memory_budget=1000) == "boltzmann_importance"


def test_fixed_backends_agree():
    M, N = 60, 20
    a = run_condensation(D3, M, N, count=4000, seed=8, backend="exact_fixed_table")
    b = run_condensation(D3, M, N, count=4000, seed=8, backend="exact_projected")
    se = math.hypot(a.details["mean_N0_stderr"], b.details["mean_N0_stderr"])
    assert abs(a.details["mean_N0"] - b.details["mean_N0"]) <= 4 * se


def test_importance_backend_matches_enumeration():
    M, delta = 20, 3.0
    rep = run_deviation(LINEAR, M, "all_ones", count=50_000, seed=9, delta=delta,
                        backend="boltzmann_importance")
    p = exact_linear_statistic(LINEAR, M, 1.0).abs_tail(delta)
    assert rep.backend == "boltzmann_importance" and rep.details["accepted"] <= 50_000
    assert abs(rep.empirical_tail - p) <= 4 * rep.stderr


def test_coloring_report():
    rep = run_coloring(D3, 1e8, [1, 2, 4, 16])
    ratios = [r["ratio"] for r in rep.table]
    assert ratios[0] == pytest.approx(1.0)
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] / 2 - 1) <= 0.02 and rep.passed
    assert rep.empirical_tail is None
    assert "rel_dev" in rep.to_csv().splitlines()[0]


def test_profile_sup_shrinks():
    meds = [run_profile(LINEAR, M, 0.5, 3.0, 11, count=100, seed=3).details["median_sup"]
            for M in (500, 2000, 8000)]
    assert meds[0] > meds[1] > meds[2]


def test_profile_mean_matches_exact_expectation():
    M = 8
    rep = run_profile(LINEAR, M, 1.0, 1.0 + 1e-9, 1, count=20_000, seed=4)
    b = rep.theory["b"]
    first = math.floor(1.0 / b) + 1
    ws = [(sum(k for j, k in c.occupations if j >= first), float(w)) for c, w in enumerate_configs(LINEAR, M)]
    tot = sum(w for _, w in ws)
    mean = sum(v * w for v, w in ws) / tot
    var = sum(v * v * w for v, w in ws) / tot - mean**2
    exact = b**2 * mean
    se = b**2 * math.sqrt(var / rep.count)
    assert abs(rep.table[0]["mean_scaled"] - exact) <= 3 * se


def test_profile_rejects_bad_grid():
    with pytest.raises(ValueError):
        run_profile(LINEAR, 50, 1.0, 0.5)
    with pytest.raises(ValueError):
        run_profile(LINEAR, 50, 0.5, 1.0, grid_points=0)


def test_report_serialization():
    rep = run_deviation(LINEAR, 100, "all_ones", count=50, seed=1)
    data = json.loads(rep.to_json())
    for key in ("kind", "spec", "M", "count", "seed", "chi", "delta", "statistic", "empirical_tail",
                "stderr", "theory", "wall_time", "backend"):
        assert key in data
    assert data["spec"] == "power:d=2,Q=1,q0=1"
    assert rep.to_csv().count("\n") == 2
