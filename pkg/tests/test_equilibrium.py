import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boselab.equilibrium import (
    ConvergenceError,
    RegimeError,
    classify,
    coloring_threshold,
    condensed_profile,
    cumulative_tail,
    deviation_radius,
    energy_sum,
    occupation,
    reference_profile,
    resolve_chi,
    solve_b,
    solve_beta_mu,
    threshold,
    total_occupation,
)
from boselab.multiplicities import MultiplicitySpec, parse_spec
from boselab.special_sums import bose_integral, gamma_zeta

D3 = MultiplicitySpec("power_law", d=3)
LINEAR = MultiplicitySpec("power_law", d=2)

# (spec, M) -> (b, Nbar), mpmath findroot on nsum at 30 digits
ROOTS = {
    ("power:d=3,Q=1", 2000): (0.238709296470179214143522487549604, 176.396020332969201640517116448318),
    ("power:d=2,Q=1", 100): (0.288337310907393790371075771541205, 18.0930764080266608543756194808727),
    ("osc:d=3", 500): (0.307930032490566201241215753839526, 70.6297675343064229075611233962599),
    ("power:d=1.5,Q=2", 1000): (0.104765304812704515242882807056261, 108.876520236021974178917474639421),
}
# q_j = j^2, q0 = 1, M = 2000, N = 100: mpmath two-dimensional findroot
BETA_MU = (0.148160549632610018735166220019, 1.8389064817781455723909465154)


@pytest.mark.parametrize("key", list(ROOTS))
def test_solve_b_oracle(key):
    sol = solve_b(parse_spec(key[0]), key[1])
    b, nbar = ROOTS[key]
    assert sol.b == pytest.approx(b, rel=1e-11)
    assert sol.Nbar == pytest.approx(nbar, rel=1e-11)
    assert abs(sol.residual) <= 1e-10 * key[1]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["power:d=3,Q=1", "power:d=2,Q=1", "osc:d=3", "power:d=1.5,Q=0.5",
                        "table:[7,0.2,3];power:d=2.5,Q=1"]),
       st.floats(1.0, 1e7))
def test_root_brackets_target(text, M):
    spec = parse_spec(text)
    sol = solve_b(spec, M)
    assert abs(sol.residual) <= 1e-10 * max(1, M)
    h = max(10 * 1e-10, 1e-12 * sol.b)
    lo = energy_sum(spec, sol.b - h, 1e-14 * M).value
    hi = energy_sum(spec, sol.b + h, 1e-14 * M).value
    assert lo >= M * (1 - 1e-12) and hi <= M * (1 + 1e-12)


def test_b_decreasing_and_threshold_increasing():
    sols = [solve_b(D3, M) for M in (100, 1000, 10**4, 10**5)]
    assert all(a.b > b.b for a, b in zip(sols, sols[1:]))
    assert all(a.Nbar < b.Nbar for a, b in zip(sols, sols[1:]))


def test_solve_b_rejects_nonpositive():
    with pytest.raises(ValueError):
        solve_b(D3, 0)


@pytest.mark.parametrize("d", [2.5, 3, 4])
def test_asymptotic_ratios(d):
    spec = MultiplicitySpec("power_law", d=d)
    dev_m, dev_n = [], []
    for M in (1e5, 1e6, 1e7, 1e8):
        sol = solve_b(spec, M)
        rm = sol.b ** (d + 1) * M / gamma_zeta(d + 1)
        rn = sol.b**d * sol.Nbar / gamma_zeta(d)
        dev_m.append(abs(rm - 1))
        dev_n.append(abs(rn - 1))
        if M >= 1e7:
            assert 0.95 <= rm <= 1.05 and 0.95 <= rn <= 1.05
    assert all(a > b for a, b in zip(dev_m, dev_m[1:]))
    assert all(a > b for a, b in zip(dev_n, dev_n[1:]))


def test_large_M_closed_forms():
    sol = solve_b(D3, 1e8)
    assert 0.99 <= sol.b * (gamma_zeta(4) / 1e8) ** -0.25 <= 1.01
    assert total_occupation(D3, sol.b) * sol.b**3 / gamma_zeta(3) == pytest.approx(1, rel=0.02)
    c3 = gamma_zeta(3) / gamma_zeta(4) ** 0.75
    assert c3 == pytest.approx(0.5910, abs=1e-4)
    assert 0.98 <= threshold(D3, 1e8) / (c3 * 1e8**0.75) <= 1.02


def test_occupation_examples():
    b = math.log(2)
    assert occupation(LINEAR, b, 1) == pytest.approx(1.0, rel=1e-15)
    assert occupation(LINEAR, b, 2) == pytest.approx(2 / 3, rel=1e-15)
    assert occupation(LINEAR, 0.5, 3) > occupation(LINEAR, 0.6, 3)


def test_total_occupation_consistency():
    sol = solve_b(D3, 5000)
    assert total_occupation(D3, sol.b) == pytest.approx(sol.Nbar, abs=1e-9)
    assert total_occupation(D3, sol.b) >= occupation(D3, sol.b, 1)


def test_cumulative_tail():
    assert cumulative_tail(LINEAR, 1.0, 3) == pytest.approx(0.291588741146235092564, rel=1e-14)
    assert cumulative_tail(LINEAR, 0.7, 1) == pytest.approx(total_occupation(LINEAR, 0.7), rel=1e-14)
    tails = [cumulative_tail(LINEAR, 0.3, l) for l in range(1, 30)]
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    for b in (0.05, 0.02):
        l = 20
        approx = b**-2 * bose_integral(2, b * l)
        assert cumulative_tail(LINEAR, b, l) == pytest.approx(approx, rel=0.05)


def test_deviation_radius_examples():
    e2 = math.e**2
    assert deviation_radius(e2, 3, "const:1").delta == pytest.approx(math.e * math.sqrt(2), rel=1e-14)
    assert deviation_radius(e2, 2, "const:1").delta == pytest.approx(2 * math.e, rel=1e-14)
    assert deviation_radius(e2, 2.0001, "const:1").delta == pytest.approx(math.e * math.sqrt(2), rel=1e-14)
    assert not deviation_radius(e2, 3, "const:1").within_hypothesis
    dd = deviation_radius(100.0, 3)
    assert dd.within_hypothesis and dd.chi == "loglog"
    assert dd.delta == pytest.approx(math.sqrt(100 * math.log(100)) * (1 + math.log1p(math.log(101))))
    with pytest.raises(ValueError):
        deviation_radius(math.e, 3)
    with pytest.raises(ValueError):
        resolve_chi("cubic")


def test_classify_boundaries():
    t = threshold(D3, 2000)
    assert classify(D3, 2000, t / 2).kind == "normal"
    assert classify(D3, 2000, 2 * t).kind == "condensed"
    assert classify(D3, 2000, t).kind == "normal"


def test_beta_mu_oracle():
    gc = solve_beta_mu(D3, 2000, 100)
    assert gc.beta == pytest.approx(BETA_MU[0], rel=1e-10)
    assert gc.mu == pytest.approx(BETA_MU[1], rel=1e-10)
    assert abs(gc.residual_N) <= 1e-10 * 100 and abs(gc.residual_M) <= 1e-10 * 2000


def test_beta_mu_limits():
    sol = solve_b(D3, 1e6)
    gc = solve_beta_mu(D3, 1e6, sol.Nbar / 2)
    assert gc.mu > 0
    near = solve_beta_mu(D3, 1e6, 0.999 * sol.Nbar)
    assert abs(near.beta - sol.b) / sol.b <= 0.05
    assert near.mu < gc.mu


def test_regimes_partition_the_plane():
    t = threshold(D3, 3000)
    for N in (0.3 * t, 0.9 * t, 1.1 * t, 3 * t):
        ok = []
        for fn in (solve_beta_mu, condensed_profile):
            try:
                fn(D3, 3000, N)
                ok.append(True)
            except RegimeError:
                ok.append(False)
        assert sum(ok) == 1
        assert ok[0] == (N <= t)


def test_condensed_profile():
    t = threshold(D3, 3000)
    n0, b = condensed_profile(D3, 3000, t + 100)
    assert n0 == pytest.approx(100, abs=1e-8)
    n0b, b2 = condensed_profile(D3, 3000, 5 * t)
    assert b == b2
    prof = reference_profile(D3, 3000, t + 100)
    assert prof.sum() == pytest.approx(t + 100, rel=1e-10)


def test_reference_profile_normal_regime_conserves():
    prof = reference_profile(D3, 2000, 100)
    j = np.arange(len(prof))
    assert prof.sum() == pytest.approx(100, rel=1e-9)
    assert (j * prof).sum() == pytest.approx(2000, rel=1e-9)


def test_coloring():
    M = 1e8
    base = threshold(D3, M)
    assert coloring_threshold(D3, M, 1) == pytest.approx(base, rel=1e-14)
    ratios = [coloring_threshold(D3, M, K) / base for K in (2, 4, 8, 16)]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert 0.98 * 2 <= ratios[-1] <= 1.02 * 2
    with pytest.raises(ValueError):
        coloring_threshold(D3, M, 0)


def test_threshold_increasing_in_Q():
    vals = [threshold(MultiplicitySpec("power_law", d=3, Q=Q), 5000) for Q in (0.5, 1, 2, 4)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_convergence_error_is_arithmetic():
    assert issubclass(ConvergenceError, ArithmeticError)
