"""Concentration, condensation, coloring and profile experiments at desk scale.

Run: python3 demos/experiments.py   (about half a minute)
"""

from boselab import MultiplicitySpec
from boselab.equilibrium import threshold
from boselab.experiments import run_coloring, run_condensation, run_deviation, run_profile

d3 = MultiplicitySpec("power_law", d=3)
d3g = MultiplicitySpec("power_law", d=3, q0=1)

rep = run_deviation(d3, 2000, "all_ones", count=1000, seed=0)
print(f"deviation: frequency {rep.empirical_tail:.3f} beyond Delta {rep.delta:.1f} ({rep.backend})")

N = round(2 * threshold(d3g, 2000))
rep = run_condensation(d3g, 2000, N, count=500, seed=0)
print(f"condensation N={N}: mean N_0 {rep.details['mean_N0']:.2f}, predicted {rep.theory['condensate']:.2f}")

rep = run_coloring(d3, 1e8, [2, 4, 16])
print(f"coloring: passed={rep.passed}")

for M in (500, 2000):
    rep = run_profile(MultiplicitySpec("power_law", d=2), M, 0.5, 3.0, 11, count=200, seed=0)
    print(f"profile M={M}: median sup discrepancy {rep.details['median_sup']:.3f}")
