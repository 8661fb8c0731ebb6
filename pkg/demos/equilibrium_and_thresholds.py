"""Equilibrium root b(M), mean particle count and condensation thresholds.

Run: python3 demos/equilibrium_and_thresholds.py
"""

from boselab import MultiplicitySpec
from boselab.equilibrium import coloring_threshold, deviation_radius, solve_b, threshold
from boselab.special_sums import gamma_zeta

spec = MultiplicitySpec("power_law", d=3)

print(f"{'M':>10} {'b':>12} {'Nbar':>12} {'b^4 M / G(4)z(4)':>18} {'Delta':>10}")
for M in (1e3, 1e4, 1e5, 1e6, 1e8):
    sol = solve_b(spec, M)
    ratio = sol.b**4 * M / gamma_zeta(4)
    print(f"{M:10.0e} {sol.b:12.6g} {sol.Nbar:12.6g} {ratio:18.8f} {deviation_radius(sol.Nbar, spec.d).delta:10.4g}")

# coloring each level into K copies scales the threshold like K^(1/(d+1))
base = threshold(spec, 1e8)
for K in (2, 4, 16):
    print(f"K={K:2d}: threshold ratio {coloring_threshold(spec, 1e8, K) / base:.5f}, K^(1/4) = {K ** 0.25:.5f}")
