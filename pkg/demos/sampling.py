"""Exact and importance sampling, compared to the enumerated distribution.

Run: python3 demos/sampling.py
"""

import collections

from boselab import MultiplicitySpec
from boselab.equilibrium import solve_b
from boselab.exact_oracle import WeightTable, enumerate_configs, exact_linear_statistic
from boselab.sampler import sample_boltzmann, sample_variable, weighted_mean

spec = MultiplicitySpec("power_law", d=2)
M = 6

batch = sample_variable(WeightTable(spec, M), seed=0, count=100_000)
exact = dict(enumerate_configs(spec, M))
total = sum(exact.values())
seen = collections.Counter(batch.configurations)
tv = 0.5 * sum(abs(seen.get(c, 0) / len(batch) - w / total) for c, w in exact.items())
print(f"exact sampler on energy <= {M}: {len(exact)} configurations, TV distance {tv:.4f}")

# self-normalized importance sampling from independent negative binomials
M = 20
b = solve_b(spec, M).b
boltz = sample_boltzmann(spec, b, M, seed=1, count=100_000)
est = weighted_mean(boltz.particles, boltz.weights)
law = exact_linear_statistic(spec, M, lambda j: 1.0)
truth = law.mean + law.center  # the exact law is centered at Nbar
print(f"mean particle count at M={M}: importance {est[0]:.4f} +- {est[1]:.4f}, exact {truth:.4f}")
print(f"accepted {len(boltz)} of {boltz.proposals} proposals")
