"""Exact weights by dynamic programming, checked against brute enumeration.

Run: python3 demos/exact_counting.py
"""

from boselab import MultiplicitySpec
from boselab.exact_oracle import WeightTable, enumerate_configs, gen_function_coeffs

# a table prefix of ones gives plain integer partitions for every M inside it
unit = MultiplicitySpec("tabled_with_power_tail", d=2, table=(1.0,) * 30)
print("partition numbers:", gen_function_coeffs(unit, 15))

spec = MultiplicitySpec("power_law", d=2)
print("q_j = j, weights of energy exactly m:", gen_function_coeffs(spec, 10))

for conf, w in enumerate_configs(spec, 4):
    if conf.energy == 4:
        print(f"  {conf.as_dict()} weight {w}")

# the log-domain table scales to large M; exact big integers are available on request
table = WeightTable(spec, 2000)
print("log w(energy <= 2000) =", table.log_weight_cumulative(2000))
fixed = WeightTable(MultiplicitySpec("power_law", d=2, q0=1), 50, mode="fixed", N_max=10, exact=True)
print("w(energy <= 50, N = 10) =", fixed.weight_fixed())
