"""Contour-integral weights and the bound checks built on the action.

Run: python3 demos/saddle_point.py
"""

import math

from boselab import MultiplicitySpec
from boselab.exact_oracle import log_weight_exact_energy
from boselab.saddlepoint import action, check_bounds, contour_log_weight, verify_f21

spec = MultiplicitySpec("power_law", d=2)

for M in (10, 40, 160, 640):
    res = contour_log_weight(spec, M)
    exact = log_weight_exact_energy(spec, M)
    prof = action(spec, M)
    print(f"M={M:4d}  b={prof.b:.4f}  log w contour {res.log_weight:.12f}  "
          f"exact {exact:.12f}  rel err {abs(math.expm1(res.log_weight - exact)):.1e}")

lhs, rhs, ok = verify_f21(spec, 0.3, 1.0)
print(f"off-axis decrease: lhs {lhs:.5f} >= rhs {rhs:.5f}: {ok}")

report = check_bounds(spec, [10, 20, 40, 80])
print(f"r1 max/min {report.r1_ratio:.3f}, tail bounds hold: {report.p2_ok}")
