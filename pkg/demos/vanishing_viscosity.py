"""
Vanishing viscosity in the scalar family
========================================

Adding noise of intensity ``eps`` leaves the optimal feedback untouched and
only inflates the covariance: ``c_eps(t) = c_0(t) + eps t (2 - t)``.  The
cost rises by ``eps * int_0^1 P dt = eps ln 2`` and the population laws
converge in W2 as ``eps -> 0``.
"""

import math

from lqmfc import Gaussian, ProblemSpec, SweepConfig, epsilon_sweep

spec = ProblemSpec.build(1, 1.0, B=[[1.0]], R=[[1.0]], QT=[[1.0]], initial=Gaussian([1.0], [[0.25]]))
eps = (0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125)
report = epsilon_sweep(spec, SweepConfig(eps, steps=1000))

print("   eps      sup W2    closed form   cost gap    eps ln 2")
for row in report.rows:
    closed = math.sqrt(0.0625 + row.eps) - 0.25  # the gap between roots peaks at t = 1
    print(f"{row.eps:8.6f}  {row.sup_w2:.6f}   {closed:.6f}    {row.cost_gap:.7f}  {row.eps * math.log(2):.7f}")

# the W2 rate creeps up to 1 only once eps is small against c_0(1) = 1/16
print(f"fitted W2 rate {report.w2_rate:.3f}, cost rate {report.cost_rate:.6f}")
print("control reused across eps:", not report.metadata["control_depends_on_eps"])
