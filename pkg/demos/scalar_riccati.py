"""
The scalar Riccati cascade
==========================

With ``A = Abar = 0``, ``B = R = 1`` and a unit terminal weight, both
Riccati flows solve ``X' = X^2`` backward from ``X(1) = 1``, so
``P(t) = Sigma(t) = 1 / (2 - t)`` and the mean decays linearly to 1/2.
"""

import numpy as np

from lqmfc import Gaussian, ProblemSpec, synthesize

spec = ProblemSpec.build(1, 1.0, B=[[1.0]], R=[[1.0]], QT=[[1.0]], initial=Gaussian([1.0], [[0.25]]))

# one backward sweep gives every table on the grid; no viscosity goes in
sol, feedback = synthesize(spec, 1000)
t = sol.grid.nodes

print("   t      P(t)      1/(2-t)    xbar(t)   (2-t)/2")
for i in range(0, 1001, 200):
    print(f"{t[i]:5.2f}  {sol.P[i, 0, 0]:.8f}  {1 / (2 - t[i]):.8f}  {sol.xbar[i, 0]:.6f}  {(2 - t[i]) / 2:.6f}")

# the offset closes the cascade: p = (Sigma - P) xbar, zero here since Sigma = P
print("max |p| =", np.abs(sol.p).max())

# a running state weight bends P toward tanh
sol_q, _ = synthesize(spec.replace(Q=[[1.0]], QT=[[0.0]]), 1000)
print(f"Q = 1, QT = 0:  P(0) = {sol_q.P[0, 0, 0]:.12f}   tanh(1) = {np.tanh(1.0):.12f}")

# the optimal feedback itself is u = K x + k
K, k = feedback.gains(0.0)
print("K(0) =", K[0, 0], " k(0) =", k[0])
