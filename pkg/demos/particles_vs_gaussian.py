"""
Particles against the Gaussian closed form
==========================================

Ten thousand particles driven by the same affine feedback and
Euler-Maruyama noise should match the moment equations up to Monte Carlo
error.  The noise is counter based, so the cloud is identical however the
particles are split across threads.
"""

import numpy as np

from lqmfc import (
    Gaussian,
    ProblemSpec,
    TimeGrid,
    ViscousOptions,
    propagate_deterministic,
    propagate_gaussian,
    propagate_viscous,
    sample_initial,
    sup_w2,
    synthesize,
)

spec = ProblemSpec.build(1, 1.0, B=[[1.0]], R=[[1.0]], QT=[[1.0]], initial=Gaussian([1.0], [[0.25]]))
grid = TimeGrid(500, 1.0)
_, fb = synthesize(spec, grid)

n, eps = 10_000, 0.1
cloud = sample_initial(spec.initial, n, seed=1)
one = propagate_viscous(spec, fb, cloud, ViscousOptions(eps, n, seed=2), grid)
four = propagate_viscous(spec, fb, cloud, ViscousOptions(eps, n, seed=2), grid, workers=4)
print("thread count changes nothing:", np.array_equal(one.points, four.points))

law = propagate_gaussian(spec, fb, spec.initial, eps, grid)
x = one.points[-1, :, 0]
print(f"mean at T: particles {x.mean():.4f}  closed form {law.mean[-1, 0]:.4f}")
print(f"var  at T: particles {x.var():.4f}  closed form {law.cov[-1, 0, 0]:.4f}")

# viscous against deterministic particles, same cloud
zero = propagate_deterministic(spec, fb, cloud, grid)
print(f"sup W2 to the noiseless cloud: {sup_w2(one, zero):.4f}")
