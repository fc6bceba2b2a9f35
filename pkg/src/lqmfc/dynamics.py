"""Propagation of state distributions under a feedback control.

Three representations are available:

* :func:`propagate_deterministic` moves an atom cloud along the
  characteristics of the continuity equation, replacing the barycenter by
  the ensemble mean at every Runge-Kutta stage;
* :func:`propagate_viscous` adds the Brownian forcing ``sqrt(2 eps) dW``
  with an Euler-Maruyama step and counter-based noise;
* :func:`propagate_gaussian` integrates mean and covariance in closed
  form, valid for affine feedback where Gaussians stay Gaussian.
"""

from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import NonFinite
from .matkit import spd_sqrt, symmetrize
from .measures import Empirical, Gaussian, UniformBox
from .ode import TimeGrid, as_grid, rk4
from .synthesis import AffineFeedback, tabulate


@dataclass(frozen=True)
class ViscousOptions:
    eps: float
    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError("eps must be nonnegative")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError("samples must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class EmpiricalTrajectory:
    """Atom clouds at every grid node; ``points`` has shape ``(N+1, n, d)``."""

    grid: TimeGrid
    points: np.ndarray

    variant = "empirical"

    def __post_init__(self):
        if self.points.shape[0] != self.grid.steps + 1:
            raise ValueError("one snapshot per grid node is required")
        self.points.setflags(write=False)

    def __len__(self):
        return self.points.shape[0]

    def __getitem__(self, i):
        return Empirical(self.points[i])

    @property
    def size(self):
        return self.points.shape[1]

    @property
    def snapshots(self):
        return [self[i] for i in range(len(self))]

    def barycenters(self):
        return self.points.mean(axis=1)

    def second_moments(self):
        return np.mean(np.sum(self.points**2, axis=2), axis=1)


@dataclass(frozen=True, eq=False)
class GaussianTrajectory:
    """Gaussian laws at every grid node: ``mean (N+1, d)``, ``cov (N+1, d, d)``."""

    grid: TimeGrid
    mean: np.ndarray
    cov: np.ndarray

    variant = "gaussian"

    def __post_init__(self):
        if self.mean.shape[0] != self.grid.steps + 1 or self.cov.shape[0] != self.grid.steps + 1:
            raise ValueError("one snapshot per grid node is required")
        self.mean.setflags(write=False)
        self.cov.setflags(write=False)

    def __len__(self):
        return self.mean.shape[0]

    def __getitem__(self, i):
        return Gaussian(self.mean[i], self.cov[i])

    @property
    def snapshots(self):
        return [self[i] for i in range(len(self))]

    def barycenters(self):
        return np.array(self.mean)

    def second_moments(self):
        return np.sum(self.mean**2, axis=1) + np.trace(self.cov, axis1=1, axis2=2)


def sample_initial(measure, n, seed):
    """``n`` i.i.d. draws from ``measure`` as an Empirical snapshot.

    Gaussian draws map standard normals through the covariance square root;
    box draws map uniforms affinely; Empirical inputs are resampled with
    replacement.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    gen = rng.generator(seed)
    if isinstance(measure, Gaussian):
        root = spd_sqrt(measure.cov)
        z = gen.standard_normal((n, measure.dim))
        return Empirical(measure.mean + z @ root)
    if isinstance(measure, UniformBox):
        u = gen.random((n, measure.dim))
        return Empirical(measure.lo + u * (measure.hi - measure.lo))
    if isinstance(measure, Empirical):
        idx = gen.integers(0, measure.size, size=n)
        return Empirical(measure.points[idx])
    raise TypeError(f"cannot sample from {measure!r}")


def _check_finite(i, x):
    if not np.all(np.isfinite(x)):
        raise NonFinite(f"particle coordinates left the finite range at node {i}")
    return x


def _points(init):
    if isinstance(init, Empirical):
        return np.array(init.points)
    return np.atleast_2d(np.array(init, dtype=float))


def propagate_deterministic(spec, control, init, grid):
    """Interacting-particle solution of the continuity equation.

    Every particle follows ``x' = A x + B u(t, x) + Abar m(t)`` where ``m``
    is the ensemble mean, recomputed at each stage of the classical
    fourth-order step.
    """
    grid = as_grid(grid, spec.horizon)
    tab = tabulate(spec, grid)
    times = grid.half_nodes
    x0 = _points(init)

    def f(j, x):
        m = x.mean(axis=0)
        return x @ tab.A[j].T + control(times[j], x) @ tab.B[j].T + tab.Abar[j] @ m

    with np.errstate(over="ignore", invalid="ignore"):
        pts = rk4(f, x0, grid, post=_check_finite)
    return EmpiricalTrajectory(grid, pts)


def _noise(seed, step, n, d, pool, workers):
    if pool is None:
        return rng.normals(seed, step, 0, n, d)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    parts = pool.map(lambda ab: rng.normals(seed, step, ab[0], ab[1] - ab[0], d), zip(bounds[:-1], bounds[1:]))
    return np.vstack(list(parts))


def propagate_viscous(spec, control, init, opts, grid, workers=1):
    """Euler-Maruyama ensemble for the viscous dynamics.

    ``x <- x + h b(t, x, m, u(t, x)) + sqrt(2 eps h) xi`` with ``xi`` the
    counter-based normal for ``(opts.seed, particle, step)``.  The particle
    count is that of ``init``.  ``workers > 1`` draws the noise in parallel
    chunks; results are bit-identical for every worker count.
    """
    grid = as_grid(grid, spec.horizon)
    tab = tabulate(spec, grid)
    times = grid.nodes
    h = grid.h
    x = _points(init)
    n, d = x.shape
    scale = np.sqrt(2.0 * opts.eps * h)
    out = np.empty((grid.steps + 1, n, d))
    out[0] = x
    with ExitStack() as stack:
        stack.enter_context(np.errstate(over="ignore", invalid="ignore"))
        pool = stack.enter_context(ThreadPoolExecutor(workers)) if workers > 1 else None
        for i in range(grid.steps):
            j = 2 * i
            m = x.mean(axis=0)
            b = x @ tab.A[j].T + control(times[i], x) @ tab.B[j].T + tab.Abar[j] @ m
            x = x + h * b
            if opts.eps > 0:
                x = x + scale * _noise(opts.seed, i, n, d, pool, workers)
            out[i + 1] = _check_finite(i + 1, x)
    return EmpiricalTrajectory(grid, out)


def propagate_gaussian(spec, fb, init, eps, grid):
    """Closed-form Gaussian propagation under affine feedback.

    Integrates ``m' = (A + B K + Abar) m + B k`` and
    ``C' = (A + B K) C + C (A + B K)' + 2 eps I``.
    """
    if not isinstance(fb, AffineFeedback):
        raise TypeError("Gaussian propagation needs an AffineFeedback control")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    grid = as_grid(grid, spec.horizon)
    tab = tabulate(spec, grid)
    times = grid.half_nodes
    d = spec.dimension
    noise = 2.0 * eps * np.eye(d)
    gains = [fb.gains(t) for t in times]

    def f(j, y):
        K, k = gains[j]
        acl = tab.A[j] + tab.B[j] @ K
        m, c = y[:, 0], y[:, 1:]
        out = np.empty_like(y)
        out[:, 0] = (acl + tab.Abar[j]) @ m + tab.B[j] @ k
        out[:, 1:] = acl @ c + c @ acl.T + noise
        return out

    def post(i, y):
        y = y.copy()
        y[:, 1:] = symmetrize(y[:, 1:])
        if not np.all(np.isfinite(y)):
            raise NonFinite(f"Gaussian moments left the finite range at node {i}")
        return y

    y0 = np.column_stack([init.mean, init.cov])
    with np.errstate(over="ignore", invalid="ignore"):
        ys = rk4(f, y0, grid, post=post)
    return GaussianTrajectory(grid, ys[:, :, 0].copy(), ys[:, :, 1:].copy())
