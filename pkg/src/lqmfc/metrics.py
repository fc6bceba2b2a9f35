"""Moments, Wasserstein-2 distances and the cost functional."""

from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dynamics import EmpiricalTrajectory, GaussianTrajectory
from .errors import GridMismatch, LengthMismatch, NotPSD, SizeLimit, VariantMismatch
from .matkit import is_psd, spd_sqrt
from .measures import Empirical, Gaussian
from .problem import running_cost, terminal_cost
from .synthesis import AffineFeedback, tabulate

ASSIGNMENT_CAP = 2048


class CostBreakdown(NamedTuple):
    running: float
    terminal: float
    total: float


def barycenter(s):
    return s.barycenter()


def second_moment(s):
    if isinstance(s, Empirical):
        return float(np.mean(np.sum(s.points**2, axis=1)))
    return float(s.mean @ s.mean + np.trace(s.cov))


def _samples(a):
    if isinstance(a, Empirical):
        if a.dim != 1:
            raise ValueError("w2_1d needs one-dimensional samples")
        return a.points[:, 0]
    return np.ravel(np.asarray(a, dtype=float))


def w2_1d(a, b):
    """Exact W2 between equal-size, equal-weight samples on the line.

    Inputs are sorted here, so unsorted samples are accepted too.
    """
    a = np.sort(_samples(a))
    b = np.sort(_samples(b))
    if a.size != b.size:
        raise LengthMismatch(f"sample counts differ: {a.size} vs {b.size}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def w2_gaussian(g1, g2):
    """Bures-Wasserstein distance between two Gaussians.

    The covariance term is evaluated as ``min_U |R1 - R2 U|_F`` over
    orthogonal ``U`` (``Ri`` the PSD roots), attained at the polar factor of
    ``R1 R2``.  This avoids the cancellation in
    ``tr C1 + tr C2 - 2 tr (R2 C1 R2)^(1/2)``, which near coincidence loses
    half the significant digits.
    """
    for g in (g1, g2):
        if not is_psd(g.cov):
            raise NotPSD("Gaussian covariance is not positive semidefinite")
    dm = g1.mean - g2.mean
    if np.array_equal(g1.cov, g2.cov):
        return float(np.sqrt(dm @ dm))
    r1 = spd_sqrt(g1.cov)
    r2 = spd_sqrt(g2.cov)
    w, _, vt = np.linalg.svd(r1 @ r2)
    resid = r1 - r2 @ (vt.T @ w.T)
    return float(np.sqrt(dm @ dm + np.sum(resid**2)))


def _cloud(a):
    if isinstance(a, Empirical):
        return a.points
    a = np.asarray(a, dtype=float)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def w2_assignment(a, b):
    """Exact W2 between equal-size clouds via optimal assignment."""
    a = _cloud(a)
    b = _cloud(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"cloud shapes differ: {a.shape} vs {b.shape}")
    if a.shape[0] > ASSIGNMENT_CAP:
        raise SizeLimit(f"{a.shape[0]} points exceeds the assignment cap {ASSIGNMENT_CAP}")
    cost = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(np.mean(cost[rows, cols])))


def _w2_snapshot(x, y):
    if isinstance(x, Gaussian):
        return w2_gaussian(x, y)
    if x.dim == 1:
        return w2_1d(x, y)
    return w2_assignment(x, y)


def sup_w2(ta, tb):
    """Maximum over grid nodes of the pointwise W2 distance."""
    if type(ta) is not type(tb):
        raise VariantMismatch(f"cannot compare {ta.variant} with {tb.variant} trajectories")
    if ta.grid != tb.grid:
        raise GridMismatch("trajectories live on different grids")
    if isinstance(ta, EmpiricalTrajectory):
        if ta.size != tb.size:
            raise LengthMismatch("empirical trajectories differ in particle count")
        if ta.points.shape[2] == 1:
            a = np.sort(ta.points[:, :, 0], axis=1)
            b = np.sort(tb.points[:, :, 0], axis=1)
            return float(np.sqrt(np.max(np.mean((a - b) ** 2, axis=1))))
    return max(_w2_snapshot(ta[i], tb[i]) for i in range(len(ta)))


def _trapezoid(values, h):
    return float(h * (np.sum(values) - 0.5 * (values[0] + values[-1])))


def _empirical_cost(spec, traj, control):
    times = traj.grid.nodes
    run = np.empty(times.size)
    for i, t in enumerate(times):
        x = traj.points[i]
        m = x.mean(axis=0)
        run[i] = np.mean(running_cost(spec, t, x, m, control(t, x)))
    x = traj.points[-1]
    term = float(np.mean(terminal_cost(spec, x, x.mean(axis=0))))
    return run, term


def _quad_expect(m, c, w):
    """``E[x' W x]`` for ``x ~ N(m, C)``."""
    return m @ w @ m + np.trace(w @ c)


def _gaussian_cost(spec, traj, fb):
    grid = traj.grid
    tab = tabulate(spec, grid)
    times = grid.nodes
    eye = np.eye(spec.dimension)
    run = np.empty(times.size)
    for i, t in enumerate(times):
        j = 2 * i
        m, c = traj.mean[i], traj.cov[i]
        K, k = fb.gains(t)
        q, qb, r, s = tab.Q[j], tab.Qbar[j], tab.R[j], tab.S[j]
        u = K @ m + k
        dev = (eye - s) @ m
        run[i] = 0.5 * (
            _quad_expect(m, c, q)
            + u @ r @ u
            + np.trace(K.T @ r @ K @ c)
            + dev @ qb @ dev
            + np.trace(qb @ c)
        )
    m, c = traj.mean[-1], traj.cov[-1]
    dev = (eye - spec.ST) @ m
    term = 0.5 * (_quad_expect(m, c, spec.QT) + dev @ spec.QbarT @ dev + np.trace(spec.QbarT @ c))
    return run, float(term)


def total_cost(spec, traj, control):
    """Cost functional along ``traj``, trapezoidal in time.

    Empirical trajectories average the pointwise costs over particles with
    the ensemble mean as barycenter.  Gaussian trajectories need an
    :class:`AffineFeedback` and use exact second-moment identities.
    """
    if abs(traj.grid.horizon - spec.horizon) > 1e-12 * (1.0 + spec.horizon):
        raise GridMismatch("trajectory grid does not span the problem horizon")
    if isinstance(traj, GaussianTrajectory):
        if not isinstance(control, AffineFeedback):
            raise TypeError("Gaussian cost evaluation needs an AffineFeedback control")
        run, term = _gaussian_cost(spec, traj, control)
    else:
        run, term = _empirical_cost(spec, traj, control)
    running = _trapezoid(run, traj.grid.h)
    return CostBreakdown(running, term, running + term)
