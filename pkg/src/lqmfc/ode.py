"""Fixed-step classical Runge-Kutta on a uniform grid.

Right-hand sides are indexed by half-node ``j`` (time ``j * h / 2``) rather
than by time, so callers can tabulate coefficients once on the half-grid
and every stage evaluation is a table lookup.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_i = i * T / N`` for ``i = 0..N``."""

    steps: int
    horizon: float

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("grid steps must be a positive integer")
        if not self.horizon > 0:
            raise ValueError("grid horizon must be positive")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def h(self):
        return self.horizon / self.steps

    @property
    def nodes(self):
        t = self.horizon * np.arange(self.steps + 1) / self.steps
        t[-1] = self.horizon
        return t

    @property
    def half_nodes(self):
        """Nodes and midpoints, ``2N + 1`` times."""
        t = self.horizon * np.arange(2 * self.steps + 1) / (2 * self.steps)
        t[-1] = self.horizon
        return t


def as_grid(grid, horizon):
    if isinstance(grid, TimeGrid):
        if abs(grid.horizon - horizon) > 1e-12 * (1.0 + horizon):
            raise ValueError(f"grid horizon {grid.horizon} differs from problem horizon {horizon}")
        return grid
    return TimeGrid(int(grid), horizon)


def rk4(f, y_start, grid, backward=False, post=None):
    """Integrate ``dy/dt = f(j, y)`` over every node of ``grid``.

    Forward runs start from ``y_start`` at ``t = 0``; backward runs start at
    ``t = T`` and step toward zero.  ``post(i, y)`` may replace the value
    stored at node ``i`` (symmetrization, blow-up checks).  Returns an array
    of shape ``(N + 1,) + y.shape`` indexed by node.
    """
    n = grid.steps
    h = grid.h
    y = np.array(y_start, dtype=float)
    out = np.empty((n + 1,) + y.shape)
    if backward:
        if post is not None:
            y = post(n, y)
        out[n] = y
        for i in range(n - 1, -1, -1):
            a, m, b = 2 * i + 2, 2 * i + 1, 2 * i
            k1 = f(a, y)
            k2 = f(m, y - 0.5 * h * k1)
            k3 = f(m, y - 0.5 * h * k2)
            k4 = f(b, y - h * k3)
            y = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if post is not None:
                y = post(i, y)
            out[i] = y
    else:
        if post is not None:
            y = post(0, y)
        out[0] = y
        for i in range(n):
            a, m, b = 2 * i, 2 * i + 1, 2 * i + 2
            k1 = f(a, y)
            k2 = f(m, y + 0.5 * h * k1)
            k3 = f(m, y + 0.5 * h * k2)
            k4 = f(b, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if post is not None:
                y = post(i + 1, y)
            out[i + 1] = y
    return out


def hermite_midpoints(values, derivs, h):
    """Cubic Hermite values halfway between consecutive nodes.

    Fourth-order accurate, so midpoint stages built from node values keep
    the classical method at full order.
    """
    return 0.5 * (values[:-1] + values[1:]) + (h / 8.0) * (derivs[:-1] - derivs[1:])


def interleave(nodes, mids):
    """Merge node and midpoint samples into one half-grid array."""
    out = np.empty((2 * mids.shape[0] + 1,) + nodes.shape[1:])
    out[0::2] = nodes
    out[1::2] = mids
    return out
