"""Optimal affine feedback for the LQ mean-field problem.

The solution is assembled from a cascade of backward/forward ODEs:

1. ``Sigma`` solves the Riccati equation of the barycenter problem, with
   drift ``A + Abar`` and state weight ``Q + (I - S)' Qbar (I - S)``;
2. the barycenter ``xbar`` follows ``(A + Abar - G Sigma) xbar`` forward
   from the initial mean, and ``ybar = Sigma xbar``;
3. ``P`` solves the Riccati equation with drift ``A`` and weight ``Q + Qbar``;
4. the offset ``p`` solves a linear backward ODE forced by ``xbar``.

Here ``G = B R^{-1} B'``.  The feedback ``u(t, x) = K(t) x + k(t)`` with
``K = -R^{-1} B' P`` and ``k = -R^{-1} B' p`` contains no viscosity: the
noise level only enters the diagnostic ``Z = sqrt(2 eps) P``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BlowUp
from .matkit import symmetrize
from .ode import TimeGrid, as_grid, hermite_midpoints, interleave, rk4
from .problem import drift, running_cost

BLOWUP_LIMIT = 1e12


class CoefTable(NamedTuple):
    """Running coefficients tabulated on the half-grid, shape ``(2N+1, d, d)``."""

    A: np.ndarray
    Abar: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    Qbar: np.ndarray
    R: np.ndarray
    S: np.ndarray
    RinvBt: np.ndarray
    G: np.ndarray


def _tabulate_tv(m, times):
    if m.is_constant:
        return np.broadcast_to(m.values[0], (times.size,) + m.shape)
    r, c = m.shape
    out = np.empty((times.size, r, c))
    for a in range(r):
        for b in range(c):
            out[:, a, b] = np.interp(times, m.times, m.values[:, a, b])
    return out


def tabulate(spec, grid):
    """Evaluate every running coefficient at all nodes and midpoints."""
    grid = as_grid(grid, spec.horizon)
    times = grid.half_nodes
    tab = {n: _tabulate_tv(getattr(spec, n), times) for n in ("A", "Abar", "B", "Q", "Qbar", "R", "S")}
    if spec.R.is_constant and spec.B.is_constant:
        rinv_bt = np.linalg.solve(spec.R.values[0], spec.B.values[0].T)
        g = spec.B.values[0] @ rinv_bt
        tab["RinvBt"] = np.broadcast_to(rinv_bt, tab["R"].shape)
        tab["G"] = np.broadcast_to(g, tab["R"].shape)
    else:
        rinv_bt = np.linalg.solve(tab["R"], np.swapaxes(tab["B"], 1, 2))
        tab["RinvBt"] = rinv_bt
        tab["G"] = tab["B"] @ rinv_bt
    return CoefTable(**tab)


def _riccati_post(name):
    def post(i, x):
        x = symmetrize(x)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP_LIMIT:
            raise BlowUp(f"{name} exceeded {BLOWUP_LIMIT:g} at node {i}")
        return x

    return post


def _sigma_rhs(tab):
    d = tab.A.shape[1]
    eye = np.eye(d)

    def f(j, x):
        ab = tab.A[j] + tab.Abar[j]
        i_s = eye - tab.S[j]
        m = tab.Q[j] + i_s.T @ tab.Qbar[j] @ i_s
        return -(x @ ab + ab.T @ x - x @ tab.G[j] @ x + m)

    return f


def _p_rhs(tab):
    def f(j, x):
        a = tab.A[j]
        return -(a.T @ x + x @ a - x @ tab.G[j] @ x + tab.Q[j] + tab.Qbar[j])

    return f


def _derivs(f, values):
    return np.array([f(2 * i, v) for i, v in enumerate(values)])


def _mids(f, values, grid):
    return hermite_midpoints(values, _derivs(f, values), grid.h)


def solve_sigma(spec, grid, _tab=None):
    """Backward solve for the barycenter Riccati matrix at every node."""
    grid = as_grid(grid, spec.horizon)
    tab = _tab if _tab is not None else tabulate(spec, grid)
    i_s = np.eye(spec.dimension) - spec.ST
    terminal = spec.QT + i_s.T @ spec.QbarT @ i_s
    return rk4(_sigma_rhs(tab), terminal, grid, backward=True, post=_riccati_post("Sigma"))


def _mean_rhs(tab, sigma_half):
    def f(j, x):
        return (tab.A[j] + tab.Abar[j] - tab.G[j] @ sigma_half[j]) @ x

    return f


def solve_mean_flow(spec, Sigma, grid, x0=None, _tab=None):
    """Forward barycenter flow and its co-state ``ybar = Sigma xbar``.

    ``x0`` defaults to the barycenter of ``spec.initial``.
    """
    grid = as_grid(grid, spec.horizon)
    tab = _tab if _tab is not None else tabulate(spec, grid)
    if x0 is None:
        x0 = spec.initial.barycenter()
    Sigma = np.asarray(Sigma, dtype=float)
    sigma_half = interleave(Sigma, _mids(_sigma_rhs(tab), Sigma, grid))
    xbar = rk4(_mean_rhs(tab, sigma_half), np.asarray(x0, dtype=float), grid)
    ybar = np.einsum("nij,nj->ni", Sigma, xbar)
    return xbar, ybar


def solve_P(spec, grid, _tab=None):
    """Backward solve for the fluctuation Riccati matrix at every node."""
    grid = as_grid(grid, spec.horizon)
    tab = _tab if _tab is not None else tabulate(spec, grid)
    return rk4(_p_rhs(tab), spec.QT + spec.QbarT, grid, backward=True, post=_riccati_post("P"))


def _forcing(tab, sigma_half, p_half):
    s, qb = tab.S, tab.Qbar
    st = np.swapaxes(s, 1, 2)
    return (
        np.swapaxes(tab.Abar, 1, 2) @ sigma_half
        + p_half @ tab.Abar
        + st @ qb @ s
        - st @ qb
        - qb @ s
    )


def _offset_rhs(tab, P_half, forcing, xbar_half):
    def f(j, p):
        return -((tab.A[j].T - P_half[j] @ tab.G[j]) @ p + forcing[j] @ xbar_half[j])

    return f


def _offset_terminal(spec, xbar_T):
    st, qbt = spec.ST, spec.QbarT
    return (st.T @ qbt @ st - st.T @ qbt - qbt @ st) @ xbar_T


def _half_inputs(spec, P, Sigma, xbar, grid, tab):
    sigma_half = interleave(Sigma, _mids(_sigma_rhs(tab), Sigma, grid))
    P_half = interleave(P, _mids(_p_rhs(tab), P, grid))
    mean_f = _mean_rhs(tab, sigma_half)
    xbar_half = interleave(xbar, _mids(mean_f, xbar, grid))
    return sigma_half, P_half, xbar_half


def solve_offset(spec, P, Sigma, xbar, grid, _tab=None):
    """Backward solve for the affine offset ``p`` of the co-state."""
    grid = as_grid(grid, spec.horizon)
    tab = _tab if _tab is not None else tabulate(spec, grid)
    P, Sigma, xbar = (np.asarray(a, dtype=float) for a in (P, Sigma, xbar))
    sigma_half, P_half, xbar_half = _half_inputs(spec, P, Sigma, xbar, grid, tab)
    f = _offset_rhs(tab, P_half, _forcing(tab, sigma_half, P_half), xbar_half)
    return rk4(f, _offset_terminal(spec, xbar[-1]), grid, backward=True)


class AffineFeedback:
    """Feedback ``u(t, x) = K(t) x + k(t)`` sampled at ``times``.

    Gains are linear between samples.  Synthesis samples at every node and
    midpoint of its grid, so classical Runge-Kutta stages on that grid read
    gains without interpolation error.
    """

    def __init__(self, times, K, k, horizon=None):
        times = np.array(times, dtype=float)
        K = np.array(K, dtype=float)
        k = np.array(k, dtype=float)
        if K.ndim != 3 or k.ndim != 2 or K.shape[0] != times.size or k.shape[0] != times.size:
            raise ValueError("K must be (n, d, d) and k (n, d) with one sample per time")
        if not (np.all(np.isfinite(K)) and np.all(np.isfinite(k))):
            raise ValueError("feedback gains must be finite")
        for a in (times, K, k):
            a.setflags(write=False)
        self.times = times
        self.K = K
        self.k = k
        self.horizon = float(times[-1] if horizon is None else horizon)

    @classmethod
    def zero(cls, grid, dimension):
        t = grid.half_nodes
        return cls(t, np.zeros((t.size, dimension, dimension)), np.zeros((t.size, dimension)))

    @property
    def dimension(self):
        return self.k.shape[1]

    def gains(self, t):
        t = float(t)
        times = self.times
        if t <= times[0]:
            return self.K[0], self.k[0]
        if t >= times[-1]:
            return self.K[-1], self.k[-1]
        j = int(np.searchsorted(times, t, side="right")) - 1
        w = (t - times[j]) / (times[j + 1] - times[j])
        if w == 0.0:
            return self.K[j], self.k[j]
        return (1 - w) * self.K[j] + w * self.K[j + 1], (1 - w) * self.k[j] + w * self.k[j + 1]

    def __call__(self, t, x):
        K, k = self.gains(t)
        return np.asarray(x, dtype=float) @ K.T + k

    def shifted(self, dK, dk):
        """Same sampling with gains ``K + dK`` and ``k + dk`` (constant shifts or per-sample)."""
        return AffineFeedback(self.times, self.K + dK, self.k + dk, self.horizon)


@dataclass(frozen=True, eq=False)
class SynthesisSolution:
    grid: TimeGrid
    Sigma: np.ndarray
    P: np.ndarray
    p: np.ndarray
    xbar: np.ndarray
    ybar: np.ndarray
    K: np.ndarray
    k: np.ndarray
    xbar_half: np.ndarray
    feedback: "AffineFeedback"

    @property
    def times(self):
        return self.grid.nodes

    def xbar_at(self, t):
        """Barycenter at ``t``, linear between nodes and midpoints."""
        times = self.grid.half_nodes
        return np.array([np.interp(t, times, self.xbar_half[:, a]) for a in range(self.xbar.shape[1])])


def synthesize(spec, grid):
    """Run the whole cascade and assemble the optimal feedback.

    Parameters
    ----------
    spec : ProblemSpec
        A problem that passes :func:`lqmfc.problem.validate` and carries an
        initial measure.
    grid : TimeGrid or int
        Integration grid (an int is the number of steps on ``[0, T]``).

    Returns
    -------
    (SynthesisSolution, AffineFeedback)
    """
    grid = as_grid(grid, spec.horizon)
    tab = tabulate(spec, grid)
    Sigma = solve_sigma(spec, grid, _tab=tab)
    xbar, ybar = solve_mean_flow(spec, Sigma, grid, _tab=tab)
    P = solve_P(spec, grid, _tab=tab)
    p = solve_offset(spec, P, Sigma, xbar, grid, _tab=tab)

    sigma_half, P_half, xbar_half = _half_inputs(spec, P, Sigma, xbar, grid, tab)
    f_off = _offset_rhs(tab, P_half, _forcing(tab, sigma_half, P_half), xbar_half)
    p_half = interleave(p, _mids(f_off, p, grid))

    K_half = -tab.RinvBt @ P_half
    k_half = -np.einsum("nij,nj->ni", tab.RinvBt, p_half)
    for a in (Sigma, P, p, xbar, ybar, xbar_half, K_half, k_half):
        a.setflags(write=False)
    fb = AffineFeedback(grid.half_nodes, K_half, k_half, spec.horizon)
    sol = SynthesisSolution(
        grid=grid,
        Sigma=Sigma,
        P=P,
        p=p,
        xbar=xbar,
        ybar=ybar,
        K=K_half[0::2],
        k=k_half[0::2],
        xbar_half=xbar_half,
        feedback=fb,
    )
    return sol, fb


def optimal_drift(spec, sol, t, x):
    """Closed-loop velocity ``(A - G P) x + Abar xbar(t) - G p`` under the optimal feedback.

    Evaluated as ``A x + B u(t, x) + Abar xbar(t)``, which is the same
    expression with ``u = K x + k``.
    """
    return drift(spec, t, x, sol.xbar_at(t), sol.feedback(t, x))


def hamiltonian(spec, t, x, mubar, y, alpha):
    return float(np.dot(drift(spec, t, x, mubar, alpha), y) + running_cost(spec, t, x, mubar, alpha))


def hamiltonian_minimizer(spec, t, y):
    c = spec.coefficients(t)
    return -np.linalg.solve(c.R, c.B.T @ np.asarray(y, dtype=float))


def z_diagnostic(P, eps):
    """Martingale integrand ``sqrt(2 eps) P`` of the adjoint equation."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return np.sqrt(2.0 * eps) * np.asarray(P, dtype=float)
