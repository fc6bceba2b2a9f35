import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_spec, scalar
from lqmfc import (
    AffineFeedback,
    Empirical,
    Gaussian,
    ProblemSpec,
    TimeGrid,
    barycenter,
    propagate_deterministic,
    propagate_gaussian,
    sample_initial,
    second_moment,
    sup_w2,
    synthesize,
    total_cost,
    w2_1d,
    w2_assignment,
    w2_gaussian,
)
from lqmfc.dynamics import EmpiricalTrajectory, GaussianTrajectory
from lqmfc.errors import GridMismatch, LengthMismatch, SizeLimit, VariantMismatch
from lqmfc.lab import random_perturbation


def test_barycenter_examples():
    np.testing.assert_array_equal(barycenter(Empirical([[0.0, 0.0], [2.0, 4.0]])), [1.0, 2.0])
    np.testing.assert_array_equal(barycenter(Gaussian([3.0], [[5.0]])), [3.0])
    np.testing.assert_array_equal(barycenter(Empirical([[1.5, -2.0]])), [1.5, -2.0])


def test_second_moment_examples():
    assert second_moment(Empirical([[0.0, 0.0]])) == 0.0
    assert second_moment(Gaussian([1.0], [[0.25]])) == pytest.approx(1.25)
    assert second_moment(Empirical([[-1.0], [1.0]])) == pytest.approx(1.0)


def test_w2_1d_examples():
    assert w2_1d([0.0, 1.0], [1.0, 2.0]) == pytest.approx(1.0)
    assert w2_1d([3.0, -1.0, 2.0], [2.0, 3.0, -1.0]) == 0.0
    assert w2_1d([0.0, 2.0], [1.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(LengthMismatch):
        w2_1d([0.0], [0.0, 1.0])


def _brute_w2(a, b):
    best = min(np.mean(np.sum((a - b[list(p)]) ** 2, axis=1)) for p in itertools.permutations(range(len(a))))
    return np.sqrt(best)


def test_two_atom_brute_force():
    a = np.array([[0.0], [2.0]])
    b = np.array([[1.0], [1.0]])
    assert _brute_w2(a, b) == pytest.approx(1.0)


def test_w2_gaussian_examples():
    assert w2_gaussian(Gaussian([0.0], [[1.0]]), Gaussian([3.0], [[1.0]])) == pytest.approx(3.0)
    assert w2_gaussian(Gaussian([0.0], [[1.0]]), Gaussian([0.0], [[4.0]])) == pytest.approx(1.0)
    a = Gaussian([0.0, 0.0], np.diag([1.0, 4.0]))
    b = Gaussian([0.0, 0.0], np.diag([4.0, 1.0]))
    assert w2_gaussian(a, b) == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_w2_gaussian_against_commuting_formula(gen):
    # same eigenbasis: W2^2 = |dm|^2 + sum (sqrt(a_i) - sqrt(b_i))^2
    q, _ = np.linalg.qr(gen.standard_normal((3, 3)))
    la, lb = gen.uniform(0.1, 3, 3), gen.uniform(0.1, 3, 3)
    ma, mb = gen.standard_normal((2, 3))
    ga = Gaussian(ma, q @ np.diag(la) @ q.T)
    gb = Gaussian(mb, q @ np.diag(lb) @ q.T)
    expected = np.sqrt(np.sum((ma - mb) ** 2) + np.sum((np.sqrt(la) - np.sqrt(lb)) ** 2))
    assert w2_gaussian(ga, gb) == pytest.approx(expected, abs=1e-10)


def test_assignment_examples(gen):
    a = gen.standard_normal((30, 2))
    assert w2_assignment(a, a[gen.permutation(30)]) == 0.0
    assert w2_assignment([[0.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, 1.0]]) == pytest.approx(1.0)
    with pytest.raises(LengthMismatch):
        w2_assignment(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(SizeLimit):
        w2_assignment(np.zeros((2049, 1)), np.zeros((2049, 1)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_assignment_matches_brute_force(n, d, seed):
    gen = np.random.default_rng(seed)
    a, b = gen.standard_normal((2, n, d))
    assert w2_assignment(a, b) == pytest.approx(_brute_w2(a, b), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2**32 - 1))
def test_assignment_agrees_with_quantile_coupling(n, seed):
    gen = np.random.default_rng(seed)
    a, b = gen.standard_normal(n), 2 * gen.standard_normal(n) + 1
    assert abs(w2_assignment(a, b) - w2_1d(a, b)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 50), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_assignment_below_identity_pairing(n, d, seed):
    gen = np.random.default_rng(seed)
    a, b = gen.standard_normal((2, n, d))
    assert w2_assignment(a, b) <= np.sqrt(np.mean(np.sum((a - b) ** 2, axis=1))) + 1e-12


def _random_gaussian(gen, d):
    g = gen.standard_normal((d, d))
    return Gaussian(gen.standard_normal(d), g @ g.T)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_axioms_all_estimators(n, seed):
    gen = np.random.default_rng(seed)
    x, y, z = gen.standard_normal((3, n))
    X, Y, Z = gen.standard_normal((3, n, 2))
    gx, gy, gz = (_random_gaussian(gen, 2) for _ in range(3))
    for f, (p, q, r) in ((w2_1d, (x, y, z)), (w2_assignment, (X, Y, Z)), (w2_gaussian, (gx, gy, gz))):
        assert abs(f(p, q) - f(q, p)) <= 1e-12
        assert f(p, p) == 0.0
        assert f(p, r) <= f(p, q) + f(q, r) + 1e-9


def test_gaussian_self_distance_small(gen):
    for _ in range(20):
        g = _random_gaussian(gen, 3)
        assert w2_gaussian(g, g) <= 1e-6


def test_empirical_vs_bures():
    g1, g2 = Gaussian([0.0], [[1.0]]), Gaussian([1.0], [[4.0]])
    a = sample_initial(g1, 4096, 1)
    b = sample_initial(g2, 4096, 2)
    assert abs(w2_1d(a, b) - w2_gaussian(g1, g2)) <= 0.05


# -- sup over trajectories ---------------------------------------------------


def test_sup_w2_examples(scalar_spec):
    grid = TimeGrid(10, 1.0)
    pts = np.zeros((11, 3, 1))
    a = EmpiricalTrajectory(grid, pts)
    b = EmpiricalTrajectory(grid, pts + 2.0)
    assert sup_w2(a, a) == 0.0
    assert sup_w2(a, b) == pytest.approx(2.0)
    a2 = EmpiricalTrajectory(grid, np.zeros((11, 3, 2)))
    b2 = EmpiricalTrajectory(grid, np.zeros((11, 3, 2)) + [0.0, 2.0])
    assert sup_w2(a2, b2) == pytest.approx(2.0)


def test_sup_w2_gaussian_scalar(scalar_spec):
    grid = TimeGrid(1000, 1.0)
    _, fb = synthesize(scalar_spec, grid)
    g0 = propagate_gaussian(scalar_spec, fb, scalar_spec.initial, 0.0, grid)
    g1 = propagate_gaussian(scalar_spec, fb, scalar_spec.initial, 0.1, grid)
    t = grid.nodes
    c0 = 0.25 * ((2 - t) / 2) ** 2
    c1 = c0 + 0.1 * t * (2 - t)
    assert sup_w2(g1, g0) == pytest.approx(np.max(np.abs(np.sqrt(c1) - np.sqrt(c0))), abs=1e-9)


def test_sup_w2_errors(scalar_spec):
    grid = TimeGrid(10, 1.0)
    e = EmpiricalTrajectory(grid, np.zeros((11, 2, 1)))
    g = GaussianTrajectory(grid, np.zeros((11, 1)), np.ones((11, 1, 1)))
    with pytest.raises(VariantMismatch):
        sup_w2(e, g)
    with pytest.raises(GridMismatch):
        sup_w2(e, EmpiricalTrajectory(TimeGrid(5, 1.0), np.zeros((6, 2, 1))))


# -- cost functional ---------------------------------------------------------


def test_zero_cost():
    spec = ProblemSpec.build(1, 1.0, B=[[1.0]], initial=Gaussian([1.0], [[1.0]]))
    grid = TimeGrid(10, 1.0)
    fb = AffineFeedback.zero(grid, 1)
    assert total_cost(spec, propagate_gaussian(spec, fb, spec.initial, 0.0, grid), fb).total == 0.0


def test_frozen_terminal_only(scalar_spec):
    grid = TimeGrid(100, 1.0)
    fb = AffineFeedback.zero(grid, 1)
    J = total_cost(scalar_spec, propagate_gaussian(scalar_spec, fb, scalar_spec.initial, 0.0, grid), fb)
    assert J.running == 0.0
    assert J.total == pytest.approx(0.625, abs=1e-14)


def test_optimal_cost_value_identity(scalar_spec):
    grid = TimeGrid(1000, 1.0)
    _, fb = synthesize(scalar_spec, grid)
    J = total_cost(scalar_spec, propagate_gaussian(scalar_spec, fb, scalar_spec.initial, 0.0, grid), fb)
    assert J.total == pytest.approx(0.25 * (1 + 0.25), abs=1e-6)
    assert J.total == pytest.approx(J.running + J.terminal)
    # particle quadrature of the same value: atoms carrying the same two moments
    pts = np.array([[1.0 - 0.5], [1.0 + 0.5]])
    traj = propagate_deterministic(scalar_spec, fb, Empirical(pts), grid)
    assert total_cost(scalar_spec, traj, fb).total == pytest.approx(0.3125, abs=1e-6)


def test_empirical_and_gaussian_costs_agree(gen):
    spec = random_spec(gen, 2)
    grid = TimeGrid(200, 1.0)
    _, fb = synthesize(spec, grid)
    # four symmetric atoms reproduce the mean and covariance exactly
    root = np.linalg.cholesky(spec.initial.cov)
    pts = spec.initial.mean + np.sqrt(2) * np.vstack([root.T, -root.T])
    emp = total_cost(spec, propagate_deterministic(spec, fb, Empirical(pts), grid), fb)
    gau = total_cost(spec, propagate_gaussian(spec, fb, spec.initial, 0.0, grid), fb)
    assert emp.total == pytest.approx(gau.total, rel=1e-10)


def test_cost_affine_in_eps(gen):
    spec = random_spec(gen, 2)
    grid = TimeGrid(300, 1.0)
    _, fb = synthesize(spec, grid)
    J = [total_cost(spec, propagate_gaussian(spec, fb, spec.initial, e, grid), fb).total for e in (0.0, 0.05, 0.1)]
    assert abs(J[1] - 0.5 * (J[0] + J[2])) <= 1e-9


def test_optimal_beats_perturbations(gen):
    spec = random_spec(gen, 2)
    grid = TimeGrid(400, 1.0)
    _, fb = synthesize(spec, grid)
    root = np.linalg.cholesky(spec.initial.cov)
    atoms = Empirical(spec.initial.mean + np.sqrt(2) * np.vstack([root.T, -root.T]))
    det_best = total_cost(spec, propagate_deterministic(spec, fb, atoms, grid), fb).total
    gau_best = total_cost(spec, propagate_gaussian(spec, fb, spec.initial, 0.05, grid), fb).total
    pg = np.random.default_rng(5)
    for _ in range(20):
        other = fb.shifted(*random_perturbation(fb, 0.1, pg))
        det = total_cost(spec, propagate_deterministic(spec, other, atoms, grid), other).total
        gau = total_cost(spec, propagate_gaussian(spec, other, spec.initial, 0.05, grid), other).total
        assert det >= det_best - 1e-10
        assert gau >= gau_best - 1e-10


def test_gaussian_cost_needs_affine(scalar_spec):
    grid = TimeGrid(10, 1.0)
    g = propagate_gaussian(scalar_spec, AffineFeedback.zero(grid, 1), scalar_spec.initial, 0.0, grid)
    with pytest.raises(TypeError):
        total_cost(scalar_spec, g, lambda t, x: 0 * x)
