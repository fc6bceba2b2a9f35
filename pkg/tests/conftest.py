import numpy as np
import pytest

from lqmfc import Gaussian, ProblemSpec


def psd(gen, d, scale=1.0):
    g = gen.standard_normal((d, d))
    return scale * g @ g.T / d


def random_spec(gen, d, horizon=1.0, initial=None):
    """Random problem satisfying every assumption (psd weights, R >= I)."""
    if initial is None:
        initial = Gaussian(gen.standard_normal(d), psd(gen, d, 0.5))
    return ProblemSpec.build(
        d,
        horizon,
        initial=initial,
        A=0.5 * gen.standard_normal((d, d)),
        Abar=0.5 * gen.standard_normal((d, d)),
        B=gen.standard_normal((d, d)),
        Q=psd(gen, d),
        Qbar=psd(gen, d),
        R=psd(gen, d) + np.eye(d),
        S=0.5 * gen.standard_normal((d, d)),
        QT=psd(gen, d),
        QbarT=psd(gen, d),
        ST=0.5 * gen.standard_normal((d, d)),
    )


def scalar(initial=None, **kw):
    """The scalar family used throughout: A = Abar = 0, B = R = 1, QT = 1, T = 1."""
    base = dict(B=[[1.0]], R=[[1.0]], QT=[[1.0]])
    base.update(kw)
    if initial is None:
        initial = Gaussian([1.0], [[0.25]])
    return ProblemSpec.build(1, 1.0, initial=initial, **base)


@pytest.fixture
def scalar_spec():
    return scalar()


@pytest.fixture
def gen():
    return np.random.default_rng(20261014)
