"""Probability measures on R^d used as initial data and as trajectory snapshots."""

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import matkit
from .errors import NotFinite, NotPSD, ShapeMismatch


def _vector(v, name):
    a = np.atleast_1d(np.array(v, dtype=float))
    if a.ndim != 1:
        raise ShapeMismatch(f"{name} must be a vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotFinite(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class Gaussian:
    """Normal law ``N(mean, cov)``; ``cov`` may be singular."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _vector(self.mean, "mean")
        cov = matkit.as_matrix(self.cov, "cov")
        if cov.shape != (mean.size, mean.size):
            raise ShapeMismatch(f"cov shape {cov.shape} does not match mean size {mean.size}")
        if not matkit.is_symmetric(cov):
            raise NotPSD("Gaussian covariance is not symmetric")
        if not matkit.is_psd(cov):
            raise NotPSD("Gaussian covariance is not positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", matkit.symmetrize(cov))

    @property
    def dim(self):
        return self.mean.size

    def barycenter(self):
        return self.mean.copy()

    def covariance(self):
        return self.cov.copy()


@dataclass(frozen=True, eq=False)
class Empirical:
    """Uniform-weight atom cloud; ``points`` has shape ``(n, d)``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ShapeMismatch(f"points must be an (n, d) array with n >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise NotFinite("empirical measure has non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def size(self):
        return self.points.shape[0]

    def barycenter(self):
        return self.points.mean(axis=0)

    def covariance(self):
        c = self.points - self.points.mean(axis=0)
        return c.T @ c / self.size


@dataclass(frozen=True, eq=False)
class UniformBox:
    """Uniform law on the box ``prod [lo_k, hi_k]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _vector(self.lo, "lo")
        hi = _vector(self.hi, "hi")
        if lo.shape != hi.shape:
            raise ShapeMismatch("lo and hi must have the same length")
        if not np.all(lo < hi):
            raise ValueError("UniformBox requires lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    def barycenter(self):
        return 0.5 * (self.lo + self.hi)

    def covariance(self):
        return np.diag((self.hi - self.lo) ** 2 / 12.0)


InitialMeasure = Union[Gaussian, Empirical, UniformBox]
MeasureSnapshot = Union[Gaussian, Empirical]


def moment_matched(measure):
    """Gaussian with the same mean and covariance as ``measure``."""
    if isinstance(measure, Gaussian):
        return measure
    return Gaussian(measure.barycenter(), measure.covariance())
