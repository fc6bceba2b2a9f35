"""Vanishing-viscosity experiments.

One feedback is synthesized (it carries no viscosity input), the
deterministic reference is propagated once, and every viscosity in the
sweep is propagated with that same feedback object.  Distances, barycenter
errors and costs against the reference form the report rows.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import rng
from .dynamics import (
    ViscousOptions,
    propagate_deterministic,
    propagate_gaussian,
    propagate_viscous,
    sample_initial,
)
from .errors import DegenerateFit, LengthMismatch, LqmfcError, ReportIncomplete
from .measures import Empirical, Gaussian, moment_matched
from .metrics import sup_w2, total_cost
from .ode import TimeGrid
from .synthesis import synthesize

DEGENERATE_ERR = 1e-15


@dataclass(frozen=True)
class SweepConfig:
    """Sweep settings.

    ``representation`` is ``"gaussian"`` or ``"empirical"``; ``None`` picks
    Gaussian exactly when the initial measure is Gaussian.
    """

    eps_list: tuple
    steps: int = 1000
    representation: Optional[str] = None
    samples: int = 1000
    seed: int = 0
    perturbations: int = 20
    workers: int = 1

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        if not eps:
            raise ValueError("eps_list must be nonempty")
        if any(not e > 0 for e in eps):
            raise ValueError("every eps must be positive")
        if any(b > a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_list must be nonincreasing")
        object.__setattr__(self, "eps_list", eps)
        if self.representation not in (None, "gaussian", "empirical"):
            raise ValueError(f"unknown representation {self.representation!r}")

    def resolved_representation(self, spec):
        if self.representation is not None:
            return self.representation
        return "gaussian" if isinstance(spec.initial, Gaussian) else "empirical"


class SweepRow(NamedTuple):
    eps: float
    sup_w2: float
    sup_barycenter_err: float
    cost_viscous: float
    cost_det: float
    cost_gap: float


@dataclass(frozen=True, eq=False)
class SweepReport:
    rows: list
    w2_rate: Optional[float]
    cost_rate: Optional[float]
    metadata: dict
    control: object = field(repr=False, default=None)
    moments: dict = field(repr=False, default_factory=dict)


def fit_rate(eps, err):
    """Least-squares slope of ``log err`` against ``log eps``."""
    eps = np.asarray(eps, dtype=float)
    err = np.asarray(err, dtype=float)
    if eps.shape != err.shape or eps.ndim != 1:
        raise LengthMismatch("eps and err must be vectors of equal length")
    if eps.size < 2:
        raise LengthMismatch("at least two points are needed for a rate")
    if np.any(eps <= 0):
        raise ValueError("eps values must be positive")
    if np.any(err <= DEGENERATE_ERR):
        raise DegenerateFit("an error value is zero to working precision")
    if np.ptp(np.log(eps)) == 0.0:
        raise DegenerateFit("all eps values coincide, the slope is undefined")
    slope, _ = np.polyfit(np.log(eps), np.log(err), 1)
    return float(slope)


def _maybe_rate(eps, err):
    try:
        return fit_rate(eps, err)
    except (DegenerateFit, LengthMismatch):
        return None


def _initial_cloud(spec, cfg):
    if isinstance(spec.initial, Empirical):
        return spec.initial
    return sample_initial(spec.initial, cfg.samples, cfg.seed)


class _Runner:
    """Representation-specific propagation and costing for one spec/feedback."""

    def __init__(self, spec, fb, cfg):
        self.spec = spec
        self.fb = fb
        self.cfg = cfg
        self.grid = TimeGrid(cfg.steps, spec.horizon)
        self.rep = cfg.resolved_representation(spec)
        if self.rep == "gaussian":
            self.init = moment_matched(spec.initial)
        else:
            self.init = _initial_cloud(spec, cfg)

    def reference(self, control=None):
        control = self.fb if control is None else control
        if self.rep == "gaussian":
            return propagate_gaussian(self.spec, control, self.init, 0.0, self.grid)
        return propagate_deterministic(self.spec, control, self.init, self.grid)

    def viscous(self, eps, index, control=None):
        control = self.fb if control is None else control
        if self.rep == "gaussian":
            return propagate_gaussian(self.spec, control, self.init, eps, self.grid)
        opts = ViscousOptions(eps, self.init.size, rng.derive_seed(self.cfg.seed, index))
        return propagate_viscous(self.spec, control, self.init, opts, self.grid)


def epsilon_sweep(spec, cfg):
    """Propagate at every viscosity of ``cfg`` and compare with ``eps = 0``.

    Returns a :class:`SweepReport` whose rows follow ``cfg.eps_list``.  The
    report's ``control`` is the single feedback object used for every run.
    """
    grid = TimeGrid(cfg.steps, spec.horizon)
    _, fb = synthesize(spec, grid)
    runner = _Runner(spec, fb, cfg)
    ref = runner.reference()
    cost_det = total_cost(spec, ref, fb).total
    ref_bary = ref.barycenters()

    def one(item):
        index, eps = item
        traj = runner.viscous(eps, index)
        cost = total_cost(spec, traj, fb).total
        bary = float(np.max(np.linalg.norm(traj.barycenters() - ref_bary, axis=1)))
        row = SweepRow(eps, sup_w2(traj, ref), bary, cost, cost_det, cost - cost_det)
        return row, traj.second_moments()

    items = list(enumerate(cfg.eps_list))
    try:
        if cfg.workers > 1:
            with ThreadPoolExecutor(cfg.workers) as pool:
                results = list(pool.map(one, items))
        else:
            results = [one(it) for it in items]
    except LqmfcError as exc:
        raise ReportIncomplete(f"sweep run failed: {exc}") from exc

    rows = [r for r, _ in results]
    moments = {0.0: ref.second_moments()}
    moments.update({r.eps: m for r, m in results})
    eps = [r.eps for r in rows]
    metadata = {
        "spec_digest": spec.digest() if spec.initial is not None else None,
        "representation": runner.rep,
        "grid_steps": cfg.steps,
        "horizon": spec.horizon,
        "seed": cfg.seed,
        "samples": runner.init.size if runner.rep == "empirical" else None,
        "run_seeds": (
            [rng.derive_seed(cfg.seed, i) for i in range(len(eps))] if runner.rep == "empirical" else None
        ),
        "eps_list": eps,
        "control_depends_on_eps": False,
    }
    return SweepReport(
        rows=rows,
        w2_rate=_maybe_rate(eps, [r.sup_w2 for r in rows]),
        cost_rate=_maybe_rate(eps, [abs(r.cost_gap) for r in rows]),
        metadata=metadata,
        control=fb,
        moments=moments,
    )


def random_perturbation(fb, magnitude, gen):
    """Constant-in-time shift of ``(K, k)`` with size relative to the gains.

    A random unit direction ``(zK, zk)`` in the joint gain space is scaled
    by ``magnitude``; the ``K`` part is then multiplied by
    ``max(1, max_t |K(t)|_F)`` and the ``k`` part by ``max(1, max_t |k(t)|)``.
    """
    d = fb.dimension
    k_scale = max(1.0, float(np.max(np.linalg.norm(fb.K, axis=(1, 2)))))
    o_scale = max(1.0, float(np.max(np.linalg.norm(fb.k, axis=1))))
    z = gen.standard_normal(d * d + d)
    z *= magnitude / np.linalg.norm(z)
    return k_scale * z[: d * d].reshape(d, d), o_scale * z[d * d :]


class OptimalityRecord(NamedTuple):
    perturbation: int
    excess_det: float
    excess_viscous: float


def optimality_check(spec, cfg, magnitude=0.1, eps=None, perturbations=None):
    """Cost excess of randomly perturbed feedbacks over the optimum.

    Each perturbation is evaluated at ``eps = 0`` and at one positive
    viscosity (``eps``, default the smallest of ``cfg.eps_list``).
    Perturbation 0 is the unperturbed feedback.
    """
    grid = TimeGrid(cfg.steps, spec.horizon)
    _, fb = synthesize(spec, grid)
    runner = _Runner(spec, fb, cfg)
    eps = min(cfg.eps_list) if eps is None else float(eps)
    count = cfg.perturbations if perturbations is None else perturbations
    gen = rng.generator(cfg.seed, stream=1)

    def costs(control):
        det = total_cost(spec, runner.reference(control), control).total
        visc = total_cost(spec, runner.viscous(eps, 0, control), control).total
        return det, visc

    base_det, base_visc = costs(fb)
    out = []
    for i in range(count + 1):
        control = fb if i == 0 else fb.shifted(*random_perturbation(fb, magnitude, gen))
        det, visc = costs(control)
        out.append(OptimalityRecord(i, det - base_det, visc - base_visc))
    return out


def is_affine(xs, ys, tol):
    """Three-point collinearity: residual of the middle point off the chord."""
    (x0, x1, x2), (y0, y1, y2) = xs, ys
    interp = y0 + (y2 - y0) * (x1 - x0) / (x2 - x0)
    return math.fabs(y1 - interp) <= tol
