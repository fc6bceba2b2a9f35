"""Linear-quadratic mean-field control problem instances.

A problem couples the state ``x`` to the barycenter ``mubar`` of the state
distribution through the drift ``A x + B u + Abar mubar`` and through the
cost weight ``Qbar`` on the deviation ``x - S mubar``.  Time-dependent
coefficients are piecewise linear between explicit knots.
"""

import hashlib
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import matkit
from .errors import OutOfRange, ParseError, ShapeMismatch
from .measures import Empirical, Gaussian, UniformBox

TV_NAMES = ("A", "Abar", "B", "Q", "Qbar", "R", "S")
TERMINAL_NAMES = ("QT", "QbarT", "ST")
R_MIN_EIG = 1e-9

_TIME_SLOP = 1e-12


class TimeVaryingMat:
    """Matrix-valued function of time, linear between knots.

    A single knot means the matrix is constant in time.
    """

    def __init__(self, knots):
        knots = list(knots)
        if not knots:
            raise ShapeMismatch("a time-varying matrix needs at least one knot")
        times = np.array([float(t) for t, _ in knots])
        values = np.array([matkit.as_matrix(v) for _, v in knots])
        if values.ndim != 3:
            raise ShapeMismatch("all knot values must share one shape")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ShapeMismatch("knot times must be strictly increasing")
        times.setflags(write=False)
        values.setflags(write=False)
        self.times = times
        self.values = values

    @classmethod
    def constant(cls, value):
        return cls([(0.0, value)])

    @property
    def shape(self):
        return self.values.shape[1:]

    @property
    def is_constant(self):
        return self.times.size == 1

    def __call__(self, t):
        return eval_tv(self, t)

    def __repr__(self):
        if self.is_constant:
            return f"TimeVaryingMat.constant({self.values[0].tolist()!r})"
        return f"TimeVaryingMat(<{self.times.size} knots on [{self.times[0]}, {self.times[-1]}]>)"


def eval_tv(m, t, horizon=None):
    """Evaluate ``m`` at time ``t`` by linear interpolation between knots.

    ``horizon`` bounds the admissible range ``[0, horizon]``; when omitted
    the last knot time is used (unbounded above for constant matrices).
    """
    t = float(t)
    hi = horizon if horizon is not None else (np.inf if m.is_constant else m.times[-1])
    slop = _TIME_SLOP * (1.0 + (0.0 if np.isinf(hi) else hi))
    if not (-slop <= t <= hi + slop):
        raise OutOfRange(f"t={t} outside [0, {hi}]")
    if m.is_constant:
        return m.values[0].copy()
    times = m.times
    if t <= times[0]:
        return m.values[0].copy()
    if t >= times[-1]:
        return m.values[-1].copy()
    j = int(np.searchsorted(times, t, side="right")) - 1
    w = (t - times[j]) / (times[j + 1] - times[j])
    if w == 0.0:
        return m.values[j].copy()
    return (1.0 - w) * m.values[j] + w * m.values[j + 1]


class Coefficients(NamedTuple):
    """All running coefficients frozen at one time."""

    A: np.ndarray
    Abar: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    Qbar: np.ndarray
    R: np.ndarray
    S: np.ndarray

    @property
    def gain_input(self):
        """``R^{-1} B'``, the map from co-state to minimizing control."""
        return np.linalg.solve(self.R, self.B.T)


def _tv(value):
    if isinstance(value, TimeVaryingMat):
        return value
    return TimeVaryingMat.constant(value)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Complete LQ mean-field control instance.

    Construct directly with ``TimeVaryingMat`` coefficients or use
    :meth:`build`, which accepts plain arrays for constant matrices and
    defaults every omitted matrix to zero (``R`` defaults to the identity).
    """

    dimension: int
    horizon: float
    A: TimeVaryingMat
    Abar: TimeVaryingMat
    B: TimeVaryingMat
    Q: TimeVaryingMat
    Qbar: TimeVaryingMat
    R: TimeVaryingMat
    S: TimeVaryingMat
    QT: np.ndarray
    QbarT: np.ndarray
    ST: np.ndarray
    initial: object = field(default=None)

    def __post_init__(self):
        d = int(self.dimension)
        T = float(self.horizon)
        if d < 1:
            raise ShapeMismatch("dimension must be positive")
        if not T > 0:
            raise ShapeMismatch("horizon must be positive")
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "horizon", T)
        for name in TV_NAMES:
            m = _tv(getattr(self, name))
            object.__setattr__(self, name, m)
            if m.shape != (d, d):
                raise ShapeMismatch(f"{name} has shape {m.shape}, expected {(d, d)}")
            if not m.is_constant and (m.times[0] != 0.0 or abs(m.times[-1] - T) > _TIME_SLOP * (1 + T)):
                raise ShapeMismatch(f"{name} knots must span exactly [0, {T}]")
        for name in TERMINAL_NAMES:
            m = matkit.as_matrix(getattr(self, name), name)
            if m.shape != (d, d):
                raise ShapeMismatch(f"{name} has shape {m.shape}, expected {(d, d)}")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        if self.initial is not None and self.initial.dim != d:
            raise ShapeMismatch(f"initial measure has dimension {self.initial.dim}, expected {d}")

    @classmethod
    def build(cls, dimension, horizon=1.0, initial=None, **matrices):
        d = int(dimension)
        unknown = set(matrices) - set(TV_NAMES) - set(TERMINAL_NAMES)
        if unknown:
            raise TypeError(f"unknown matrices: {sorted(unknown)}")
        kw = {}
        for name in TV_NAMES + TERMINAL_NAMES:
            default = np.eye(d) if name == "R" else np.zeros((d, d))
            value = matrices.get(name, default)
            if not isinstance(value, TimeVaryingMat):
                value = np.array(value, dtype=float).reshape(d, d)
            kw[name] = value
        return cls(dimension=d, horizon=horizon, initial=initial, **kw)

    def replace(self, **changes):
        kw = {name: getattr(self, name) for name in ("dimension", "horizon", "initial") + TV_NAMES + TERMINAL_NAMES}
        kw.update(changes)
        for name in TV_NAMES:
            if not isinstance(kw[name], TimeVaryingMat):
                kw[name] = np.array(kw[name], dtype=float).reshape(self.dimension, self.dimension)
        return ProblemSpec(**kw)

    def coefficients(self, t):
        T = self.horizon
        return Coefficients(*(eval_tv(getattr(self, n), t, T) for n in TV_NAMES))

    def knot_times(self):
        """Union of all knot times of the running coefficients, within [0, T]."""
        ts = {0.0}
        for name in TV_NAMES:
            m = getattr(self, name)
            if not m.is_constant:
                ts.update(float(t) for t in m.times)
        return sorted(ts)

    def digest(self):
        payload = json.dumps(problem_to_dict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


class Violation(NamedTuple):
    condition: str
    time: object  # float knot time or "terminal"
    value: float

    def __str__(self):
        where = self.time if self.time == "terminal" else f"t={self.time:g}"
        return f"{self.condition} ({where}): {self.value:.6g}"


class ValidationReport(NamedTuple):
    ok: bool
    violations: list

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def _check_weight(name, m, when, out, positive=False):
    asym = matkit.asymmetry(m)
    if not matkit.is_symmetric(m):
        out.append(Violation(f"{name} not symmetric", when, asym))
        return
    lo = matkit.min_eig(m)
    if positive:
        if lo < R_MIN_EIG:
            out.append(Violation(f"{name} not positive definite", when, lo))
    elif lo < -matkit.PSD_TOL * (1.0 + matkit.fro(m)):
        out.append(Violation(f"{name} not positive semidefinite", when, lo))


def _check_combined(label, q, qbar, s, when, out):
    i_s = np.eye(q.shape[0]) - s
    m = matkit.symmetrize(q + i_s.T @ qbar @ i_s)
    lo = matkit.min_eig(m)
    if lo < -matkit.PSD_TOL * (1.0 + matkit.fro(m)):
        out.append(Violation(label, when, lo))


def validate(spec):
    """Check the symmetry and definiteness assumptions at every knot.

    Conditions are checked at the union of knot times, which suffices for
    piecewise-linear data except for the barycenter conditions, whose
    matrices are quadratic in ``S`` between knots.
    """
    out = []
    for t in spec.knot_times():
        c = spec.coefficients(t)
        _check_weight("Q", c.Q, t, out)
        _check_weight("Qbar", c.Qbar, t, out)
        _check_weight("R", c.R, t, out, positive=True)
        _check_combined("cond_qs", c.Q, c.Qbar, c.S, t, out)
    _check_weight("QT", spec.QT, "terminal", out)
    _check_weight("QbarT", spec.QbarT, "terminal", out)
    _check_combined("cond_qsT", spec.QT, spec.QbarT, spec.ST, "terminal", out)
    return ValidationReport(not out, out)


def drift(spec, t, x, mubar, u):
    """``A(t) x + B(t) u + Abar(t) mubar``; ``x`` and ``u`` may be batched row-wise."""
    c = spec.coefficients(t)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return x @ c.A.T + u @ c.B.T + c.Abar @ np.asarray(mubar, dtype=float)


def _quad(v, m):
    return np.einsum("...i,ij,...j->...", v, m, v)


def running_cost(spec, t, x, mubar, u):
    """Half of ``x'Qx + u'Ru + (x - S mubar)' Qbar (x - S mubar)``."""
    c = spec.coefficients(t)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    dev = x - c.S @ np.asarray(mubar, dtype=float)
    return 0.5 * (_quad(x, c.Q) + _quad(u, c.R) + _quad(dev, c.Qbar))


def terminal_cost(spec, x, mubar):
    x = np.asarray(x, dtype=float)
    dev = x - spec.ST @ np.asarray(mubar, dtype=float)
    return 0.5 * (_quad(x, spec.QT) + _quad(dev, spec.QbarT))


# -- problem files ---------------------------------------------------------

_TOP_KEYS = {"dimension", "horizon", "matrices", "terminal", "initial"}


def _strict_keys(obj, allowed, where, required=None):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    extra = set(obj) - set(allowed)
    if extra:
        raise ParseError(f"{where}: unknown fields {sorted(extra)}")
    missing = set(allowed if required is None else required) - set(obj)
    if missing:
        raise ParseError(f"{where}: missing fields {sorted(missing)}")


def _array(value, where, ndim):
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: not a numeric array") from exc
    if a.ndim != ndim:
        raise ParseError(f"{where}: expected a {ndim}-D array")
    return a


def _parse_tv(obj, where):
    if not isinstance(obj, dict) or len(obj) != 1 or next(iter(obj)) not in ("constant", "knots"):
        raise ParseError(f"{where}: expected {{'constant': ...}} or {{'knots': [...]}}")
    if "constant" in obj:
        return TimeVaryingMat.constant(_array(obj["constant"], where, 2))
    knots = obj["knots"]
    if not isinstance(knots, list) or not knots:
        raise ParseError(f"{where}: knots must be a nonempty list")
    parsed = []
    for i, k in enumerate(knots):
        _strict_keys(k, {"t", "value"}, f"{where}.knots[{i}]")
        if not isinstance(k["t"], (int, float)) or isinstance(k["t"], bool):
            raise ParseError(f"{where}.knots[{i}].t: must be a number")
        parsed.append((float(k["t"]), _array(k["value"], f"{where}.knots[{i}].value", 2)))
    try:
        return TimeVaryingMat(parsed)
    except ShapeMismatch as exc:
        raise ParseError(f"{where}: {exc}") from exc


def _parse_initial(obj):
    if not isinstance(obj, dict) or "type" not in obj:
        raise ParseError("initial: expected an object with a 'type' field")
    kind = obj["type"]
    try:
        if kind == "gaussian":
            _strict_keys(obj, {"type", "mean", "cov"}, "initial")
            return Gaussian(_array(obj["mean"], "initial.mean", 1), _array(obj["cov"], "initial.cov", 2))
        if kind == "empirical":
            _strict_keys(obj, {"type", "points"}, "initial")
            return Empirical(_array(obj["points"], "initial.points", 2))
        if kind == "uniform_box":
            _strict_keys(obj, {"type", "lo", "hi"}, "initial")
            return UniformBox(_array(obj["lo"], "initial.lo", 1), _array(obj["hi"], "initial.hi", 1))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(f"initial: {exc}") from exc
    raise ParseError(f"initial.type: unknown measure type {kind!r}")


def problem_from_dict(doc):
    """Build a :class:`ProblemSpec` from a parsed problem document (strict)."""
    _strict_keys(doc, _TOP_KEYS, "problem")
    dim, T = doc["dimension"], doc["horizon"]
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise ParseError("dimension: must be an integer")
    if not isinstance(T, (int, float)) or isinstance(T, bool):
        raise ParseError("horizon: must be a number")
    _strict_keys(doc["matrices"], set(TV_NAMES), "matrices")
    _strict_keys(doc["terminal"], set(TERMINAL_NAMES), "terminal")
    kw = {n: _parse_tv(doc["matrices"][n], f"matrices.{n}") for n in TV_NAMES}
    kw.update({n: _array(doc["terminal"][n], f"terminal.{n}", 2) for n in TERMINAL_NAMES})
    initial = _parse_initial(doc["initial"])
    try:
        return ProblemSpec(dimension=dim, horizon=float(T), initial=initial, **kw)
    except (ShapeMismatch, ValueError) as exc:
        raise ParseError(str(exc)) from exc


def loads_problem(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return problem_from_dict(doc)


def load_problem(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_problem(fh.read())


def _tv_to_dict(m):
    if m.is_constant:
        return {"constant": m.values[0].tolist()}
    return {"knots": [{"t": float(t), "value": v.tolist()} for t, v in zip(m.times, m.values)]}


def _initial_to_dict(mu):
    if isinstance(mu, Gaussian):
        return {"type": "gaussian", "mean": mu.mean.tolist(), "cov": mu.cov.tolist()}
    if isinstance(mu, Empirical):
        return {"type": "empirical", "points": mu.points.tolist()}
    if isinstance(mu, UniformBox):
        return {"type": "uniform_box", "lo": mu.lo.tolist(), "hi": mu.hi.tolist()}
    raise TypeError(f"cannot serialize initial measure {mu!r}")


def problem_to_dict(spec):
    if spec.initial is None:
        raise ValueError("a problem file needs an initial measure")
    return {
        "dimension": spec.dimension,
        "horizon": spec.horizon,
        "matrices": {n: _tv_to_dict(getattr(spec, n)) for n in TV_NAMES},
        "terminal": {n: getattr(spec, n).tolist() for n in TERMINAL_NAMES},
        "initial": _initial_to_dict(spec.initial),
    }


def dump_problem(spec, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(spec), fh, indent=2)
        fh.write("\n")
