"""CSV/JSON artifacts: synthesis dumps, trajectory dumps, sweep reports."""

import io
import json
import os
import tempfile

import numpy as np

from .dynamics import EmpiricalTrajectory

SWEEP_HEADER = ("epsilon", "sup_w2", "sup_barycenter_err", "cost_viscous", "cost_det", "cost_gap")


def fmt(x):
    """17 significant digits: round-trips any double exactly."""
    return format(float(x), ".17g")


def _mat_cols(name, d):
    return [f"{name}_{i + 1}_{j + 1}" for i in range(d) for j in range(d)]


def _vec_cols(name, d):
    return [f"{name}_{i + 1}" for i in range(d)]


def _lines(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    return buf.getvalue()


def synthesis_csv(sol):
    d = sol.xbar.shape[1]
    header = (
        ["t"]
        + _mat_cols("Sigma", d)
        + _mat_cols("P", d)
        + _mat_cols("K", d)
        + _vec_cols("p", d)
        + _vec_cols("k", d)
        + _vec_cols("xbar", d)
        + _vec_cols("ybar", d)
    )
    rows = []
    for i, t in enumerate(sol.grid.nodes):
        rows.append(
            [t]
            + list(sol.Sigma[i].ravel())
            + list(sol.P[i].ravel())
            + list(sol.K[i].ravel())
            + list(sol.p[i])
            + list(sol.k[i])
            + list(sol.xbar[i])
            + list(sol.ybar[i])
        )
    return _lines(header, rows)


def trajectory_csv(traj):
    times = traj.grid.nodes
    if isinstance(traj, EmpiricalTrajectory):
        n, d = traj.points.shape[1:]
        header = ["t", "particle"] + [f"x_{a + 1}" for a in range(d)]
        rows = ([t, str(i)] + list(traj.points[j, i]) for j, t in enumerate(times) for i in range(n))
        return _lines(header, rows)
    d = traj.mean.shape[1]
    header = ["t"] + _vec_cols("m", d) + _mat_cols("C", d)
    rows = ([t] + list(traj.mean[j]) + list(traj.cov[j].ravel()) for j, t in enumerate(times))
    return _lines(header, rows)


def sweep_csv(report):
    rows = sorted(report.rows, key=lambda r: -r.eps)
    return _lines(SWEEP_HEADER, [list(r) for r in rows])


def read_sweep_csv(text):
    lines = text.strip().splitlines()
    if tuple(lines[0].split(",")) != SWEEP_HEADER:
        raise ValueError("not a sweep report")
    return np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def sweep_sidecar(report, timestamp=None, extra=None):
    doc = {
        "w2_rate": report.w2_rate,
        "cost_rate": report.cost_rate,
        "control_reused_across_eps": True,
        **report.metadata,
    }
    if extra:
        doc.update(extra)
    if timestamp is not None:
        doc["timestamp"] = timestamp
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
