"""Built-in right-hand sides and the problem-file format.

A problem file is plain key-value text (``key = value`` per line, ``#``
comments).  Required keys: ``d``, ``f0``, ``T``, ``R``, ``rhs``; the rhs
kind selects its own parameter keys:

    rhs = zero
    rhs = constant     xi = 1.0[,...]
    rhs = linear       matrix = -1.0[,...]      (row-major d*d)
    rhs = affine       matrix = ...  xi = ...
    rhs = logistic     rate = 1.0               (d = 1 only)
    rhs = power        coef = 1.0  exponent = 2 (d = 1 only)
    rhs = table        table_t = 0,0.5,1  table_v = 0,1,0

Each builder carries the ball-wise bound and Lipschitz metadata the
solver's horizon selection needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .solver import IvpProblem

__all__ = [
    "RhsSpec",
    "rhs_zero",
    "rhs_constant",
    "rhs_linear",
    "rhs_affine",
    "rhs_logistic",
    "rhs_power",
    "rhs_table",
    "make_problem",
    "read_kv_file",
    "load_problem_file",
]


@dataclass
class RhsSpec:
    fn: Callable  # vectorized: (ts (m,), ys (m, d)) -> (m, d)
    dim: int
    c_bound: Callable[[float], float]
    lip_l: Callable[[float], float]
    label: str


def rhs_zero(dim: int = 1) -> RhsSpec:
    return RhsSpec(
        fn=lambda ts, ys: np.zeros_like(ys),
        dim=dim,
        c_bound=lambda R: 0.0,
        lip_l=lambda R: 0.0,
        label="zero",
    )


def rhs_constant(xi) -> RhsSpec:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    mag = float(np.linalg.norm(xi))
    return RhsSpec(
        fn=lambda ts, ys: np.tile(xi, (ys.shape[0], 1)),
        dim=xi.shape[0],
        c_bound=lambda R: mag,
        lip_l=lambda R: 0.0,
        label="constant",
    )


def rhs_linear(matrix) -> RhsSpec:
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError("linear rhs needs a square matrix")
    norm = float(np.linalg.norm(M, 2))
    return RhsSpec(
        fn=lambda ts, ys: ys @ M.T,
        dim=M.shape[0],
        c_bound=lambda R: norm * R,
        lip_l=lambda R: norm,
        label="linear",
    )


def rhs_affine(matrix, xi) -> RhsSpec:
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if M.shape != (xi.shape[0], xi.shape[0]):
        raise ValueError("affine rhs needs matching matrix and xi shapes")
    norm = float(np.linalg.norm(M, 2))
    mag = float(np.linalg.norm(xi))
    return RhsSpec(
        fn=lambda ts, ys: ys @ M.T + xi,
        dim=xi.shape[0],
        c_bound=lambda R: mag + norm * R,
        lip_l=lambda R: norm,
        label="affine",
    )


def rhs_logistic(rate: float) -> RhsSpec:
    r = float(rate)
    return RhsSpec(
        fn=lambda ts, ys: r * ys * (1.0 - ys),
        dim=1,
        c_bound=lambda R: abs(r) * (R + R * R),
        lip_l=lambda R: abs(r) * (1.0 + 2.0 * R),
        label="logistic",
    )


def rhs_power(coef: float, exponent: float) -> RhsSpec:
    """F(y) = coef * sign(y) |y|^p (odd extension keeps it ball-Lipschitz)."""
    c, p = float(coef), float(exponent)
    if p < 1:
        raise ValueError("exponent must be >= 1 for local Lipschitz bounds")
    return RhsSpec(
        fn=lambda ts, ys: c * np.sign(ys) * np.abs(ys) ** p,
        dim=1,
        c_bound=lambda R: abs(c) * R ** p,
        lip_l=lambda R: abs(c) * p * R ** (p - 1.0) if R > 0 else 0.0,
        label="power",
    )


def rhs_table(table_t, table_v) -> RhsSpec:
    """Pure time-dependent forcing interpolated from a table."""
    ts = np.asarray(table_t, dtype=float)
    vs = np.asarray(table_v, dtype=float)
    if vs.ndim == 1:
        vs = vs[:, None]
    if ts.ndim != 1 or vs.shape[0] != ts.shape[0]:
        raise ValueError("table_t and table_v must have matching lengths")
    mag = float(np.linalg.norm(vs, axis=1).max())
    dim = vs.shape[1]

    def fn(times, ys):
        out = np.empty((times.shape[0], dim))
        for k in range(dim):
            out[:, k] = np.interp(times, ts, vs[:, k])
        return out

    return RhsSpec(
        fn=fn,
        dim=dim,
        c_bound=lambda R: mag,
        lip_l=lambda R: 0.0,
        label="table",
    )


def make_problem(spec: RhsSpec, f0, horizon: float) -> IvpProblem:
    f0 = np.atleast_1d(np.asarray(f0, dtype=float))
    if f0.shape != (spec.dim,):
        raise ValueError(f"f0 must have dimension {spec.dim}")
    return IvpProblem(
        rhs=spec.fn,
        f0=f0,
        horizon=horizon,
        dim=spec.dim,
        bound_c=spec.c_bound,
        lip_l=spec.lip_l,
        vectorized=True,
        label=spec.label,
    )


def read_kv_file(path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    kv = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed line {raw!r}")
            key, _, val = line.partition("=")
            kv[key.strip().lower()] = val.strip()
    return kv


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def load_problem_file(path):
    """Returns (IvpProblem, R, metadata dict)."""
    kv = read_kv_file(path)
    try:
        dim = int(kv.pop("d", "1"))
        f0 = _floats(kv.pop("f0"))
        horizon = float(kv.pop("t"))
        radius = float(kv.pop("r"))
        kind = kv.pop("rhs").lower()
    except KeyError as exc:
        raise ValueError(f"problem file missing required key: {exc}") from exc

    if kind == "zero":
        spec = rhs_zero(dim)
    elif kind == "constant":
        spec = rhs_constant(_floats(kv.pop("xi")))
    elif kind == "linear":
        m = np.asarray(_floats(kv.pop("matrix"))).reshape(dim, dim)
        spec = rhs_linear(m)
    elif kind == "affine":
        m = np.asarray(_floats(kv.pop("matrix"))).reshape(dim, dim)
        spec = rhs_affine(m, _floats(kv.pop("xi")))
    elif kind == "logistic":
        spec = rhs_logistic(float(kv.pop("rate")))
    elif kind == "power":
        spec = rhs_power(float(kv.pop("coef")), float(kv.pop("exponent")))
    elif kind == "table":
        spec = rhs_table(_floats(kv.pop("table_t")), _floats(kv.pop("table_v")))
    else:
        raise ValueError(f"unknown rhs kind {kind!r}")
    if kv:
        raise ValueError(f"unrecognized problem keys: {sorted(kv)}")
    if spec.dim != dim:
        raise ValueError(f"rhs {kind!r} has dimension {spec.dim}, file says {dim}")
    problem = make_problem(spec, f0, horizon)
    meta = {"rhs": kind, "d": dim, "T": horizon, "R": radius, "f0": f0}
    return problem, radius, meta
