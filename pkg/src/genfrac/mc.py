"""Monte Carlo layer: subordinator paths and inverse-passage estimates.

Paths of the driving subordinator are built from i.i.d. increments on an
operational-time grid of step dt; the inverse process L(t) is read off by
first passage, which biases L upward by at most one dt.  Estimates of
U(t) = E[L(t)], the moments E[L^k(t)]/k!, and the eigenfunction
e(t; lam) = E[exp(lam L(t))] provide a route independent of both the
series and the Laplace machinery.

Reproducibility: every path owns a counter-based stream keyed by
(seed, path index), and reductions use numpy's fixed pairwise order, so
results are bit-identical for a given seed regardless of call order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bernstein import BernsteinFunction
from .errors import ConditioningWarning, PathExhaustedError

__all__ = [
    "McConfig",
    "McEstimate",
    "sample_stable_increment",
    "sample_tempered_increment",
    "inverse_passage",
    "sample_inverse_values",
    "estimate_phi_exp_mc",
    "estimate_moments",
    "estimate_potential_mc",
    "laplace_exponent_check",
    "tail_bound_check",
]

_MAX_STEPS_PER_PATH = 5_000_000


@dataclass(frozen=True)
class McConfig:
    phi: BernsteinFunction
    n_paths: int = 10_000
    dt: float = 1e-3
    t_max: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.phi.kind not in ("stable", "tempered"):
            raise ValueError("samplers exist for stable and tempered kinds only")
        if self.n_paths < 100:
            raise ValueError("need at least 100 paths")
        if not 0 < self.dt <= self.t_max / 100.0:
            raise ValueError("dt must satisfy 0 < dt <= t_max/100")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_effective: int


def _path_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def sample_stable_increment(alpha: float, dt: float, rng: np.random.Generator, size=None):
    """Increments of the stable subordinator over operational time dt.

    Standard two-uniform representation of the positive stable law with
    E[exp(-lam X)] = exp(-dt lam^alpha), scaled by dt^(1/alpha).
    """
    shape = (size,) if isinstance(size, int) else size
    u = rng.random(shape) * math.pi
    w = rng.random(shape)
    e = -np.log(np.where(w > 0, w, np.finfo(float).tiny))
    frac = (1.0 - alpha) / alpha
    amp = (
        np.sin((1.0 - alpha) * u)
        * np.sin(alpha * u) ** (alpha / (1.0 - alpha))
        / np.sin(u) ** (1.0 / (1.0 - alpha))
    )
    out = dt ** (1.0 / alpha) * (amp / e) ** frac
    return float(out) if size is None else out


def sample_tempered_increment(
    alpha: float, theta: float, dt: float, rng: np.random.Generator, size=None
):
    """Tempered-stable increments by exponential-tilting rejection.

    Stable proposals are accepted with probability exp(-theta X); the
    expected acceptance rate is exp(-dt theta^alpha) and the draw order is
    preserved, keeping per-path streams reproducible.
    """
    rate = math.exp(-dt * theta ** alpha)
    if rate < 1e-3:
        raise ValueError(
            f"tilting acceptance rate {rate:.2e} < 1e-3; decrease dt (or theta)"
        )
    n = 1 if size is None else int(size)
    out = np.empty(n)
    filled = 0
    while filled < n:
        batch = max(16, int((n - filled) / rate * 1.2) + 8)
        x = sample_stable_increment(alpha, dt, rng, size=batch)
        accept = rng.random(batch) < np.exp(-theta * x)
        got = x[accept]
        take = min(n - filled, got.shape[0])
        out[filled : filled + take] = got[:take]
        filled += take
    return float(out[0]) if size is None else out


def inverse_passage(increments: np.ndarray, t: float, dt: float) -> float:
    """First operational time y (a multiple of dt) with sigma(y) > t.

    ``increments`` is one path's increment sequence; the discrete passage
    time overestimates the continuum one by at most dt.
    """
    cum = np.cumsum(np.asarray(increments, dtype=float))
    j = int(np.searchsorted(cum, t, side="right"))
    if j >= cum.shape[0]:
        raise PathExhaustedError(
            f"path (length {cum.shape[0]}) never exceeded level t={t}; extend it"
        )
    return (j + 1) * dt


def sample_inverse_values(cfg: McConfig, t_targets: Sequence[float]) -> np.ndarray:
    """L(t) for every path and every target level; shape (n_paths, n_targets).

    Paths are extended blockwise until they pass the largest target, up to
    a hard cap on the operational steps.
    """
    targets = np.asarray(sorted(float(t) for t in t_targets))
    if targets.size == 0:
        raise ValueError("need at least one target time")
    if np.any(targets < 0) or float(targets.max()) > cfg.t_max:
        raise ValueError(f"targets must lie in [0, t_max={cfg.t_max}]")
    t_top = float(targets.max())
    out = np.empty((cfg.n_paths, targets.size))
    order = np.argsort(np.argsort([float(t) for t in t_targets]))  # undo the sort later
    stable_kind = cfg.phi.kind == "stable"
    alpha, theta = cfg.phi.alpha, cfg.phi.theta
    for i in range(cfg.n_paths):
        rng = _path_rng(cfg.seed, i)
        chunks = []
        total = 0.0
        steps = 0
        block = 2048
        while total <= t_top:
            if steps >= _MAX_STEPS_PER_PATH:
                raise PathExhaustedError(
                    f"path {i} exceeded {_MAX_STEPS_PER_PATH} steps before passage"
                )
            if stable_kind:
                inc = sample_stable_increment(alpha, cfg.dt, rng, size=block)
            else:
                inc = sample_tempered_increment(alpha, theta, cfg.dt, rng, size=block)
            chunks.append(inc)
            total += float(inc.sum())
            steps += block
            block = min(2 * block, 65536)
        cum = np.cumsum(chunks[0] if len(chunks) == 1 else np.concatenate(chunks))
        idx = np.searchsorted(cum, targets, side="right")
        out[i] = (idx + 1) * cfg.dt
    return out[:, order]


def _mean_se(values: np.ndarray) -> McEstimate:
    n = values.shape[0]
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return McEstimate(value=mean, std_error=sd / math.sqrt(n), n_effective=n)


def estimate_phi_exp_mc(cfg: McConfig, lam: float, t: float) -> McEstimate:
    """Sample mean of exp(lam * L(t)) with its standard error.

    For lam > 0 the summand is heavy-tailed; a warning fires when the top
    1% of the samples carries more than half of the estimate.
    """
    L = sample_inverse_values(cfg, [t])[:, 0]
    vals = np.exp(lam * L)
    if not np.all(np.isfinite(vals)):
        raise OverflowError(
            f"exp(lam*L) overflowed (lam={lam}); horizon too long for this sampler"
        )
    if lam > 0:
        k = max(1, vals.shape[0] // 100)
        top = float(np.sort(vals)[-k:].sum())
        if top > 0.5 * float(vals.sum()):
            warnings.warn(
                f"top 1% of samples carries {top / float(vals.sum()):.0%} of the "
                "estimate; variance is heavy-tailed, increase n_paths",
                ConditioningWarning,
                stacklevel=2,
            )
    return _mean_se(vals)


def estimate_moments(cfg: McConfig, t: float, k_max: int) -> list:
    """McEstimate of E[L^k(t)] / k! for k = 0..k_max (k_max <= 6)."""
    if not 0 <= k_max <= 6:
        raise ValueError("k_max must lie in 0..6 (variance grows with k)")
    L = sample_inverse_values(cfg, [t])[:, 0]
    out = [McEstimate(value=1.0, std_error=0.0, n_effective=cfg.n_paths)]
    for k in range(1, k_max + 1):
        est = _mean_se(L ** k)
        fact = math.factorial(k)
        out.append(
            McEstimate(
                value=est.value / fact,
                std_error=est.std_error / fact,
                n_effective=est.n_effective,
            )
        )
    return out


def estimate_potential_mc(cfg: McConfig, t: float) -> McEstimate:
    """U(t) = E[L(t)] by first passage."""
    return estimate_moments(cfg, t, 1)[1]


def laplace_exponent_check(cfg: McConfig, lambdas: Sequence[float]) -> list:
    """Empirical E[exp(-lam sigma(dt))] against exp(-dt phi(lam)).

    One increment per path (the first of its stream); rows are dicts with
    the empirical mean, its standard error, and the analytic target.
    """
    inc = np.empty(cfg.n_paths)
    for i in range(cfg.n_paths):
        rng = _path_rng(cfg.seed, i)
        if cfg.phi.kind == "stable":
            inc[i] = sample_stable_increment(cfg.phi.alpha, cfg.dt, rng)
        else:
            inc[i] = sample_tempered_increment(cfg.phi.alpha, cfg.phi.theta, cfg.dt, rng)
    rows = []
    for lam in lambdas:
        est = _mean_se(np.exp(-lam * inc))
        rows.append(
            {
                "lam": float(lam),
                "empirical": est.value,
                "std_error": est.std_error,
                "target": math.exp(-cfg.dt * float(cfg.phi.phi(lam))),
            }
        )
    return rows


def tail_bound_check(cfg: McConfig, t: float, s_values: Sequence[float], x: float) -> list:
    """Empirical P(L(t) > s) against the exponential bound exp(x t - s phi(x))."""
    if not x > 0:
        raise ValueError("the bound needs x > 0")
    L = sample_inverse_values(cfg, [t])[:, 0]
    phix = float(cfg.phi.phi(x))
    rows = []
    for s in s_values:
        p = float(np.mean(L > s))
        se = math.sqrt(max(p * (1.0 - p), 1.0 / cfg.n_paths) / cfg.n_paths)
        rows.append(
            {
                "s": float(s),
                "empirical": p,
                "std_error": se,
                "bound": math.exp(x * t - float(s) * phix),
            }
        )
    return rows
