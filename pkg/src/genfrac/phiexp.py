"""Eigenfunctions of the memory derivative (phi-exponentials).

The eigenfunction e(t; lam) solving D e = lam * e, e(0) = 1 is evaluated
by three independent routes:

* convolution-power series  sum_k lam^k u_k(t), where u_0 = 1 and
  u_{k+1} is the memory integral of u_k;
* numerical inversion of the transform phi(z) / (z * (phi(z) - lam));
* Monte Carlo over inverse-subordinator samples (module ``mc``).

The series truncation is certified against the explicit majorant
``u_k(t) <= C1 * C2^(k-1) * beta * (Gamma(beta) t^beta)^k / Gamma(k beta + 1)``
built from the fitted kernel envelopes C2 (for u) and C1 (for U).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .bernstein import BernsteinFunction
from .errors import CancellationError, ConditioningWarning, TruncationError
from .grids import Grid, GridFunction
from .kernels import KernelTable, _caputo_values, _frac_integral_values
from .laplace import DEFAULT_CONFIG, InversionConfig, abscissa_for_eigen, invert, invert_grid

__all__ = [
    "ConvolutionPowers",
    "convolution_powers",
    "suggest_power_count",
    "phi_exp_series",
    "phi_exp_series_curve",
    "phi_exp_laplace",
    "phi_exp_laplace_curve",
    "phi_exp",
    "eigen_residual",
]

#: relative tail certificate demanded of the series route
SERIES_TOL = 1e-10
#: refuse alternating sums once sum|term| exceeds this multiple of |sum|
CANCELLATION_LIMIT = 1e6


@dataclass
class ConvolutionPowers:
    """Iterated memory integrals of 1 on a grid: u_star[k][i] ~= u_k(t_i)."""

    grid: Grid
    u_star: np.ndarray  # shape (K_max+1, N+1)
    beta: float
    c_env_u: float  # fitted C2: u(t) <= C2 t^(beta-1)
    c_env_U: float  # fitted C1: U(t) <= C1 t^beta

    @property
    def k_max(self) -> int:
        return self.u_star.shape[0] - 1


def convolution_powers(kt: KernelTable, k_max: int) -> ConvolutionPowers:
    """Build u_0..u_{k_max} by repeated application of the memory integral."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    n = kt.grid.cells
    u = np.empty((k_max + 1, n + 1))
    u[0] = 1.0
    col = np.ones((n + 1, 1))
    for k in range(1, k_max + 1):
        col = _frac_integral_values(kt.u_cell, col)
        u[k] = col[:, 0]
    return ConvolutionPowers(
        grid=kt.grid, u_star=u, beta=kt.beta, c_env_u=kt.c_fit, c_env_U=kt.c_env_U
    )


def _log_majorant(cp: ConvolutionPowers, lam_abs: float, t: float, k: int) -> float:
    """log of the k-th term bound |lam|^k u_k(t) (k >= 1)."""
    if lam_abs == 0.0 or t == 0.0:
        return -math.inf
    beta = cp.beta
    base = math.log(lam_abs * cp.c_env_u) + math.lgamma(beta) + beta * math.log(t)
    head = math.log(cp.c_env_U * beta / cp.c_env_u)
    return head + k * base - float(gammaln(beta * k + 1.0))


def _majorant_tail(cp: ConvolutionPowers, lam_abs: float, t: float, k_from: int) -> float:
    """sum_{k >= k_from} of the majorant terms."""
    total = 0.0
    for k in range(k_from, k_from + _TAIL_CAP):
        m = math.exp(min(_log_majorant(cp, lam_abs, t, k), 700.0))
        total += m
        if m <= 1e-16 * max(total, 1e-300):
            return total
    return math.inf


_TAIL_CAP = 100000


def suggest_power_count(kt: KernelTable, lam: float, rel_tol: float = SERIES_TOL) -> int:
    """Smallest K whose certified tail at t = T meets the series criterion.

    Uses the kernel envelopes only.  Values at lam >= 0 are always >= 1
    (every term is nonnegative, the leading one is 1), so an absolute tail
    of rel_tol suffices there; alternating sums can be much smaller than
    any partial, so the target drops to rel_tol/100 (covering values down
    to 0.01 -- beyond that the cancellation guard rejects the series
    route anyway).
    """
    probe = ConvolutionPowers(
        grid=kt.grid,
        u_star=np.empty((1, 1)),
        beta=kt.beta,
        c_env_u=kt.c_fit,
        c_env_U=kt.c_env_U,
    )
    lam_abs = abs(lam)
    t = kt.grid.horizon
    if lam_abs == 0.0:
        return 1
    target = rel_tol * (0.01 if lam < 0 else 1.0)
    for k in range(1, 2048):
        if _majorant_tail(probe, lam_abs, t, k + 1) <= target:
            return max(k + 2, 4)
    raise TruncationError(
        f"no certified truncation below 2048 powers for lam={lam}, T={t}"
    )


def _series_terms(cp: ConvolutionPowers, lam: float, t_index: int, rel_tol: float):
    """Terms lam^k u_k(t_i) up to a certified truncation point."""
    i = t_index
    t = cp.grid.nodes[i]
    terms = [1.0]
    running = 1.0
    if lam == 0.0:
        return terms, 0.0
    lam_abs = abs(lam)
    sign = 1.0 if lam > 0 else -1.0
    log_lam = math.log(lam_abs)
    gross = 1.0
    for k in range(1, cp.k_max + 1):
        uk = cp.u_star[k, i]
        term = 0.0 if uk <= 0.0 else sign ** k * math.exp(k * log_lam + math.log(uk))
        terms.append(term)
        running += term
        gross += abs(term)
        tail = _majorant_tail(cp, lam_abs, t, k + 1)
        if tail <= rel_tol * max(abs(running), 1e-300):
            return terms, tail
    if lam < 0 and gross > CANCELLATION_LIMIT * max(abs(running), 1e-300):
        raise CancellationError(
            f"alternating series amplification {gross / max(abs(running), 1e-300):.2e} "
            f"exceeds {CANCELLATION_LIMIT:.0e} at lam={lam}; use the Laplace route"
        )
    raise TruncationError(
        f"series not certified within k_max={cp.k_max} at t={t:g}, lam={lam:g}; "
        f"estimated tail {_majorant_tail(cp, lam_abs, t, cp.k_max + 1):.3e}",
        tail_estimate=_majorant_tail(cp, lam_abs, t, cp.k_max + 1),
    )


def phi_exp_series(
    cp: ConvolutionPowers, lam: float, t_index: int, rel_tol: float = SERIES_TOL
) -> float:
    """Series value of the eigenfunction at grid node ``t_index``.

    Raises :class:`TruncationError` when the stored powers cannot certify
    the tail and :class:`CancellationError` when the alternating sum
    amplifies the quadrature noise of the powers beyond trust
    (sum|term| > 1e6 |sum|); fall back to the Laplace route then.
    """
    if not 0 <= t_index <= cp.grid.cells:
        raise ValueError(f"t_index out of range 0..{cp.grid.cells}")
    terms, _tail = _series_terms(cp, lam, t_index, rel_tol)
    total = math.fsum(terms)
    if lam < 0:
        gross = math.fsum(abs(x) for x in terms)
        if gross > CANCELLATION_LIMIT * max(abs(total), 1e-300):
            raise CancellationError(
                f"alternating series amplification {gross / max(abs(total), 1e-300):.2e} "
                f"exceeds {CANCELLATION_LIMIT:.0e} at lam={lam}; use the Laplace route"
            )
    return total


def phi_exp_series_curve(
    cp: ConvolutionPowers, lam: float, rel_tol: float = SERIES_TOL
) -> np.ndarray:
    """Series values at every grid node (certified at the worst node t=T)."""
    if lam == 0.0:
        return np.ones(cp.grid.cells + 1)
    # find the node-T truncation once; reuse for the whole curve
    terms_T, _ = _series_terms(cp, lam, cp.grid.cells, rel_tol)
    K = len(terms_T) - 1
    direct = abs(lam) <= 1.0 or K * math.log(abs(lam)) < 690.0
    powers = lam ** np.arange(K + 1) if direct else None
    if powers is not None and np.all(np.isfinite(powers)):
        mat = powers[:, None] * cp.u_star[: K + 1]
    else:  # form terms in log space column by column
        mat = np.zeros((K + 1, cp.grid.cells + 1))
        sign = 1.0 if lam > 0 else -1.0
        loglam = math.log(abs(lam))
        with np.errstate(divide="ignore"):
            logu = np.log(cp.u_star[: K + 1])
        for k in range(K + 1):
            mat[k] = sign ** k * np.exp(k * loglam + logu[k])
        mat[np.isnan(mat)] = 0.0
    if lam > 0:
        return mat.sum(axis=0)
    out = np.empty(cp.grid.cells + 1)
    for i in range(cp.grid.cells + 1):
        col = mat[:, i]
        total = math.fsum(col.tolist())
        gross = float(np.abs(col).sum())
        if gross > CANCELLATION_LIMIT * max(abs(total), 1e-300):
            raise CancellationError(
                f"alternating series amplification beyond trust at node {i}; "
                "use the Laplace route"
            )
        out[i] = total
    return out


def _eigen_transform(phi: BernsteinFunction, lam: float, guard: float):
    def transform(z):
        pz = phi.phi(z)
        denom = pz - lam
        d = np.min(np.abs(np.asarray(denom)))
        if d < guard:
            warnings.warn(
                f"transform evaluated within {d:.2e} of the eigen pole "
                f"(guard {guard:.2e}); result may be ill-conditioned",
                ConditioningWarning,
                stacklevel=2,
            )
        return pz / (np.asarray(z) * denom)

    return transform


def _eigen_shift(phi: BernsteinFunction, lam: float, cfg: InversionConfig) -> float:
    if cfg.abscissa_shift != 0.0:
        return cfg.abscissa_shift
    if lam <= 0:
        return 0.0
    # recentre essentially at the pole: the shifted original then tends to
    # a constant (the residue term), which the inversion handles at full
    # accuracy, while farther contours make it decay like exp(-c t) and
    # cost digits; the 0.1% margin keeps the first node off the pole
    return 1.001 * abscissa_for_eigen(phi, lam)


def phi_exp_laplace(
    phi: BernsteinFunction, lam: float, t: float, cfg: InversionConfig = DEFAULT_CONFIG
) -> float:
    """Eigenfunction value by inversion of phi(z)/(z (phi(z) - lam))."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    shift = _eigen_shift(phi, lam, cfg)
    guard = 1e-8 * max(1.0, abs(lam))
    transform = _eigen_transform(phi, lam, guard)
    from dataclasses import replace

    return invert(transform, t, replace(cfg, abscissa_shift=shift))


def phi_exp_laplace_curve(
    phi: BernsteinFunction, lam: float, ts, cfg: InversionConfig = DEFAULT_CONFIG
) -> np.ndarray:
    """Vectorized Laplace route over an array of positive times."""
    shift = _eigen_shift(phi, lam, cfg)
    guard = 1e-8 * max(1.0, abs(lam))
    transform = _eigen_transform(phi, lam, guard)
    from dataclasses import replace

    return invert_grid(transform, ts, replace(cfg, abscissa_shift=shift))


def phi_exp(
    phi: BernsteinFunction,
    cp: ConvolutionPowers,
    lam: float,
    t_index: int,
    cfg: InversionConfig = DEFAULT_CONFIG,
) -> float:
    """Series evaluation with automatic fallback to the Laplace route when
    the series refuses (cancellation or uncertified tail)."""
    try:
        return phi_exp_series(cp, lam, t_index)
    except (CancellationError, TruncationError):
        t = float(cp.grid.nodes[t_index])
        if t == 0.0:
            return 1.0
        return phi_exp_laplace(phi, lam, t, cfg)


def eigen_residual(
    kt: KernelTable, lam: float, e_values: GridFunction, interior_frac: float = 0.05
) -> float:
    """Sup of |D e - lam e| over interior nodes (t >= interior_frac * T).

    A short initial boundary layer is excluded: the difference-quotient
    derivative overshoots on the first few cells for eigenfunctions, whose
    roughness at 0 matches the kernel's.
    """
    if e_values.grid != kt.grid:
        raise ValueError("grid mismatch between table and eigenfunction values")
    if abs(float(e_values.node_norms()[0]) - 1.0) > 1e-9:
        raise ValueError("eigenfunction values must start at 1")
    deriv = _caputo_values(kt.nu_cell, e_values.values, kt.grid.step)
    resid = np.linalg.norm(deriv - lam * e_values.values, axis=1)
    mask = kt.grid.nodes >= interior_frac * kt.grid.horizon
    mask[0] = False  # endpoint value is one-sided by convention
    return float(resid[mask].max())
