"""Picard solver for memory-derivative Cauchy problems.

The initial-value problem D f = F(t, f), f(0) = f0 is recast as the
fixed-point equation f = f0 + I[F(., f)] and solved by Picard sweeps on
the grid, monitored in an exponentially weighted (Bielecki) norm chosen
so the iteration map is provably a 1/2-contraction.  The admissible
horizon T' is the largest grid node with C_Rtilde * U(T') < R, which
confines every iterate to the ball B_R(f0); leaving that ball aborts the
run rather than projecting back, since it signals a misconfigured (R, T').

Longer horizons are reached by restarted segments
(:func:`continue_solution`): the memory integral over the solved part is
frozen and only the new cells iterate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .errors import ConfinementError, HorizonError, NonconvergenceError
from .grids import Grid, GridFunction
from .kernels import KernelTable, _conv_prefix, _frac_integral_values

__all__ = [
    "IvpProblem",
    "PicardState",
    "HorizonSelection",
    "select_horizon",
    "pick_bielecki_tau",
    "picard_solve",
    "continue_solution",
    "solve_to_horizon",
    "verify_holder",
    "HolderReport",
    "neumann_affine_solve",
    "estimate_lipschitz",
]


@dataclass
class IvpProblem:
    """Right-hand side with local bound/Lipschitz metadata.

    ``bound_c(R)`` bounds |F(t, x)| over |x| <= R, ``lip_l(R)`` bounds the
    state-Lipschitz constant there; both must be nondecreasing in R.  Set
    ``vectorized`` when ``rhs`` accepts (times (m,), states (m, d)) batches.
    """

    rhs: Callable
    f0: np.ndarray
    horizon: float
    dim: int
    bound_c: Callable[[float], float]
    lip_l: Callable[[float], float]
    vectorized: bool = False
    label: str = ""

    def __post_init__(self):
        self.f0 = np.atleast_1d(np.asarray(self.f0, dtype=float))
        if self.f0.shape != (self.dim,):
            raise ValueError(f"f0 must have shape ({self.dim},), got {self.f0.shape}")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    def eval_rhs(self, ts: np.ndarray, ys: np.ndarray) -> np.ndarray:
        if self.vectorized:
            out = np.asarray(self.rhs(ts, ys), dtype=float)
        else:
            out = np.asarray([self.rhs(float(t), y) for t, y in zip(ts, ys)], dtype=float)
        if out.shape != ys.shape:
            raise ValueError(f"rhs returned shape {out.shape}, expected {ys.shape}")
        return out


@dataclass
class PicardState:
    """Diagnostics of one Picard run (possibly one continuation segment)."""

    iterate: GridFunction
    iteration_count: int
    bielecki_tau: float
    successive_norms: List[float]
    contraction_ratio_estimates: List[float]
    residual_sup: float
    horizon_index: int
    t_prime: float
    r_tilde: float
    converged: bool = True


@dataclass(frozen=True)
class HorizonSelection:
    t_prime: float
    index: int
    r_tilde: float
    c_bound: float


def select_horizon(problem: IvpProblem, kt: KernelTable, R: float) -> HorizonSelection:
    """Largest grid-aligned T' <= T with bound_c(R + |f0|) * U(T') < R."""
    if not R > 0:
        raise ValueError("R must be positive")
    r_tilde = R + float(np.linalg.norm(problem.f0))
    c = float(problem.bound_c(r_tilde))
    if c < 0:
        raise ValueError("bound_c must be nonnegative")
    n = kt.grid.cells
    if c == 0.0:
        return HorizonSelection(kt.grid.horizon, n, r_tilde, c)
    ok = c * kt.U_node < R
    # U is nondecreasing, so admissible indices form a prefix
    idx = int(np.searchsorted(ok[::-1], True))  # count of trailing False
    m = n - idx
    if m < 1:
        raise HorizonError(
            f"no grid node satisfies bound_c*U < R (c={c:g}, R={R:g}); "
            "refine the grid or enlarge R"
        )
    return HorizonSelection(float(kt.grid.nodes[m]), m, r_tilde, c)


def pick_bielecki_tau(kt: KernelTable, L: float, t_prime: float) -> float:
    """Smallest weight tau making the contraction estimate <= 1/2.

    With p = (2 - beta) / (2 (1 - beta)) and q = p (beta - 1) + 1 the
    iteration map's Lipschitz constant in the tau-weighted sup norm is
    bounded by  c_fit * L * q^(-1/p) * T'^(q/p) * (p' tau)^(-1/p'),
    which equals 1/2 at the returned tau.
    """
    if L < 0 or not t_prime > 0:
        raise ValueError("need L >= 0 and t_prime > 0")
    if L == 0.0:
        return 0.0
    beta = kt.beta
    p = (2.0 - beta) / (2.0 * (1.0 - beta))
    p_conj = p / (p - 1.0)
    q = p * (beta - 1.0) + 1.0
    d = kt.c_fit * L * q ** (-1.0 / p) * t_prime ** (q / p)
    return (2.0 * d) ** p_conj / p_conj


def _theoretical_contraction(kt: KernelTable, L: float, t_prime: float, tau: float) -> float:
    if L == 0.0:
        return 0.0
    beta = kt.beta
    p = (2.0 - beta) / (2.0 * (1.0 - beta))
    p_conj = p / (p - 1.0)
    q = p * (beta - 1.0) + 1.0
    return kt.c_fit * L * q ** (-1.0 / p) * t_prime ** (q / p) * (p_conj * tau) ** (-1.0 / p_conj)


def _initial_values(problem: IvpProblem, m: int, initial, R: float) -> np.ndarray:
    if initial is None:
        return np.tile(problem.f0, (m + 1, 1))
    init = np.atleast_1d(np.asarray(initial, dtype=float))
    if init.shape == (problem.dim,):
        if np.linalg.norm(init - problem.f0) > R * (1 + 1e-12):
            raise ValueError("initial iterate must start inside B_R(f0)")
        return np.tile(init, (m + 1, 1))
    if init.shape == (m + 1, problem.dim):
        return init.copy()
    raise ValueError(
        f"initial must be a d-vector or an array of shape ({m + 1}, {problem.dim})"
    )


def picard_solve(
    problem: IvpProblem,
    kt: KernelTable,
    R: float,
    tol: float = 1e-10,
    max_iter: int = 200,
    initial=None,
    horizon_index: Optional[int] = None,
):
    """Solve on [0, T'] by Picard iteration; returns (solution, state).

    The right-hand side is evaluated at cell midpoints on linearly
    interpolated iterate values, matching the trapezoid product
    integration of the memory kernel.
    """
    if horizon_index is None:
        sel = select_horizon(problem, kt, R)
        m, t_prime, r_tilde = sel.index, sel.t_prime, sel.r_tilde
    else:
        m = int(horizon_index)
        if not 1 <= m <= kt.grid.cells:
            raise ValueError(f"horizon_index must lie in 1..{kt.grid.cells}")
        t_prime = float(kt.grid.nodes[m])
        r_tilde = R + float(np.linalg.norm(problem.f0))

    h = kt.grid.step
    nodes = kt.grid.nodes[: m + 1]
    ts_mid = nodes[:-1] + 0.5 * h
    W = kt.u_cell[:m]
    L = float(problem.lip_l(r_tilde))
    tau = pick_bielecki_tau(kt, L, t_prime)
    weights = np.exp(-tau * nodes)

    f = _initial_values(problem, m, initial, R)
    norms: List[float] = []
    ratios: List[float] = []
    newf = np.empty_like(f)
    # sup-norm gain of one sweep; the exit threshold below guarantees the
    # returned iterate's fixed-point residual stays under tol in sup norm
    kappa_sup = L * float(kt.U_node[m])
    sup_goal = tol / (1.0 + kappa_sup)
    for it in range(1, max_iter + 1):
        mid = 0.5 * (f[:-1] + f[1:])
        g = problem.eval_rhs(ts_mid, mid)
        newf[0] = problem.f0
        newf[1:] = problem.f0 + _conv_prefix(W, g)
        drift = np.linalg.norm(newf - problem.f0, axis=1)
        if float(drift.max()) > R * (1 + 1e-9):
            raise ConfinementError(
                f"iterate left B_R(f0) at iteration {it} "
                f"(max drift {drift.max():.6g} > R={R:g}); reselect R or T'"
            )
        step = np.linalg.norm(newf - f, axis=1)
        dn = float((step * weights).max())
        dn_sup = float(step.max())
        norms.append(dn)
        if len(norms) >= 2 and norms[-2] > 0:
            ratios.append(norms[-1] / norms[-2])
        f, newf = newf, f
        if dn < tol and dn_sup <= sup_goal:
            break
    else:
        raise NonconvergenceError(
            f"no convergence within {max_iter} iterations (last step {norms[-1]:.3e}, "
            f"ratio history {ratios[-3:]})",
            history=norms,
        )

    # fixed-point residual ||f - A f||_inf, one extra sweep
    mid = 0.5 * (f[:-1] + f[1:])
    g = problem.eval_rhs(ts_mid, mid)
    af = np.empty_like(f)
    af[0] = problem.f0
    af[1:] = problem.f0 + _conv_prefix(W, g)
    residual = float(np.linalg.norm(af - f, axis=1).max())

    sol = GridFunction(kt.grid.prefix(m), f)
    state = PicardState(
        iterate=sol,
        iteration_count=it,
        bielecki_tau=tau,
        successive_norms=norms,
        contraction_ratio_estimates=ratios,
        residual_sup=residual,
        horizon_index=m,
        t_prime=t_prime,
        r_tilde=r_tilde,
    )
    return sol, state


def continue_solution(
    problem: IvpProblem,
    kt: KernelTable,
    prior: GridFunction,
    R: float,
    tol: float = 1e-10,
    max_iter: int = 200,
    extend_index: Optional[int] = None,
):
    """Extend a converged solution past its horizon.

    The memory term over the solved segment is re-evaluated once from the
    prior values and then held fixed while the new cells iterate; the
    restart ball is centered at the terminal value of the prior segment.
    """
    if abs(prior.grid.step - kt.grid.step) > 1e-12 * kt.grid.step:
        raise ValueError("prior solution lives on a different step size")
    mp = prior.grid.cells
    n = kt.grid.cells
    if mp >= n:
        raise ValueError("prior already covers the full grid")
    if prior.dim != problem.dim:
        raise ValueError("dimension mismatch between prior and problem")

    f_end = prior.values[-1]
    r_tilde = R + float(np.linalg.norm(f_end))
    c = float(problem.bound_c(r_tilde))
    L = float(problem.lip_l(r_tilde))

    if extend_index is None:
        if c == 0.0:
            k = n - mp
        else:
            ok = c * kt.U_node < R
            idx = int(np.searchsorted(ok[::-1], True))
            k = min(kt.grid.cells - idx, n - mp)
    else:
        k = int(extend_index) - mp
    if k < 1:
        raise HorizonError(
            f"continuation cannot advance (c={c:g}, R={R:g}); "
            "refine the grid or enlarge R"
        )
    m_new = mp + k

    h = kt.grid.step
    nodes = kt.grid.nodes[: m_new + 1]
    W = kt.u_cell[:m_new]

    # frozen history: midpoint right-hand sides over the solved cells
    ts_hist = nodes[:mp] + 0.5 * h
    mid_hist = 0.5 * (prior.values[:-1] + prior.values[1:])
    g_hist = problem.eval_rhs(ts_hist, mid_hist)
    g_pad = np.zeros((m_new, problem.dim))
    g_pad[:mp] = g_hist
    hist = _conv_prefix(W, g_pad)  # history part of the memory integral

    t_span = float(nodes[m_new] - nodes[mp])
    tau = pick_bielecki_tau(kt, L, t_span)
    seg_weights = np.exp(-tau * (nodes[mp + 1 :] - nodes[mp]))
    ts_new = nodes[mp:m_new] + 0.5 * h
    Wk = kt.u_cell[:k]

    f_ext = np.empty((m_new + 1, problem.dim))
    f_ext[: mp + 1] = prior.values
    f_ext[mp + 1 :] = f_end

    norms: List[float] = []
    ratios: List[float] = []
    kappa_sup = L * float(kt.U_node[k])
    sup_goal = tol / (1.0 + kappa_sup)
    for it in range(1, max_iter + 1):
        mid_new = 0.5 * (f_ext[mp:m_new] + f_ext[mp + 1 :])
        g_new = problem.eval_rhs(ts_new, mid_new)
        seg = _conv_prefix(Wk, g_new)
        new_tail = problem.f0 + hist[mp:] + seg
        drift = np.linalg.norm(new_tail - f_end, axis=1)
        if float(drift.max()) > R * (1 + 1e-9):
            raise ConfinementError(
                f"continuation iterate left B_R(f(T')) at iteration {it} "
                f"(max drift {drift.max():.6g} > R={R:g})"
            )
        step = np.linalg.norm(new_tail - f_ext[mp + 1 :], axis=1)
        dn = float((step * seg_weights).max())
        dn_sup = float(step.max())
        norms.append(dn)
        if len(norms) >= 2 and norms[-2] > 0:
            ratios.append(norms[-1] / norms[-2])
        f_ext[mp + 1 :] = new_tail
        if dn < tol and dn_sup <= sup_goal:
            break
    else:
        raise NonconvergenceError(
            f"continuation did not converge within {max_iter} iterations "
            f"(last step {norms[-1]:.3e})",
            history=norms,
        )

    sol = GridFunction(kt.grid.prefix(m_new), f_ext)
    state = PicardState(
        iterate=sol,
        iteration_count=it,
        bielecki_tau=tau,
        successive_norms=norms,
        contraction_ratio_estimates=ratios,
        residual_sup=float(norms[-1]),
        horizon_index=m_new,
        t_prime=float(nodes[m_new]),
        r_tilde=r_tilde,
    )
    return sol, state


def solve_to_horizon(
    problem: IvpProblem,
    kt: KernelTable,
    R: float,
    tol: float = 1e-10,
    max_iter: int = 200,
    target_index: Optional[int] = None,
):
    """March to ``target_index`` (default: the full grid) by chained
    restarts; returns (solution, list of per-segment states)."""
    target = kt.grid.cells if target_index is None else int(target_index)
    sol, state = picard_solve(problem, kt, R, tol=tol, max_iter=max_iter)
    states = [state]
    while sol.grid.cells < target:
        sol, state = continue_solution(problem, kt, sol, R, tol=tol, max_iter=max_iter)
        states.append(state)
    if sol.grid.cells > target:
        sol = sol.restrict(target)
    return sol, states


@dataclass
class HolderReport:
    l_est: float
    argmax_pair: tuple
    beta: float


def verify_holder(f: GridFunction, beta: float):
    """Largest ratio |f(t_i) - f(t_j)| / |t_i - t_j|^beta over node pairs.

    Stable under refinement for genuinely beta-Holder functions; a growing
    estimate under grid refinement indicates lower regularity.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0,1)")
    vals = f.values
    n = f.grid.cells
    h = f.grid.step
    best = 0.0
    best_pair = (0, 0)
    for lag in range(1, n + 1):
        diff = np.linalg.norm(vals[lag:] - vals[:-lag], axis=1)
        i = int(np.argmax(diff))
        ratio = float(diff[i]) / (lag * h) ** beta
        if ratio > best:
            best = ratio
            best_pair = (i, i + lag)
    return best, HolderReport(l_est=best, argmax_pair=best_pair, beta=beta)


def neumann_affine_solve(
    kt: KernelTable, linmap, xi, f0, terms: int = 64
) -> GridFunction:
    """Series solution of D f = xi + M f, f(0) = f0, for a d x d matrix M.

    Accumulates K^k b with K g = I[M g] and b = f0 + U(t) xi, stopping
    early when the terms are negligible; emits a divergence warning when
    term norms stop decreasing after the third power (horizon too long for
    this spectral radius).
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    f0 = np.atleast_1d(np.asarray(f0, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = f0.shape[0]
    M = np.atleast_2d(np.asarray(linmap, dtype=float))
    if M.shape != (d, d) or xi.shape != (d,):
        raise ValueError("linmap must be (d, d) and xi length d")

    b = f0[None, :] + kt.U_node[:, None] * xi[None, :]
    acc = b.copy()
    term = b
    norms = [float(np.linalg.norm(term, axis=1).max())]
    warned = False
    for k in range(1, terms):
        term = _frac_integral_values(kt.u_cell, term @ M.T)
        acc += term
        norms.append(float(np.linalg.norm(term, axis=1).max()))
        if k > 3 and norms[-1] >= norms[-2] and not warned:
            warnings.warn(
                f"affine series terms stopped decreasing at power {k} "
                f"({norms[-2]:.3e} -> {norms[-1]:.3e}); horizon too long for "
                "this operator norm",
                stacklevel=2,
            )
            warned = True
        if norms[-1] <= 1e-15 * float(np.linalg.norm(acc, axis=1).max()):
            break
    return GridFunction(kt.grid, acc)


def estimate_lipschitz(
    rhs: Callable, dim: int, R: float, horizon: float, n_samples: int = 256, seed: int = 0
) -> float:
    """Heuristic state-Lipschitz estimate by sampled difference quotients.

    This is a sampling lower bound, not a certified constant: pad it
    before feeding solver metadata.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_samples):
        t = float(rng.uniform(0.0, horizon))
        x = rng.uniform(-R, R, size=dim)
        y = x + rng.normal(scale=1e-4 * max(R, 1.0), size=dim)
        dx = float(np.linalg.norm(x - y))
        if dx == 0.0:
            continue
        q = float(np.linalg.norm(np.asarray(rhs(t, x)) - np.asarray(rhs(t, y)))) / dx
        best = max(best, q)
    return best
