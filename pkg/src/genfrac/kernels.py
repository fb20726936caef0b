"""Kernel tables and the memory-integral / memory-derivative operators.

The potential density u(t) of a special Bernstein function is integrable
but typically unbounded at 0 (u(t) <= C t^(beta-1)).  All quadrature here
is product integration: the singular factor is integrated exactly over
each grid cell, the smooth factor is represented by its cell average, so
u itself is never evaluated.

Cell masses:

* ``u_cell[j]  = int_{t_j}^{t_{j+1}} u(s) ds   = U(t_{j+1}) - U(t_j)``
* ``nu_cell[j] = int_{t_j}^{t_{j+1}} nubar(s) ds`` (integrated jump tail)

U comes from closed forms (stable) or inversion of ``1/(z*phi(z))``; the
integrated tail from closed forms (stable, tempered, mixture) or
inversion of ``phi(z)/z**2``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bernstein import BernsteinFunction
from .errors import KernelConsistencyError
from .grids import Grid, GridFunction
from .laplace import DEFAULT_CONFIG, InversionConfig, invert_grid

__all__ = [
    "KernelTable",
    "build_kernel_table",
    "frac_integral",
    "caputo_derivative",
    "check_inversion_identity",
    "InversionIdentityReport",
    "kernel_table_to_csv",
    "kernel_table_from_csv",
]


@dataclass
class KernelTable:
    """Sampled kernels of one Bernstein function on one grid.

    Treated as immutable after construction.  ``c_fit`` is the tightest
    constant such that every cell mass of u is bounded by the matching
    cell mass of ``c_fit * t**(beta-1)``; ``c_env_U`` the analogous fit
    for ``U(t) <= c_env_U * t**beta``.  These fitted envelopes, not the
    catalog's a-priori ``c_assump``, feed every tail certificate downstream.
    """

    grid: Grid
    u_cell: np.ndarray  # shape (N,)   cell masses W_j of the potential density
    U_node: np.ndarray  # shape (N+1,) potential distribution at nodes
    nu_tail_node: np.ndarray  # shape (N+1,) jump tail at nodes; [0] = inf
    nu_cell: np.ndarray  # shape (N,)   integrated jump tail per cell
    beta: float
    c_assump: float
    c_fit: float
    c_env_U: float
    phi: Optional[BernsteinFunction] = None

    def restrict(self, cells: int) -> "KernelTable":
        """Table over the first ``cells`` cells (same step)."""
        g = self.grid.prefix(cells)
        return KernelTable(
            g,
            self.u_cell[:cells],
            self.U_node[: cells + 1],
            self.nu_tail_node[: cells + 1],
            self.nu_cell[:cells],
            self.beta,
            self.c_assump,
            self.c_fit,
            self.c_env_U,
            self.phi,
        )


def build_kernel_table(
    phi: BernsteinFunction,
    grid: Grid,
    cfg: InversionConfig = DEFAULT_CONFIG,
) -> KernelTable:
    """Materialize u-cell masses, U, and the integrated jump tail."""
    if phi.a != 0.0 or phi.b != 0.0 or not phi.levy_mass_infinite:
        raise ValueError(
            "kernel tables need a driftless, kill-free phi with infinite jump mass"
        )
    if grid.cells < 2:
        raise ValueError("kernel tables need at least 2 cells")
    t = grid.nodes

    U_closed = phi.potential_closed_form(t[1:])
    if U_closed is not None:
        U = np.concatenate(([0.0], U_closed))
    else:
        transform = lambda z: 1.0 / (z * phi.phi(z))  # noqa: E731
        U = np.concatenate(([0.0], invert_grid(transform, t[1:], cfg)))

    W = np.diff(U)
    floor = -max(1e-12, 1e-8 * float(np.max(np.abs(W), initial=0.0)))
    if float(W.min()) < floor:
        raise KernelConsistencyError(
            f"negative u-cell mass {W.min():.3e} below tolerance {floor:.1e}"
        )
    W = np.maximum(W, 0.0)

    tail_int = phi.levy_tail_integral(t[1:])
    if tail_int is not None:
        Ntail = np.concatenate(([0.0], np.asarray(tail_int, dtype=float)))
    else:
        transform = lambda z: phi.phi(z) / z ** 2  # noqa: E731
        Ntail = np.concatenate(([0.0], invert_grid(transform, t[1:], cfg)))
    V = np.diff(Ntail)
    if float(V.min()) < floor:
        raise KernelConsistencyError(
            f"negative tail-cell mass {V.min():.3e} below tolerance {floor:.1e}"
        )
    V = np.maximum(V, 0.0)

    nubar = np.empty(grid.cells + 1)
    nubar[0] = np.inf  # the tail may diverge at 0; never evaluated there
    nubar[1:] = phi.levy_tail(t[1:])

    beta = phi.beta
    cell_pow = np.diff(t ** beta) / beta  # cell masses of t**(beta-1)
    c_fit = float(np.max(W / cell_pow))
    c_env_U = float(np.max(U[1:] / t[1:] ** beta))

    # empirical check of the declared short-time envelope on (0, t0]
    early = t[1:] <= phi.t0
    if np.any(early):
        c_early = float(np.max((W / cell_pow)[early]))
        if c_early > 1.05 * phi.c_assump:
            warnings.warn(
                f"fitted kernel envelope {c_early:.4g} on (0, t0] exceeds the "
                f"declared c_assump {phi.c_assump:.4g}; envelope metadata "
                "looks too optimistic",
                stacklevel=2,
            )

    return KernelTable(
        grid=grid,
        u_cell=W,
        U_node=U,
        nu_tail_node=nubar,
        nu_cell=V,
        beta=beta,
        c_assump=phi.c_assump,
        c_fit=c_fit,
        c_env_U=c_env_U,
        phi=phi,
    )


# -- operators ---------------------------------------------------------------


def _conv_prefix(kernel: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """(kernel * cells)[i-1] for i = 1..N, i.e. sum_{j<i} kernel[i-1-j]*cells[j]."""
    n = len(cells)
    if cells.ndim == 1:
        return np.convolve(kernel[:n], cells)[:n]
    out = np.empty((n, cells.shape[1]))
    for k in range(cells.shape[1]):
        out[:, k] = np.convolve(kernel[:n], cells[:, k])[:n]
    return out


def _frac_integral_values(u_cell: np.ndarray, values: np.ndarray) -> np.ndarray:
    avg = 0.5 * (values[:-1] + values[1:])
    out = np.zeros_like(values)
    out[1:] = _conv_prefix(u_cell, avg)
    return out


def _caputo_values(nu_cell: np.ndarray, values: np.ndarray, step: float) -> np.ndarray:
    slope = np.diff(values, axis=0) / step
    out = np.zeros_like(values)
    out[1:] = _conv_prefix(nu_cell, slope)
    out[0] = out[1]  # one-sided endpoint; the operator is only defined a.e.
    return out


def _require_same_grid(kt: KernelTable, f: GridFunction) -> None:
    if f.grid != kt.grid:
        raise ValueError(f"grid mismatch: table {kt.grid!r} vs function {f.grid!r}")


def frac_integral(kt: KernelTable, f: GridFunction) -> GridFunction:
    """Memory integral (I f)(t_i) = int_0^{t_i} u(t_i - s) f(s) ds.

    Product integration: exact u-cell masses against trapezoid cell
    averages of f; result[0] = 0.
    """
    _require_same_grid(kt, f)
    return GridFunction(f.grid, _frac_integral_values(kt.u_cell, f.values))


def caputo_derivative(
    kt: KernelTable, f: GridFunction, nu_cell: Optional[np.ndarray] = None
) -> GridFunction:
    """Memory derivative via the absolutely-continuous form.

    (D f)(t_i) ~= sum_{j<i} nu_cell[i-1-j] * (f_{j+1} - f_j)/h, i.e. the
    integrated jump tail against per-cell difference quotients.  The value
    at t=0 is reported as the first interior value.  Accurate away from a
    short initial boundary layer; for inputs with U-like roughness at 0
    the first few nodes overshoot by design of the difference quotient.
    """
    _require_same_grid(kt, f)
    cells = kt.nu_cell if nu_cell is None else np.asarray(nu_cell, dtype=float)
    if cells.shape != (kt.grid.cells,):
        raise ValueError(
            f"nu_cell must have shape ({kt.grid.cells},), got {cells.shape}"
        )
    return GridFunction(f.grid, _caputo_values(cells, f.values, kt.grid.step))


@dataclass
class InversionIdentityReport:
    """Sup-norm discrepancies of the two operator compositions.

    ``err_int_deriv``  : || I(D f) - (f - f(0)) ||_inf        (clean identity)
    ``err_deriv_int``  : || D(I f) - (f - f(0)) ||_inf        (includes the
    constant offset |f(0)| whenever f(0) != 0, because the
    derivative-after-integral composition reproduces f itself)
    ``*_interior`` variants take the sup over t >= interior_frac * T only.
    """

    err_int_deriv: float
    err_deriv_int: float
    err_int_deriv_interior: float
    err_deriv_int_interior: float
    interior_frac: float


def check_inversion_identity(
    kt: KernelTable, f: GridFunction, interior_frac: float = 0.05
) -> InversionIdentityReport:
    _require_same_grid(kt, f)
    base = f.values - f.values[0]
    a = _frac_integral_values(kt.u_cell, _caputo_values(kt.nu_cell, f.values, kt.grid.step))
    b = _caputo_values(kt.nu_cell, _frac_integral_values(kt.u_cell, f.values), kt.grid.step)
    err_a = np.linalg.norm(a - base, axis=1)
    err_b = np.linalg.norm(b - base, axis=1)
    mask = kt.grid.nodes >= interior_frac * kt.grid.horizon
    return InversionIdentityReport(
        err_int_deriv=float(err_a.max()),
        err_deriv_int=float(err_b.max()),
        err_int_deriv_interior=float(err_a[mask].max()),
        err_deriv_int_interior=float(err_b[mask].max()),
        interior_frac=interior_frac,
    )


# -- CSV goldens --------------------------------------------------------------

_CSV_FIELDS = ("i", "t", "u_cell", "U", "nu_tail_integrated")


def kernel_table_to_csv(kt: KernelTable, path) -> None:
    """Write the table as CSV; node rows carry the cell quantities of the
    cell starting at that node (blank on the last row)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(
            f"# beta={float(kt.beta):.17g} c_assump={float(kt.c_assump):.17g} "
            f"c_fit={float(kt.c_fit):.17g} c_env_U={float(kt.c_env_U):.17g}\n"
        )
        writer = csv.writer(fh)
        writer.writerow(_CSV_FIELDS)
        n = kt.grid.cells
        for i, t in enumerate(kt.grid.nodes):
            w = format(kt.u_cell[i], ".17g") if i < n else ""
            v = format(kt.nu_cell[i], ".17g") if i < n else ""
            writer.writerow([i, format(t, ".17g"), w, format(kt.U_node[i], ".17g"), v])


def kernel_table_from_csv(path, phi: Optional[BernsteinFunction] = None) -> KernelTable:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("kernel CSV must start with a parameter comment line")
        params = dict(tok.split("=") for tok in header[1:].split())
        rows = list(csv.DictReader(fh))
    n = len(rows) - 1
    t = np.array([float(r["t"]) for r in rows])
    grid = Grid(t[-1], n)
    U = np.array([float(r["U"]) for r in rows])
    W = np.array([float(r["u_cell"]) for r in rows[:-1]])
    V = np.array([float(r["nu_tail_integrated"]) for r in rows[:-1]])
    beta = float(params["beta"])
    nubar = np.empty(n + 1)
    nubar[0] = np.inf
    if phi is not None:
        nubar[1:] = phi.levy_tail(grid.nodes[1:])
    else:
        nubar[1:] = V / grid.step  # cell-average stand-in when phi is absent
    return KernelTable(
        grid=grid,
        u_cell=W,
        U_node=U,
        nu_tail_node=nubar,
        nu_cell=V,
        beta=beta,
        c_assump=float(params["c_assump"]),
        c_fit=float(params["c_fit"]),
        c_env_U=float(params["c_env_U"]),
        phi=phi,
    )
