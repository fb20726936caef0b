"""Command-line front door.

Every command writes CSV curves, a JSON report that lists every resolved
setting (no silent defaults), and a manifest whose hash covers the full
configuration minus the timestamp; identical manifests reproduce
byte-identical CSV bodies.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bernstein import load_phi_config, parse_phi_spec, validate_bernstein
from .errors import NumericalError
from .grids import Grid
from .gronwall import (
    GronwallInstance,
    check_instance,
    run_random_harness,
)
from .kernels import build_kernel_table, kernel_table_to_csv
from .laplace import parse_ilt_spec
from .mc import (
    McConfig,
    estimate_moments,
    estimate_phi_exp_mc,
    estimate_potential_mc,
    laplace_exponent_check,
)
from .phiexp import (
    convolution_powers,
    phi_exp_laplace_curve,
    phi_exp_series_curve,
    suggest_power_count,
)
from .problems import load_problem_file, read_kv_file
from .solver import solve_to_horizon, verify_holder

_CATALOG_HELP = {
    "stable": ("stable:ALPHA", "phi(x) = x^a, closed-form kernels, envelope exponent a"),
    "tempered": ("tempered:ALPHA,THETA", "phi(x) = (x+th)^a - th^a, inverted kernels"),
    "mixture": ("mixture:W@A+W@A", "phi(x) = sum w_i x^(a_i), inverted kernels"),
}


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _phi_from_arg(spec: str):
    """Catalog spec (stable:0.5, ...) or config:PATH for a key-value file."""
    if spec.startswith("config:"):
        return load_phi_config(spec.partition(":")[2])
    return parse_phi_spec(spec)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else _fmt(cell) for cell in row))
            fh.write("\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _manifest(out: Path, command: str, config: dict, seed=None) -> dict:
    # the output directory has no bearing on the numbers produced
    hashed = {k: v for k, v in config.items() if k != "out"}
    body = json.dumps(hashed, sort_keys=True, default=str)
    manifest = {
        "command": command,
        "config_hash": hashlib.sha256(body.encode()).hexdigest(),
        "phi_spec": config.get("phi"),
        "grid": {"T": config.get("T"), "N": config.get("N")},
        "seed": seed,
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    _write_json(out / f"{command}_manifest.json", manifest)
    return manifest


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -----------------------------------------------------------------


def cmd_catalog(args) -> int:
    if args.phi:
        phi = _phi_from_arg(args.phi)
        info = phi.describe()
        for key in sorted(info):
            print(f"{key:>22}: {info[key]}")
        report = validate_bernstein(phi, [0.5, 1.0, 2.0, 4.0], order=3)
        print(f"{'sign spot-check':>22}: {'ok' if report.ok else report.violations}")
        return 0
    print(f"{'kind':<10} {'spec':<22} description")
    for kind, (spec, desc) in _CATALOG_HELP.items():
        print(f"{kind:<10} {spec:<22} {desc}")
    return 0


def cmd_kernels(args) -> int:
    out = _outdir(args)
    phi = _phi_from_arg(args.phi)
    cfg = parse_ilt_spec(args.ilt)
    grid = Grid(args.T, args.N)
    kt = build_kernel_table(phi, grid, cfg)
    kernel_table_to_csv(kt, out / "kernels.csv")
    config = vars(args) | {"command": "kernels"}
    config.pop("func", None)
    report = {
        "config": config,
        "beta": kt.beta,
        "c_assump": kt.c_assump,
        "c_fit": kt.c_fit,
        "c_env_U": kt.c_env_U,
        "U_at_T": kt.U_node[-1],
    }
    _write_json(out / "kernels_report.json", report)
    _manifest(out, "kernels", config)
    print(f"kernels: wrote {out / 'kernels.csv'} (c_fit={kt.c_fit:.6g})")
    return 0


def cmd_eigen(args) -> int:
    out = _outdir(args)
    phi = _phi_from_arg(args.phi)
    cfg = parse_ilt_spec(args.ilt)
    grid = Grid(args.T, args.N)
    lam = args.lam
    methods = ["series", "laplace", "mc"] if args.method == "all" else [args.method]

    columns = {}
    if "series" in methods:
        kt = build_kernel_table(phi, grid, cfg)
        k_need = suggest_power_count(kt, lam)
        cp = convolution_powers(kt, k_need)
        columns["series"] = phi_exp_series_curve(cp, lam)
    if "laplace" in methods:
        vals = np.empty(grid.cells + 1)
        vals[0] = 1.0
        vals[1:] = phi_exp_laplace_curve(phi, lam, grid.nodes[1:], cfg)
        columns["laplace"] = vals
    if "mc" in methods:
        mc_cfg = McConfig(
            phi=phi, n_paths=args.paths, dt=args.dt, t_max=args.T, seed=args.seed
        )
        from .mc import sample_inverse_values

        stride = max(1, grid.cells // 64)
        idx = np.arange(0, grid.cells + 1, stride)
        if idx[-1] != grid.cells:
            idx = np.append(idx, grid.cells)
        vals = np.full(grid.cells + 1, np.nan)
        vals[0] = 1.0
        L = sample_inverse_values(mc_cfg, grid.nodes[idx[1:]])
        vals[idx[1:]] = np.exp(lam * L).mean(axis=0)
        columns["mc"] = vals

    header = ["t"] + list(columns)
    names = list(columns)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            header.append(f"delta_{names[i]}_{names[j]}")
    rows = []
    for i, t in enumerate(grid.nodes):
        row = [t] + [columns[n][i] for n in names]
        for a in range(len(names)):
            for b in range(a + 1, len(names)):
                d = columns[names[a]][i] - columns[names[b]][i]
                row.append(d)
        rows.append(row)
    _write_csv(out / "eigen.csv", header, rows)

    config = vars(args) | {"command": "eigen"}
    config.pop("func", None)
    deltas = {}
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            d = columns[names[a]] - columns[names[b]]
            deltas[f"max_abs_delta_{names[a]}_{names[b]}"] = float(
                np.nanmax(np.abs(d))
            )
    report = {"config": config, "methods": names} | deltas
    _write_json(out / "eigen_report.json", report)
    _manifest(out, "eigen", config, seed=args.seed if "mc" in methods else None)
    print(f"eigen: wrote {out / 'eigen.csv'} with methods {names}")
    return 0


def cmd_solve(args) -> int:
    out = _outdir(args)
    phi = _phi_from_arg(args.phi)
    cfg = parse_ilt_spec(args.ilt)
    problem, radius, meta = load_problem_file(args.problem)
    grid = Grid(problem.horizon, args.N)
    kt = build_kernel_table(phi, grid, cfg)
    sol, states = solve_to_horizon(
        problem, kt, radius, tol=args.tol, max_iter=args.max_iter
    )
    l_est, _ = verify_holder(sol, kt.beta)

    header = ["t"] + [f"f{k}" for k in range(sol.dim)]
    rows = [[t, *sol.values[i]] for i, t in enumerate(sol.grid.nodes)]
    _write_csv(out / "solve.csv", header, rows)

    config = vars(args) | {"command": "solve", "problem_meta": meta}
    config.pop("func", None)
    report = {
        "config": config,
        "t_prime": states[0].t_prime,
        "bielecki_tau": states[0].bielecki_tau,
        "segments": len(states),
        "iterations": [s.iteration_count for s in states],
        "contraction_ratios": [s.contraction_ratio_estimates for s in states],
        "residual_sup": states[0].residual_sup,
        "holder_estimate": l_est,
    }
    _write_json(out / "solve_report.json", report)
    _manifest(out, "solve", config)
    print(
        f"solve: {len(states)} segment(s), T'={states[0].t_prime:.6g}, "
        f"holder L~{l_est:.4g}; wrote {out / 'solve.csv'}"
    )
    return 0


def cmd_gronwall(args) -> int:
    out = _outdir(args)
    phi = _phi_from_arg(args.phi)
    cfg = parse_ilt_spec(args.ilt)
    config = vars(args) | {"command": "gronwall"}
    config.pop("func", None)

    if args.instance:
        kv = read_kv_file(args.instance)
        horizon = float(kv.pop("t"))
        x = np.asarray([float(v) for v in kv.pop("x").split(",")])
        a = np.asarray([float(v) for v in kv.pop("a").split(",")])
        g = np.asarray([float(v) for v in kv.pop("g").split(",")])
        if kv:
            raise ValueError(f"unrecognized instance keys: {sorted(kv)}")
        grid = Grid(horizon, len(x) - 1)
        kt = build_kernel_table(phi, grid, cfg)
        cp = convolution_powers(kt, max(8, suggest_power_count(kt, float(g.max()))))
        inst = GronwallInstance.build(grid, x, a, g)
        rep = check_instance(inst, kt, cp)
        rows = [
            [t, inst.x.scalar()[i], rep.series[i], rep.ml[i], rep.slack[i]]
            for i, t in enumerate(grid.nodes)
        ]
        _write_csv(out / "gronwall.csv", ["t", "x", "series_bound", "ml_bound", "slack"], rows)
        verdict = {
            "config": config,
            "mode": "instance",
            "certificate_ok": rep.certificate_ok,
            "ok_series": rep.ok_series,
            "ok_order": rep.ok_order,
            "ok_monotone": rep.ok_monotone,
            "ok": rep.ok,
        }
        _write_json(out / "gronwall_report.json", verdict)
        _manifest(out, "gronwall", config)
        print(f"gronwall: instance ok={rep.ok}")
        return 0 if rep.ok else 1

    grid = Grid(args.T, args.N)
    kt = build_kernel_table(phi, grid, cfg)
    cp = convolution_powers(kt, max(8, suggest_power_count(kt, 1.5)))
    rep = run_random_harness(kt, cp, args.seeds, master_seed=args.seed)
    rows = [
        [
            rep.n_instances,
            rep.n_certificate_failures,
            rep.n_series_violations,
            rep.n_order_violations,
            rep.n_monotone_violations,
            rep.worst_series_margin,
            rep.worst_order_margin,
        ]
    ]
    _write_csv(
        out / "gronwall.csv",
        [
            "instances",
            "certificate_failures",
            "series_violations",
            "order_violations",
            "monotone_violations",
            "worst_series_margin",
            "worst_order_margin",
        ],
        rows,
    )
    verdict = {"config": config, "mode": "random", "ok": rep.ok, "instances": rep.n_instances}
    _write_json(out / "gronwall_report.json", verdict)
    _manifest(out, "gronwall", config, seed=args.seed)
    print(f"gronwall: {rep.n_instances} instances, ok={rep.ok}")
    return 0 if rep.ok else 1


def cmd_mc(args) -> int:
    out = _outdir(args)
    phi = _phi_from_arg(args.phi)
    kind, _, params = args.estimate.partition(":")
    kind = kind.lower()
    cfg = McConfig(
        phi=phi, n_paths=args.paths, dt=args.dt, t_max=args.tmax, seed=args.seed
    )
    rows, header = [], ["quantity", "value", "std_error"]
    if kind == "u":
        t = float(params) if params else cfg.t_max
        est = estimate_potential_mc(cfg, t)
        rows.append([f"U({t:g})", est.value, est.std_error])
    elif kind == "phiexp":
        lam_s, _, t_s = params.partition(",")
        lam = float(lam_s)
        t = float(t_s) if t_s else cfg.t_max
        est = estimate_phi_exp_mc(cfg, lam, t)
        rows.append([f"e({t:g};{lam:g})", est.value, est.std_error])
    elif kind == "moments":
        k_s, _, t_s = params.partition(",")
        k_max = int(k_s)
        t = float(t_s) if t_s else cfg.t_max
        for k, est in enumerate(estimate_moments(cfg, t, k_max)):
            rows.append([f"E[L^{k}({t:g})]/{k}!", est.value, est.std_error])
    elif kind == "laplace":
        lams = [float(x) for x in params.split(",") if x]
        header = ["quantity", "value", "std_error", "target"]
        for row in laplace_exponent_check(cfg, lams):
            rows.append(
                [
                    f"E[exp(-{row['lam']:g} sigma(dt))]",
                    row["empirical"],
                    row["std_error"],
                    row["target"],
                ]
            )
    else:
        raise ValueError(f"unknown estimate kind {kind!r} (use U|phiexp|moments|laplace)")

    _write_csv(out / "mc.csv", header, rows)
    config = vars(args) | {"command": "mc"}
    config.pop("func", None)
    _write_json(out / "mc_report.json", {"config": config, "rows": len(rows)})
    _manifest(out, "mc", config, seed=args.seed)
    print(f"mc: wrote {out / 'mc.csv'} ({len(rows)} row(s))")
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genfrac",
        description="kernels, solvers, eigenfunctions, bounds and Monte Carlo "
        "for memory-derivative Cauchy problems",
    )
    parser.add_argument("--version", action="version", version=f"genfrac {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    out_default = os.environ.get("GENFRAC_OUT", ".")

    def common(p, grid=True):
        p.add_argument(
            "--phi", required=True,
            help="e.g. stable:0.5, tempered:0.5,1.0, mixture:0.3@0.4+0.7@0.8, "
            "or config:FILE",
        )
        p.add_argument("--ilt", default="gs:16", help="inversion method, gs:ORDER or talbot:NODES")
        p.add_argument("--out", default=out_default,
                       help="output directory (default $GENFRAC_OUT or .)")
        if grid:
            p.add_argument("--T", type=float, default=1.0, help="time horizon")
            p.add_argument("--N", type=int, default=1024, help="grid cells")

    p = sub.add_parser("catalog", help="list catalog kinds or describe one")
    p.add_argument("--phi", default=None)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("kernels", help="tabulate kernels and export CSV")
    common(p)
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("eigen", help="evaluate the eigenfunction by one or all routes")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--method", choices=["series", "laplace", "mc", "all"], default="all")
    p.add_argument("--paths", type=int, default=20000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("solve", help="solve a problem file by Picard marching")
    common(p)
    p.add_argument("--problem", required=True, help="key-value problem file")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gronwall", help="verify the bound chain on instances")
    common(p)
    p.add_argument("--instance", default=None, help="key-value instance file (t,x,a,g)")
    p.add_argument("--random", action="store_true", help="run the seeded random harness")
    p.add_argument("--seeds", type=int, default=100, help="number of random instances")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.set_defaults(func=cmd_gronwall)

    p = sub.add_parser("mc", help="Monte Carlo estimates from subordinator paths")
    p.add_argument("--phi", required=True)
    p.add_argument("--out", default=out_default)
    p.add_argument("--paths", type=int, default=100000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument(
        "--estimate",
        required=True,
        help="U[:t] | phiexp:LAM[,t] | moments:KMAX[,t] | laplace:LAM1,LAM2,...",
    )
    p.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
