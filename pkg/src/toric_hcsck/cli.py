"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 not solvable / domain
exceeded, 3 Futaki obstruction, 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, siegel
from .errors import ConfigError, DomainExceeded, FutakiObstruction, NotConvex, NotSolvable, ToricError
from .config import RunConfig, load_config
from .operator import DeformationHessian, PotentialField, divergence_fd, evaluate
from .basis import GalerkinBasis
from .solver import solution_field, solve
from .stability import uniform_scan
from .verify import oracle_comparison, oracle_tolerance, run_suites

log = logging.getLogger("toric_hcsck")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_SOLVABLE = 2
EXIT_FUTAKI = 3
EXIT_CHECK_FAILED = 4

CSV_HELP = """\
solve writes <out>/solve_field.csv with one row per interior sample point:
  x1[,x2]        coordinates of the point
  u              symplectic potential u = u_G + correction
  det_G          determinant of D^2 u
  scalar_fd      -(G^{-1})^{ab}_{,ab} by fourth-order finite differences
  lambda_max     largest eigenvalue of the Hermitian endomorphism N
  min_eig_T      smallest eigenvalue of the deformed tensor T
oracle1d writes <out>/oracle1d_samples.csv with columns y, oracle_u2, galerkin_u2.
Set TORIC_HCSCK_LOG to error, info or debug to control logging."""


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path: Path, payload: dict):
    payload = dict(payload)
    payload["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _schedule(cfg: RunConfig, t_steps):
    if t_steps is None:
        return cfg.t_schedule
    if t_steps < 1:
        raise ConfigError("--t-steps must be >= 1")
    return list(np.linspace(0.0, 1.0, t_steps + 1))


def _setup(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.degree is not None:
        cfg.degree = args.degree
    if args.out is not None:
        cfg.out = args.out
    cfg.t_schedule = _schedule(cfg, args.t_steps)
    cfg.validate()
    P = cfg.build_polytope()
    return cfg, P, cfg.build_deformation(P.dim), cfg.build_spectral(), cfg.build_affine(P)


def _solve_kwargs(cfg):
    return {"tol": cfg.tol, "t_schedule": cfg.t_schedule, "quad_order": cfg.quad_order, "max_newton": cfg.max_newton}


def sample_points(P, n_per_axis):
    """Interior grid points, kept at least 2% of the box away from the boundary."""
    lo, hi = P.bounding_box
    axes = [np.linspace(a, b, n_per_axis + 2)[1:-1] for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, P.dim)
    margin = 0.02 * float(np.min(hi - lo))
    return pts[P.distance_to_boundary(pts) > margin]


def field_rows(u: PotentialField, H, k, pts):
    G = u.hessian(pts)
    tb = evaluate(G, H.at(pts), k, 1.0)
    scal = -divergence_fd(u, DeformationHessian.zero(u.P.dim), k, pts, scale=0.0)
    lam_max = tb.lam.max(axis=1) if tb.lam.size else np.zeros(len(pts))
    return [
        [*map(float, x), float(uu), float(d), float(s), float(lm), float(mt)]
        for x, uu, d, s, lm, mt in zip(pts, u.value(pts), np.linalg.det(G), scal, lam_max, tb.minT)
    ]


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


# ------------------------------------------------------------------ commands


def cmd_solve(args) -> int:
    """Solve the deformed equation and write a report and field samples."""
    cfg, P, H, k, A = _setup(args)
    out = Path(cfg.out)
    payload = {"command": "solve", "config": cfg.to_dict(), "A": A}
    basis = GalerkinBasis(P, cfg.degree)
    try:
        rep = solve(P, H, k, A, basis=basis, **_solve_kwargs(cfg))
    except FutakiObstruction as exc:
        payload.update(status="FUTAKI_OBSTRUCTION", message=str(exc), affine_pairings=exc.pairings)
        write_json(out / "solve_report.json", payload)
        print(f"Futaki obstruction: {exc}", file=sys.stderr)
        return EXIT_FUTAKI
    except NotSolvable as exc:
        payload.update(status="NOT_SOLVABLE", message=str(exc), report=exc.report.to_dict() if exc.report else None)
        write_json(out / "solve_report.json", payload)
        print(f"not solvable: {exc}", file=sys.stderr)
        return EXIT_NOT_SOLVABLE
    except (DomainExceeded, NotConvex) as exc:
        payload.update(status="DOMAIN_EXCEEDED", message=str(exc))
        write_json(out / "solve_report.json", payload)
        print(f"domain exceeded: {exc}", file=sys.stderr)
        return EXIT_NOT_SOLVABLE
    payload.update(status=rep.status, report=rep.to_dict())
    write_json(out / "solve_report.json", payload)
    u = solution_field(basis, rep)
    pts = sample_points(P, cfg.csv_points)
    coords = ["x1"] if P.dim == 1 else ["x1", "x2"]
    _write_csv(
        out / "solve_field.csv",
        coords + ["u", "det_G", "scalar_fd", "lambda_max", "min_eig_T"],
        field_rows(u, H, k, pts),
    )
    print(
        f"solved: {rep.iterations} Newton steps, residual {rep.residual_norm:.3e}, "
        f"lambda_max {rep.lambda_max:.4g}, min eig T {rep.min_eig_T:.4g}"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    """Run the structural invariant suites."""
    cfg, P, H, k, A = _setup(args)
    scale = float(cfg.verify.get("boundary_measure_scale", 1.0))
    suites = run_suites(
        P, H, k, A, degree=cfg.degree, seed=cfg.seed, boundary_scale=scale, oracle_mesh=cfg.oracle_mesh, **_solve_kwargs(cfg)
    )
    ok = all(s.passed for s in suites)
    write_json(
        Path(cfg.out) / "verify_report.json",
        {"command": "verify", "config": cfg.to_dict(), "passed": ok, "suites": [s.to_dict() for s in suites]},
    )
    for s in suites:
        extra = f" ({s.message})" if s.message else ""
        print(f"{'PASS' if s.passed else 'FAIL'} {s.name}: worst {s.worst:.3e} (tol {s.tolerance:.0e}){extra}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_stability(args) -> int:
    """Scan crease functions for the uniform stability ratio."""
    cfg, P, H, k, A = _setup(args)
    rep = uniform_scan(P, A, n_probes=cfg.n_probes, seed=cfg.seed, threads=cfg.threads)
    futaki = float(np.max(np.abs(rep.affine_pairings)))
    write_json(Path(cfg.out) / "stability_report.json", {"command": "stability", "config": cfg.to_dict(), **rep.to_dict()})
    print(f"A = {np.round(rep.A, 12).tolist()}, lambda_hat = {rep.lambda_hat:.6g}, max |L_A(affine)| = {futaki:.3e}")
    if futaki > 1e-8:
        return EXIT_FUTAKI
    return EXIT_OK if rep.lambda_hat > 0 else EXIT_CHECK_FAILED


def cmd_siegel(args) -> int:
    """Run the randomized Siegel-space battery."""
    cfg = load_config(args.config) if args.config else RunConfig()
    seed = cfg.seed if args.seed is None else args.seed
    threads = cfg.threads if args.threads is None else args.threads
    out = Path(args.out or cfg.out)
    if not 1 <= cfg.siegel_n <= siegel.MAX_N:
        raise ConfigError(f"siegel.n must be in 1..{siegel.MAX_N}")
    results = siegel.run_battery(cfg.siegel_n, cfg.siegel_trials, seed, threads)
    growth = siegel.hyperkahler_growth(n=cfg.siegel_n, seed=seed)
    ok = all(r.passed for r in results)
    write_json(
        out / "siegel_report.json",
        {
            "command": "siegel",
            "n": cfg.siegel_n,
            "trials": cfg.siegel_trials,
            "seed": seed,
            "passed": ok,
            "checks": [r.to_dict() for r in results],
            "hyperkahler_growth": growth,
        },
    )
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: worst {r.worst:.3e} (tol {r.tolerance:.0e})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_oracle1d(args) -> int:
    """Compare the Galerkin solution with the 1D oracle."""
    cfg, P, H, k, A = _setup(args)
    if P.dim != 1:
        raise ConfigError("oracle1d needs an interval")
    try:
        y, g, gal, rep = oracle_comparison(P, H, k, A, cfg.degree, cfg.oracle_mesh, **_solve_kwargs(cfg))
    except FutakiObstruction as exc:
        print(f"Futaki obstruction: {exc}", file=sys.stderr)
        return EXIT_FUTAKI
    except (NotSolvable, DomainExceeded) as exc:
        print(f"not solvable: {exc}", file=sys.stderr)
        return EXIT_NOT_SOLVABLE
    err = float(np.max(np.abs(gal - g)))
    tol = oracle_tolerance(cfg.degree)
    out = Path(cfg.out)
    write_json(
        out / "oracle1d_report.json",
        {"command": "oracle1d", "config": cfg.to_dict(), "sup_error": err, "tolerance": tol, "degree": cfg.degree, "mesh": cfg.oracle_mesh},
    )
    _write_csv(out / "oracle1d_samples.csv", ["y", "oracle_u2", "galerkin_u2"], zip(y, g, gal))
    print(f"sup |u''_galerkin - u''_oracle| = {err:.3e} (tol {tol:.0e})")
    return EXIT_OK if err <= tol else EXIT_CHECK_FAILED


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "stability": cmd_stability,
    "siegel": cmd_siegel,
    "oracle1d": cmd_oracle1d,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="toric-hcsck",
        description="Deformed toric Abreu equation: solve, verify, stability scan, Siegel battery.",
        epilog=CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        s = sub.add_parser(name, help=(fn.__doc__ or name).strip().splitlines()[0], epilog=CSV_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        s.add_argument("--config", metavar="PATH", help="TOML run configuration")
        s.add_argument("--out", metavar="DIR", help="output directory (default: out)")
        s.add_argument("--seed", type=int, help="master random seed")
        s.add_argument("--threads", type=int, help="worker threads for probe/trial loops")
        s.add_argument("--degree", type=int, help="override the basis degree")
        s.add_argument("--t-steps", type=int, dest="t_steps", help="use N equal continuity steps")
    return p



def _configure_logging():
    level = os.environ.get("TORIC_HCSCK_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToricError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
