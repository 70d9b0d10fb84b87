"""Command-line front end.

Commands: solve, minimize, check, limit, geomverify. Every run writes
``report.json`` (schema 1) into ``--out``; exit codes are 0 success,
2 no convergence, 3 infeasible domain, 4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import hgeom
from .conditions import classify_domain, serrin_check
from .errors import DomainError, HeisPmcError, InfeasibleDomainError, InvalidParameter
from .expr import ExpressionError, parse_expression
from .grid import GridDomain, ScalarField, read_field_csv, write_field_csv
from .solve import (
    PmcProblem,
    SolverConfig,
    flux_identity_defect,
    minimize_penalized,
    pmc_residual,
    solve_dirichlet,
)
from .subriem import EpsSchedule, eps_continuation

EXIT_OK, EXIT_NO_CONVERGENCE, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 2, 3, 4
SCHEMA = 1


class ConfigError(Exception):
    pass


def _number(text, what):
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{what}: cannot parse number {text!r}") from None


def _field(spec, domain, what):
    """Constant, expression over (x, y, r), or ``csv:path`` / ``*.csv``."""
    s = str(spec).strip()
    if s.startswith("csv:") or s.endswith(".csv"):
        path = s[4:] if s.startswith("csv:") else s
        if not os.path.isfile(path):
            raise ConfigError(f"{what}: file not found: {path}")
        try:
            return read_field_csv(path, domain)
        except ValueError as exc:
            raise ConfigError(f"{what}: {exc}") from None
    try:
        f = parse_expression(s)
    except ExpressionError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    try:
        return ScalarField.from_function(domain, f)
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, arrays become lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _write_report(out, payload):
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_parser():
    p = argparse.ArgumentParser(prog="heispmc", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["solve", "minimize", "check", "limit", "geomverify"])
    p.add_argument("--domain", default="disk:1", help="disk:r | disk:cx,cy,r | rect:x0,y0,x1,y1 | square[:s] | polygon:x,y;...")
    p.add_argument("--H", dest="H", default="0", help="constant, expression in x,y,r, or csv:path")
    p.add_argument("--phi", default="0", help="boundary datum, same grammar as --H")
    p.add_argument("--eps", default="1")
    p.add_argument("--mode", default="heisenberg", choices=list(hgeom.MODES))
    p.add_argument("--h", dest="h", default="1/64", help="grid spacing, e.g. 0.01 or 1/128")
    p.add_argument("--out", default="heispmc-out")
    p.add_argument("--tol", default=None, help="residual (solve), gap (minimize), extremal (check) or difference (limit) tolerance")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--schedule", default=None, help="comma-separated decreasing eps values (limit)")
    p.add_argument("--margins", default=None, help="comma-separated erosion margins as inradius fractions (limit)")
    return p


def _config(args):
    cfg = SolverConfig()
    if args.tol is not None:
        tol = _number(args.tol, "--tol")
        if args.command == "solve":
            cfg.tol_residual = tol
        elif args.command == "minimize":
            cfg.pd_gap_tol = tol
    if args.max_iter is not None:
        if args.max_iter < 1:
            raise ConfigError("--max-iter must be positive")
        cfg.max_newton = args.max_iter
        cfg.max_pd = args.max_iter
    return cfg


def _residual_dump(path, u, problem):
    R = pmc_residual(u, problem)
    write_field_csv(path, R, problem.domain, cells=problem.domain.interior)


def _run(args, out):
    h = _number(args.h, "--h")
    eps = _number(args.eps, "--eps")
    if args.command != "check" and eps == 0:
        raise ConfigError("--eps must be nonzero")
    try:
        domain = GridDomain.build(args.domain, h)
    except DomainError as exc:
        raise ConfigError(f"--domain: {exc}") from None
    H = _field(args.H, domain, "--H")
    phi = _field(args.phi, domain, "--phi")
    config = {
        "command": args.command,
        "domain": domain.describe(),
        "H": args.H,
        "phi": args.phi,
        "eps": eps,
        "mode": args.mode,
        "h": h,
    }
    payload = {"schema": SCHEMA, "config": config, "error": None}

    if args.command == "check":
        tol = _number(args.tol, "--tol") if args.tol is not None else None
        rep = classify_domain(domain, H, tol=tol)
        payload["result"] = rep.to_dict()
        payload["serrin"] = {
            "strict": serrin_check(domain, H, True).to_dict(),
            "non_strict": serrin_check(domain, H, False).to_dict(),
        }
        return payload, EXIT_OK

    try:
        problem = PmcProblem(domain, H, phi, eps, args.mode)
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None
    cfg = _config(args)

    if args.command in ("solve", "minimize"):
        fn = solve_dirichlet if args.command == "solve" else minimize_penalized
        u, rep = fn(problem, cfg)
        write_field_csv(os.path.join(out, "u.csv"), u.values, domain)
        if args.command == "solve":
            _residual_dump(os.path.join(out, "residual.csv"), u, problem)
        payload["result"] = rep.to_dict()
        if not rep.converged:
            payload["error"] = "no-convergence"
            return payload, EXIT_NO_CONVERGENCE
        return payload, EXIT_OK

    if args.command == "limit":
        eps_list = EpsSchedule().eps_list if args.schedule is None else None
        try:
            if args.schedule is not None:
                eps_list = [_number(t, "--schedule") for t in args.schedule.split(",") if t.strip()]
            margins = None
            if args.margins is not None:
                margins = [_number(t, "--margins") for t in args.margins.split(",") if t.strip()]
            schedule = EpsSchedule(eps_list, margins, config=cfg)
        except InvalidParameter as exc:
            raise ConfigError(str(exc)) from None
        tol = _number(args.tol, "--tol") if args.tol is not None else 1e-6
        rep = eps_continuation(problem, schedule, tol=tol)
        with open(os.path.join(out, "steps.csv"), "w", encoding="ascii", newline="\n") as fh:
            fh.write("eps,energy_eps,energy_sub,du_max,grad_max\n")
            for s in rep.steps:
                fh.write(f"{s.eps:.17g},{s.energy_eps:.17g},{s.energy_sub:.17g},{s.du_max:.17g},{s.grad_max:.17g}\n")
        if rep.u is not None:
            write_field_csv(os.path.join(out, "u.csv"), rep.u.values, rep.u.domain)
        payload["result"] = rep.to_dict()
        if not all(s.converged for s in rep.steps) or len(rep.steps) < len(schedule.eps_list):
            payload["error"] = "no-convergence"
            return payload, EXIT_NO_CONVERGENCE
        return payload, EXIT_OK

    # geomverify
    u, rep = solve_dirichlet(problem, cfg)
    write_field_csv(os.path.join(out, "u.csv"), u.values, domain)
    payload["result"] = {"solve": rep.to_dict(), "checks": geometry_checks(u, problem)}
    if not rep.converged:
        payload["error"] = "no-convergence"
        return payload, EXIT_NO_CONVERGENCE
    return payload, EXIT_OK


def geometry_checks(u, problem):
    """Numerical checks of the curvature identities on a computed graph."""
    d = problem.domain
    geom = hgeom.GraphGeometry(u, problem.eps, problem.mode)
    nu = geom.normal
    ok = d.interior & np.all(np.isfinite(nu), axis=0)
    unit = float(np.max(np.abs(np.sum(nu**2, axis=0) - 1.0)[ok]))
    # second-derivative checks on a probe set away from the boundary layer
    dist = np.asarray(d.shape.distance_to_boundary(d.X, d.Y))
    probe = d.interior & (dist >= 0.25 * d.inradius)
    jac = np.where(probe, hgeom.jacobi_identity_residual(geom, problem.H.values), np.nan)
    ce = np.where(probe, hgeom.curvature_energy(geom), np.nan)
    n = 1
    basis = np.eye(2 * n + 1)
    ricci = {name: float(hgeom.ricci_form(basis[k], problem.eps, n)) for k, name in enumerate(["X1", "Y1", "epsT"])}
    flux = {}
    for frac in (0.1, 0.2):
        t = frac * d.inradius
        try:
            flux[f"{frac:g}"] = flux_identity_defect(u, problem, t)
        except (DomainError, HeisPmcError) as exc:
            flux[f"{frac:g}"] = str(exc)
    out = {
        "unit_normal_max_defect": unit,
        "jacobi_residual_max": float(np.nanmax(np.abs(jac))),
        "curvature_energy_range": [float(np.nanmin(ce)), float(np.nanmax(ce))],
        "ricci_frame": ricci,
        "flux_identity_defect": flux,
        "characteristic_cells": int(np.sum(geom.characteristic & d.inside)),
    }
    if problem.mode == "heisenberg":
        # non-characteristic part: |Du + X| bounded away from zero
        cells = probe & (geom.horizontal_speed >= 0.1)
        gap = hgeom.q_limit_gap(u, None, problem.eps, problem.mode, cells=cells)
        out["q_gap_max"] = float(np.nanmax(np.abs(gap))) if np.any(np.isfinite(gap)) else None
    return out


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out = args.out
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        print(f"heispmc: cannot create output directory {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    t0 = time.perf_counter()
    try:
        payload, code = _run(args, out)
    except (ConfigError, InvalidParameter, DomainError) as exc:
        payload, code = {"schema": SCHEMA, "error": "config", "message": str(exc)}, EXIT_CONFIG
    except InfeasibleDomainError as exc:
        payload, code = {"schema": SCHEMA, "error": "infeasible", "message": str(exc)}, EXIT_INFEASIBLE
    payload.setdefault("config", {k: v for k, v in sorted(vars(args).items()) if k != "out"})
    _write_report(out, payload)
    # wall-clock goes to a separate log so report.json stays reproducible
    with open(os.path.join(out, "run.log"), "w", encoding="utf-8") as fh:
        fh.write(f"command={args.command} exit={code} seconds={time.perf_counter() - t0:.3f}\n")
    if payload.get("error"):
        print(f"heispmc: {payload['error']}: {payload.get('message', '')}".rstrip(": "), file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
