"""Command-line front end.

Subcommands:
  cell-constants   effective layer constants of the periodicity cell
  nearfield        corner problem on the perforated cone + mode amplitudes
  solve-exact      direct reference solve of the perforated domain
  cascade          build the macroscopic expansion terms and store them
  study            full period sweep, error table, slopes, acceptance checks

Study configs are flat "key = value" text files (see configs/study.cfg);
the exit code of `study` is 0 iff every `check_*` window in the config is
satisfied by the fitted slopes.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .cell import build_cell, compute_constants
from .cascade import build_expansion
from .exact import solve_exact
from .harness import StudyConfig, emit_outputs, run_study
from .nearfield import solve_S
from .params import DomainParams, HoleSpec

__all__ = ["main", "parse_config"]


def parse_config(path):
    """Flat key = value file -> dict of strings; '#' starts a comment."""
    out = {}
    with open(path) as f:
        for ln, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected 'key = value'")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def _floats(s):
    return tuple(float(_eval_number(v)) for v in s.split(",") if v.strip())


def _eval_number(s):
    """Float literal, fraction 'a/b', or multiples of pi like '5*pi'."""
    s = s.strip()
    if "pi" in s:
        s = s.replace("pi", repr(math.pi))
        head, _, tail = s.partition("*")
        return float(head) * float(tail) if tail else float(s)
    if "/" in s:
        num, den = s.split("/")
        return float(num) / float(den)
    return float(s)


def _params_from(cfg: dict) -> DomainParams:
    kw = {}
    for key in ("L", "Lp", "H", "Hp"):
        if key in cfg:
            kw[key] = float(cfg[key])
    if "theta" in cfg:
        kw["theta"] = _eval_number(cfg["theta"])
    if "k0" in cfg:
        kw["k0"] = _eval_number(cfg["k0"])
    if "hole_radius" in cfg:
        r = float(cfg["hole_radius"])
        kw["hole"] = (HoleSpec(kind="none") if r == 0.0
                      else HoleSpec(kind="disk", center=(0.5, 0.0), radius=r))
    return DomainParams(**kw)


def _study_config(cfg: dict) -> StudyConfig:
    kw = {"params": _params_from(cfg)}
    if "deltas" in cfg:
        kw["deltas"] = _floats(cfg["deltas"])
    simple = {"alpha": float, "exact_h0": float, "exact_degree": int,
              "limit_h0": float, "limit_degree": int, "cell_T": float,
              "cell_h0": float, "cell_degree": int, "nf_Rmax": float,
              "nf_h0": float, "nf_degree": int, "cutoff": str,
              "exact_max_dofs": int}
    for key, cast in simple.items():
        if key in cfg:
            kw[key] = cast(cfg[key])
    return StudyConfig(**kw)


def _acceptance_checks(cfg: dict, report):
    """Evaluate every check_<slope> = lo,hi window; returns (lines, ok)."""
    lines, ok = [], True
    for key, val in sorted(cfg.items()):
        if not key.startswith("check_"):
            continue
        name = key[len("check_"):]
        lo, hi = _floats(val)
        if name not in report.slopes:
            lines.append(f"FAIL {name}: no fitted slope")
            ok = False
            continue
        s = report.slopes[name][0]
        good = lo <= s <= hi
        ok = ok and good
        lines.append(f"{'PASS' if good else 'FAIL'} {name}: slope {s:.3f} "
                     f"target [{lo:.2f}, {hi:.2f}]")
    return lines, ok


def cmd_cell_constants(args):
    p = _params_from(parse_config(args.config) if args.config else {})
    cell = build_cell(p.hole, T=args.T, h0=args.h0, degree=args.degree,
                      cutoff=args.cutoff)
    constants = compute_constants(cell, p.k0, khat=p.khat)
    print(json.dumps({k: [v.real, v.imag] if isinstance(v, complex) else v
                      for k, v in constants.as_dict().items()}, indent=2))
    return 0


def cmd_nearfield(args):
    p = _params_from(parse_config(args.config) if args.config else {})
    cell = build_cell(p.hole, T=args.T, h0=args.cell_h0, degree=3,
                      cutoff=args.cutoff)
    constants = compute_constants(cell, p.k0, khat=p.khat)
    sol = solve_S(args.side, args.n, constants, p.hole, theta=p.theta,
                  Rmax=args.rmax, h0=args.h0, degree=args.degree,
                  cutoff=args.cutoff)
    print(json.dumps(sol.as_dict(), indent=2))
    return 0


def cmd_solve_exact(args):
    p = _params_from(parse_config(args.config) if args.config else {})
    res = solve_exact(p, args.delta, h0=args.h0, degree=args.degree,
                      max_dofs=args.max_dofs)
    print(f"ndof {res.ndof}  residual {res.residual:.3e}  "
          f"flux-balance defect {res.flux_balance():.3e}")
    if args.out:
        space = res.field.space
        np.savez_compressed(args.out, nodes=space.mesh.nodes,
                            elements=space.mesh.elements,
                            degree=res.degree, delta=res.delta,
                            coeffs=res.field.coeffs)
        print(f"wrote {args.out}")
    return 0


def cmd_cascade(args):
    cfg = parse_config(args.config) if args.config else {}
    p = _params_from(cfg)
    scfg = _study_config(cfg)
    cell = build_cell(p.hole, T=scfg.cell_T, h0=scfg.cell_h0,
                      degree=scfg.cell_degree, cutoff=scfg.cutoff)
    constants = compute_constants(cell, p.k0, khat=p.khat)
    L_minus_1 = {}
    for side in ("plus", "minus"):
        nf = solve_S(side, 1, constants, p.hole, theta=p.theta,
                     Rmax=scfg.nf_Rmax, h0=scfg.nf_h0, degree=scfg.nf_degree,
                     cutoff=scfg.cutoff)
        L_minus_1[side] = nf.ell[1]
    exp = build_expansion(p, constants, L_minus_1, h0=scfg.limit_h0,
                          degree=scfg.limit_degree, cutoff=scfg.cutoff)
    space = exp.u00.space
    payload = {
        "nodes": space.mesh.nodes, "elements": space.mesh.elements,
        "degree": scfg.limit_degree,
        "u00": exp.u00.coeffs, "u01_hat": exp.u01.hat.coeffs,
        "u20_hat": exp.u20.hat.coeffs,
        "constants": np.array([[k, repr(v)] for k, v in
                               constants.as_dict().items()]),
        "corner_ell_plus": np.array([exp.corners["plus"].ell[m]
                                     for m in range(4)]),
        "corner_ell_minus": np.array([exp.corners["minus"].ell[m]
                                      for m in range(4)]),
        "L_minus_1": np.array([L_minus_1["plus"], L_minus_1["minus"]]),
        "u20_lift_coeffs": np.array([exp.u20.coefficients["plus"],
                                     exp.u20.coefficients["minus"]]),
    }
    np.savez_compressed(args.out, **payload)
    print(f"wrote {args.out} ({space.ndof} dofs per field)")
    return 0


def cmd_study(args):
    cfg = parse_config(args.config)
    scfg = _study_config(cfg)
    rep = run_study(scfg)
    os.makedirs(args.out, exist_ok=True)
    csv_path = emit_outputs(rep, args.out)
    print(f"wrote {csv_path}")
    lines, ok = _acceptance_checks(cfg, rep)
    for line in lines:
        print(line)
    return 0 if ok else 1


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="thinwall",
        description="Second-order expansion of wave transmission through a "
                    "thin perforated wall, with a direct-solve harness.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cell-constants", help="effective layer constants")
    c.add_argument("--config")
    c.add_argument("--T", type=float, default=6.0)
    c.add_argument("--h0", type=float, default=0.06)
    c.add_argument("--degree", type=int, default=3)
    c.add_argument("--cutoff", default="exp")
    c.set_defaults(fn=cmd_cell_constants)

    c = sub.add_parser("nearfield", help="perforated-cone corner problem")
    c.add_argument("--config")
    c.add_argument("--side", choices=("plus", "minus"), default="plus")
    c.add_argument("--n", type=int, default=1)
    c.add_argument("--rmax", type=float, default=20.0)
    c.add_argument("--h0", type=float, default=0.45)
    c.add_argument("--degree", type=int, default=2)
    c.add_argument("--T", type=float, default=6.0)
    c.add_argument("--cell-h0", type=float, default=0.06)
    c.add_argument("--cutoff", default="exp")
    c.set_defaults(fn=cmd_nearfield)

    c = sub.add_parser("solve-exact", help="direct perforated-domain solve")
    c.add_argument("--config")
    c.add_argument("--delta", type=float, required=True)
    c.add_argument("--h0", type=float, default=0.05)
    c.add_argument("--degree", type=int, default=3)
    c.add_argument("--max-dofs", type=int, default=800_000)
    c.add_argument("--out")
    c.set_defaults(fn=cmd_solve_exact)

    c = sub.add_parser("cascade", help="build + store the expansion terms")
    c.add_argument("--config")
    c.add_argument("--out", required=True)
    c.set_defaults(fn=cmd_cascade)

    c = sub.add_parser("study", help="period sweep + slopes + checks")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=cmd_study)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
