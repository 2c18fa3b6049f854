"""Convergence study: sweep the layer period, measure expansion errors.

For every delta in the sweep, the perforated problem is solved directly and
the truncated macroscopic sums are evaluated at the quadrature points of
the reference mesh that lie outside the excluded strip around the wall;
the weighted point differences give the L2 (and H1-seminorm) errors whose
log-log slopes are the headline numbers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import fem
from .cascade import ExpansionSet, build_expansion
from .cell import build_cell, compute_constants
from .errors import DegenerateFit
from .exact import solve_exact
from .nearfield import solve_S
from .params import DomainParams
from .triangulate import GradingSpec

__all__ = ["StudyConfig", "ConvergenceReport", "run_study", "fit_slope",
           "emit_outputs", "read_report_csv"]

CSV_HEADER = "delta,dofs,e0,e1,e2,e3"


@dataclass
class StudyConfig:
    params: DomainParams = dc_field(default_factory=DomainParams)
    alpha: float = 0.25
    deltas: tuple = (1 / 8, 1 / 16, 1 / 32, 1 / 64)
    # reference (perforated) solves
    exact_h0: float = 0.05
    exact_degree: int = 3
    exact_grading: GradingSpec = dc_field(
        default_factory=lambda: GradingSpec(sigma=0.5, n_layers=8))
    # macroscopic cascade
    limit_h0: float = 0.04
    limit_degree: int = 3
    # cell problems
    cell_T: float = 6.0
    cell_h0: float = 0.06
    cell_degree: int = 3
    # near-field problems
    nf_Rmax: float = 20.0
    nf_h0: float = 0.45
    nf_degree: int = 2
    cutoff: str = "exp"
    # cap on the reference-system size; degree falls back to 2 above it
    exact_max_dofs: int = 800_000

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        for d in self.deltas:
            q = 2.0 * self.params.L / d
            if abs(q - round(q)) > 1e-9:
                raise ValueError(f"delta {d} does not divide the wall")


@dataclass
class ConvergenceReport:
    rows: list = dc_field(default_factory=list)  # (delta, dofs, e0..e3)
    rows_h1: list = dc_field(default_factory=list)
    slopes: dict = dc_field(default_factory=dict)
    constants: dict = dc_field(default_factory=dict)
    L_minus_1: dict = dc_field(default_factory=dict)
    walltimes: dict = dc_field(default_factory=dict)


def fit_slope(pairs):
    """Least-squares slope of ln(e) against ln(delta).

    Returns (slope, intercept, halfwidth) where halfwidth is the standard
    error of the slope times 2 (a rough confidence indicator).
    """
    pairs = [(float(d), float(e)) for d, e in pairs]
    if len(pairs) < 2:
        raise DegenerateFit("need at least two points")
    if any(d <= 0 or e <= 0 for d, e in pairs):
        raise DegenerateFit("slope fit needs positive data")
    x = np.log([d for d, _ in pairs])
    y = np.log([e for _, e in pairs])
    if np.ptp(x) < 1e-12:
        raise DegenerateFit("all abscissae coincide")
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    if len(pairs) > 2:
        sse = float(np.sum((A @ coef - y) ** 2))
        var = sse / (len(pairs) - 2) / float(np.sum((x - x.mean()) ** 2))
        half = 2.0 * math.sqrt(var)
    else:
        half = 0.0
    return slope, intercept, half


def _region_quadrature(space: fem.Space, p: DomainParams, alpha):
    """Quadrature points/weights of the mesh lying outside the wall strip."""
    pts, w = space.quad_global()
    keep = (np.abs(pts[:, 1]) >= alpha) | (np.abs(pts[:, 0]) >= p.L + alpha)
    return pts[keep], w[keep], keep


def errors_on_region(exact_result, expansion: ExpansionSet, alpha,
                     with_h1=True):
    """(L2 errors e0..e2, H1 errors) of the truncations against the
    reference field, measured outside the excluded strip."""
    space = exact_result.field.space
    p = exact_result.params
    delta = exact_result.delta
    pts, w, keep = _region_quadrature(space, p, alpha)
    u_ref = exact_result.field.values_at_own_quad()[keep]

    loc = expansion.u00.space.locate(pts)
    v00 = expansion.u00.evaluate(pts, loc=loc)
    v01 = expansion.u01.evaluate(pts, loc=loc)
    v20 = expansion.u20.evaluate(pts, loc=loc)
    lam2 = expansion.exponents.lambda_n(2)
    trunc = [v00,
             v00 + delta * v01,
             v00 + delta * v01 + delta ** lam2 * v20]
    l2 = [float(np.sqrt(np.sum(w * np.abs(u_ref - t) ** 2))) for t in trunc]
    if not with_h1:
        return l2, None
    g_ref = exact_result.field.grads_at_own_quad()[keep]
    g00 = expansion.u00.gradient(pts, loc=loc)
    g01 = expansion.u01.hat.gradient(pts, loc=loc)
    for lift in expansion.u01.lifts:
        g01 = g01 + lift.gradient(pts[:, 0], pts[:, 1])
    g20 = expansion.u20.hat.gradient(pts, loc=loc)
    for lift in expansion.u20.lifts:
        g20 = g20 + lift.gradient(pts[:, 0], pts[:, 1])
    gtr = [g00,
           g00 + delta * g01,
           g00 + delta * g01 + delta ** lam2 * g20]
    h1 = [float(np.sqrt(np.sum(w * np.abs(u_ref - t) ** 2)
                        + np.sum(w * np.sum(np.abs(g_ref - g) ** 2, axis=1))))
          for t, g in zip(trunc, gtr)]
    return l2, h1


def run_study(cfg: StudyConfig, log=print) -> ConvergenceReport:
    rep = ConvergenceReport()
    p = cfg.params
    t0 = time.time()

    cell = build_cell(p.hole, T=cfg.cell_T, h0=cfg.cell_h0,
                      degree=cfg.cell_degree, cutoff=cfg.cutoff)
    constants = compute_constants(cell, p.k0, khat=p.khat)
    rep.constants = constants.as_dict()
    rep.walltimes["cell"] = time.time() - t0
    log(f"[cell] constants {rep.constants}")

    t1 = time.time()
    L_minus_1 = {}
    for side in ("plus", "minus"):
        nf = solve_S(side, 1, constants, p.hole, theta=p.theta,
                     Rmax=cfg.nf_Rmax, h0=cfg.nf_h0, degree=cfg.nf_degree,
                     cutoff=cfg.cutoff)
        L_minus_1[side] = nf.ell[1]
        rep.L_minus_1[side] = complex(nf.ell[1])
        log(f"[nearfield] {side}: L_-1 = {nf.ell[1]:.6f}")
    rep.walltimes["nearfield"] = time.time() - t1

    t2 = time.time()
    expansion = build_expansion(p, constants, L_minus_1, h0=cfg.limit_h0,
                                degree=cfg.limit_degree, cutoff=cfg.cutoff)
    rep.walltimes["cascade"] = time.time() - t2
    log(f"[cascade] done in {rep.walltimes['cascade']:.1f}s, "
        f"{expansion.u00.space.ndof} dofs")

    for delta in cfg.deltas:
        td = time.time()
        res = solve_exact(p, delta, h0=cfg.exact_h0, degree=cfg.exact_degree,
                          grading=cfg.exact_grading,
                          max_dofs=cfg.exact_max_dofs)
        l2, h1 = errors_on_region(res, expansion, cfg.alpha)
        ndof = res.ndof
        del res  # free the factorization-sized field before the next solve
        # no third-order term at this opening angle: e3 repeats e2
        rep.rows.append((delta, ndof, l2[0], l2[1], l2[2], l2[2]))
        rep.rows_h1.append((delta, ndof, h1[0], h1[1], h1[2], h1[2]))
        rep.walltimes[f"delta={delta}"] = time.time() - td
        log(f"[study] delta=1/{round(1/delta)} dofs={ndof} "
            f"e0={l2[0]:.4e} e1={l2[1]:.4e} e2={l2[2]:.4e} "
            f"({rep.walltimes[f'delta={delta}']:.1f}s)")

    for i, name in enumerate(("e0", "e1", "e2")):
        pairs = [(r[0], r[2 + i]) for r in rep.rows]
        if len(pairs) >= 2:
            rep.slopes[name] = fit_slope(pairs)
        pairs_h1 = [(r[0], r[2 + i]) for r in rep.rows_h1]
        if len(pairs_h1) >= 2:
            rep.slopes[name + "_h1"] = fit_slope(pairs_h1)
    for name in ("e0", "e1", "e2"):
        if name in rep.slopes:
            s, _, hw = rep.slopes[name]
            log(f"[study] slope {name} = {s:.3f} (+/- {hw:.3f})")
    rep.walltimes["total"] = time.time() - t0
    return rep


def emit_outputs(rep: ConvergenceReport, outdir):
    """Write CSV, a plain-text table, and a gnuplot script."""
    import os
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, "report.csv")
    with open(csv_path, "w") as f:
        f.write(CSV_HEADER + "\n")
        for d, n, e0, e1, e2, e3 in rep.rows:
            f.write(f"{d:.12g},{n},{e0:.12e},{e1:.12e},{e2:.12e},{e3:.12e}\n")
    with open(os.path.join(outdir, "report.txt"), "w") as f:
        f.write(f"{'delta':>12} {'dofs':>9} {'e0':>12} {'e1':>12} "
                f"{'e2':>12}\n")
        for d, n, e0, e1, e2, _ in rep.rows:
            f.write(f"{d:12.6g} {n:9d} {e0:12.4e} {e1:12.4e} {e2:12.4e}\n")
        for name in ("e0", "e1", "e2"):
            if name in rep.slopes:
                s, b, hw = rep.slopes[name]
                f.write(f"slope {name}: {s:.4f} (+/- {hw:.4f})\n")
        if rep.constants:
            f.write(f"constants: {rep.constants}\n")
    with open(os.path.join(outdir, "plot.gp"), "w") as f:
        f.write("set logscale xy\nset xlabel 'delta'\nset ylabel "
                "'L2 error'\nset key left top\nset datafile separator ','\n"
                f"plot 'report.csv' skip 1 using 1:3 with linespoints "
                f"title 'order 0', \\\n"
                f"     '' skip 1 using 1:4 with linespoints "
                f"title 'order 1', \\\n"
                f"     '' skip 1 using 1:5 with linespoints "
                f"title 'order 2'\n")
    return csv_path


def read_report_csv(path):
    """Parse a study CSV back into rows (round-trip of emit_outputs)."""
    rows = []
    with open(path) as f:
        header = f.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for line in f:
            if not line.strip():
                continue
            d, n, e0, e1, e2, e3 = line.strip().split(",")
            rows.append((float(d), int(n), float(e0), float(e1),
                         float(e2), float(e3)))
    return rows
