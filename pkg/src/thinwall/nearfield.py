"""Near-field corner problems on the truncated perforated cone.

S_n is the harmonic field on the cone of opening Theta minus the row of
unit-spaced holes, with Neumann walls/holes and Dirichlet data on the
truncation arc given by the matched two-term macro behaviour
R^lambda_n w_{n,0} + R^(lambda_n - 1) w_{n,1}.  Because the cone is
connected through the hole row, the jumping second term is blended across
the layer before being imposed.  The quantity of interest is the
coefficient of the decaying mode R^(-lambda_m) w_{m,0} in S_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .corner import (AngularProfile, CornerFrame, SingularExponents,
                     jump_data, solve_angular_profile, w_base)
from .cutoff import make_cutoff
from .errors import ExtractionUnstable
from .geometry import build_cone_geometry
from .triangulate import GradingSpec, triangulate

__all__ = ["NearFieldSolution", "solve_S", "extract_L", "arc_data"]


def _piece_eval(piece, theta):
    _lo, _hi, amp, mu, ref = piece
    return amp * np.cos(mu * (np.asarray(theta, dtype=float) - ref))


def _layer_step(y, cut):
    """Smooth step s(y): 0 below the layer, 1 above, 1/2 inside it."""
    y = np.asarray(y, dtype=float)
    return 0.5 * (1.0 + np.sign(y) * cut.chi(y))


def blended_w1(w1: AngularProfile, theta, y, cut):
    """w_{n,1}(theta) with its slit jump smeared over the layer |y| < 2.

    Outside the layer this equals w_{n,1}; inside, the two cosine branches
    are interpolated by a smooth step in the transverse coordinate so the
    arc data stays continuous across the hole row.
    """
    if len(w1.pieces) == 1:
        return w1(theta)
    s = _layer_step(y, cut)
    up = _piece_eval(w1.pieces[0], theta)
    low = _piece_eval(w1.pieces[1], theta)
    return s * up + (1.0 - s) * low


def arc_data(n, frame: CornerFrame, w0: AngularProfile, w1: AngularProfile,
             cut, extra=None):
    """Dirichlet data callable (x, y) -> value on the truncation arc."""
    exps = SingularExponents(frame.theta)
    lam = exps.lambda_n(n)

    def data(x, y):
        r, th = frame.polar(x, y)
        out = r ** lam * w0(th) + r ** (lam - 1.0) * blended_w1(w1, th, y, cut)
        if extra is not None:
            out = out + extra(r, th)
        return out

    return data


@dataclass
class NearFieldSolution:
    side: str
    n: int
    Rmax: float
    theta: float
    field: fem.Field
    ell: dict = field(default_factory=dict)
    radial_residual: dict = field(default_factory=dict)
    log_coefficient: dict = field(default_factory=dict)
    ndof: int = 0

    def as_dict(self):
        return {
            "side": self.side,
            "n": self.n,
            "Rmax": self.Rmax,
            "ndof": self.ndof,
            "ell": {str(m): float(np.real(v)) for m, v in self.ell.items()},
            "radial_residual": {str(m): float(v)
                                for m, v in self.radial_residual.items()},
            "log_coefficient": {str(m): float(v)
                                for m, v in self.log_coefficient.items()},
        }


def solve_S(side, n, constants, hole, theta=1.5 * math.pi, Rmax=20.0,
            h0=0.45, degree=2, cutoff="exp", extra_arc=None,
            extract=True, modes=(0, 1, 2, 3)) -> NearFieldSolution:
    """Solve the cone problem for S_n and extract decaying-mode amplitudes.

    constants supplies the layer jump data (D1, D2, N2, N3); extra_arc, if
    given, is an (r, theta) -> value perturbation of the arc data used by
    synthetic-injection checks.
    """
    exps = SingularExponents(theta)
    lam_n = exps.lambda_n(n)
    frame = CornerFrame(side, 0.0, theta)
    cut = make_cutoff(cutoff)
    w0 = w_base(n, side, exps)
    jv, jd = jump_data(lam_n, side, constants)
    w1 = solve_angular_profile(n, 1, side, jv, jd, exps)

    geo = build_cone_geometry(side, theta, Rmax, hole)
    mesh = triangulate(geo, h0, GradingSpec(sigma=0.5, n_layers=6))
    space = fem.Space(mesh, degree)

    A = fem.stiffness(space)
    b = np.zeros(space.ndof, dtype=complex)
    cons = fem.Constraints(space)
    data = arc_data(n, frame, w0, w1, cut, extra=extra_arc)
    arc_dofs = np.unique(fem._edge_dof_rows(
        space, mesh.edges_with_tag("Truncation")))
    xy = space.dof_coords[arc_dofs]
    vals = data(xy[:, 0], xy[:, 1])
    for d, v in zip(arc_dofs, vals):
        cons.dirichlet(d, v)
    u = fem.solve(A, b, cons)
    sol = NearFieldSolution(side=side, n=n, Rmax=Rmax, theta=theta,
                            field=fem.Field(space, u), ndof=space.ndof)
    if extract:
        ell, res, logc = extract_L(sol.field, frame, n, w0, w1, Rmax,
                                   modes=modes)
        sol.ell, sol.radial_residual, sol.log_coefficient = ell, res, logc
        lead = max(abs(v) for v in ell.values())
        for m in modes:
            if abs(ell[m]) > 1e-3 * lead and res[m] > 0.1:
                raise ExtractionUnstable(
                    f"radial fit of mode {m} has relative residual {res[m]:.3f}")
    return sol


def _window_panels(frame: CornerFrame, R, exclude):
    """Angular Gauss panels at radius R avoiding the layer strip |y| <= exclude."""
    a, b = frame.interval
    a0 = math.asin(min(0.999, exclude / R))
    cuts = [a]
    for c in (0.0, math.pi):
        for e in (c - a0, c + a0):
            if a < e < b:
                cuts.append(e)
    cuts.append(b)
    cuts = sorted(cuts)
    xg, wg = np.polynomial.legendre.leggauss(24)
    panels = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        if abs(R * math.sin(mid)) <= exclude:
            continue
        panels.append((0.5 * (lo + hi) + 0.5 * (hi - lo) * xg,
                       0.5 * (hi - lo) * wg))
    return panels


def extract_L(u, frame: CornerFrame, n, w0, w1, Rmax,
              modes=(0, 1, 2, 3), exclude=3.0, n_radii=8):
    """Amplitudes of the decaying sector modes inside the matching window.

    At each radius in (Rmax/4, Rmax/2) the residual of u against the known
    growing behaviour is projected (windowed least squares, layer strip
    excluded) onto the sector modes; each coefficient track c_m(R) is then
    fit with decaying + growing radial powers, the growing column absorbing
    arc-truncation reflection.  A second fit with an R^(-lambda) log R
    column reports the spurious-log diagnostic.
    """
    exps = SingularExponents(frame.theta)
    lam_n = exps.lambda_n(n)
    radii = np.linspace(Rmax / 4.0, Rmax / 2.0, n_radii)
    profs = {m: (w_base(m, frame.side, exps) if m > 0 else None)
             for m in modes}
    cx, cy = frame.corner
    evaluate = u.evaluate if hasattr(u, "evaluate") else u

    coeff = {m: [] for m in modes}
    for R in radii:
        panels = _window_panels(frame, R, exclude)
        thetas = np.concatenate([p[0] for p in panels])
        wts = np.concatenate([p[1] for p in panels])
        pts = np.column_stack([cx + R * np.cos(thetas),
                               cy + R * np.sin(thetas)])
        vals = evaluate(pts)
        resid = vals - (R ** lam_n * w0(thetas)
                        + R ** (lam_n - 1.0) * w1(thetas))
        cols = []
        for m in modes:
            cols.append(np.ones_like(thetas) if m == 0
                        else np.real(profs[m](thetas)))
        Amat = np.column_stack(cols) * np.sqrt(wts)[:, None]
        rhs = resid * np.sqrt(wts)
        c, *_ = np.linalg.lstsq(Amat, rhs, rcond=None)
        for i, m in enumerate(modes):
            coeff[m].append(c[i])

    ell, res_rel, log_rel = {}, {}, {}
    lnR = np.log(radii)
    for m in modes:
        cm = np.array(coeff[m])
        lam = exps.lambda_n(m)
        # decaying target power plus a growing power absorbing the
        # reflection of the truncated arc data
        if m == 0:
            B = np.column_stack([np.ones_like(radii), radii ** exps.lam])
            logcol = lnR
        else:
            B = np.column_stack([radii ** (-lam), radii ** lam])
            logcol = radii ** (-lam) * lnR
        c, *_ = np.linalg.lstsq(B, cm, rcond=None)
        clog, *_ = np.linalg.lstsq(np.column_stack([B, logcol]), cm,
                                   rcond=None)
        scale = max(float(np.max(np.abs(cm))), 1e-300)
        ell[m] = complex(c[0])
        res_rel[m] = float(np.linalg.norm(B @ c - cm)
                           / (math.sqrt(len(radii)) * scale))
        log_rel[m] = float(abs(clog[-1]) / max(abs(clog[0]), 1e-300))
    return ell, res_rel, log_rel
