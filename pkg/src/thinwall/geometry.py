"""Parametric construction of every meshed domain.

A GeometrySpec is a planar straight-line graph: one outer loop, optional
hole loops (with carve seeds), and optional internal constraint chains
(the slit interface).  All curved pieces (disk holes, truncation arcs) are
already polygonized here; the triangulator only ever sees straight segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HoleCollision, NonIntegerPeriod
from .params import DomainParams, HoleSpec

__all__ = [
    "GeometrySpec",
    "build_limit_domain",
    "build_perforated_domain",
    "build_cell_geometry",
    "build_cone_geometry",
]


@dataclass
class GeometrySpec:
    """Outer loop + hole loops + internal chains, with boundary tags.

    loops: list of (points (n,2), tags list of n) - edge i joins point i to
    point (i+1) mod n.  The first loop is the outer boundary; the rest are
    holes, each with a seed point in hole_seeds.
    chains: list of (points (n,2), tag) - open internal constraint chains;
    slit chains are doubled into node-disjoint copies after triangulation.
    size_hints: list of (center, radius, h_local) - local sizing overrides.
    """

    loops: list
    hole_seeds: list = field(default_factory=list)
    chains: list = field(default_factory=list)
    slit: bool = False
    corner_vertices: list = field(default_factory=list)
    size_hints: list = field(default_factory=list)
    periodic_x: tuple | None = None  # (x_left, x_right) for periodic tagging

    def bbox(self):
        pts = np.vstack([p for p, _ in self.loops])
        return pts.min(axis=0), pts.max(axis=0)


def _rect_loop(x0, x1, y0, y1, tags):
    """Rectangle loop, CCW from (x0,y0); tags = (bottom, right, top, left)."""
    pts = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    return pts, [tags[0], tags[1], tags[2], tags[3]]


def _chamber_wall_points(p: DomainParams):
    """Lower chamber corners: wall foot points at depth Hp for each side.

    The wall leaves the corner (L, 0) in the direction (cos theta, sin theta)
    (sin theta < 0) and reaches depth -Hp at x = L - Hp cos(theta)/sin(theta).
    """
    xb_plus = p.L - p.Hp * math.cos(p.theta) / math.sin(p.theta)
    return -xb_plus, xb_plus


def _outline(p: DomainParams):
    """Outer loop of the limit/perforated domain, CCW, with tags."""
    xb_m, xb_p = _chamber_wall_points(p)
    pts = [
        (-p.Lp, 0.0),
        (-p.L, 0.0),
        (xb_m, -p.Hp),
        (xb_p, -p.Hp),
        (p.L, 0.0),
        (p.Lp, 0.0),
        (p.Lp, p.H),
        (-p.Lp, p.H),
    ]
    tags = ["GammaN"] * 5 + ["GammaR_plus", "GammaN", "GammaR_minus"]
    return np.array(pts), tags


def build_limit_domain(p: DomainParams) -> GeometrySpec:
    """Domain with the interface represented as an internal slit chain."""
    pts, tags = _outline(p)
    chain = np.array([[-p.L, 0.0], [p.L, 0.0]])
    return GeometrySpec(
        loops=[(pts, tags)],
        chains=[(chain, "GammaInterface_top")],
        slit=True,
        corner_vertices=[(-p.L, 0.0), (p.L, 0.0)],
    )


def build_perforated_domain(p: DomainParams, delta: float) -> GeometrySpec:
    """The physical domain with q = 2L/delta scaled holes along the layer."""
    q_real = 2.0 * p.L / delta
    q = round(q_real)
    if q < 1 or abs(q_real - q) > 1e-9 * q:
        raise NonIntegerPeriod(f"2L/delta = {q_real} is not a positive integer")
    if delta >= min(p.H, p.Hp):
        raise HoleCollision(f"delta = {delta} too large for the domain")
    pts, tags = _outline(p)
    geo = GeometrySpec(
        loops=[(pts, tags)],
        corner_vertices=[(-p.L, 0.0), (p.L, 0.0)],
    )
    if p.hole.is_empty:
        return geo
    canon = p.hole.polygon()
    for ell in range(q):
        poly = np.column_stack([
            -p.L + delta * (ell + canon[:, 0]),
            delta * canon[:, 1],
        ])
        if poly[:, 1].min() <= -p.Hp + 1e-12 or poly[:, 1].max() >= p.H - 1e-12:
            raise HoleCollision(f"hole {ell} leaves the domain vertically")
        if poly[:, 0].min() <= -p.Lp + 1e-12 or poly[:, 0].max() >= p.Lp - 1e-12:
            raise HoleCollision(f"hole {ell} leaves the domain horizontally")
        # chamber walls can slant inward for theta < 3 pi / 2
        if not _clears_chamber_walls(p, poly):
            raise HoleCollision(f"hole {ell} crosses a chamber wall")
        geo.loops.append((poly, ["GammaHole"] * len(poly)))
        seed = poly.mean(axis=0)
        geo.hole_seeds.append(tuple(seed))
        h_loc = float(np.max(np.linalg.norm(np.roll(poly, -1, 0) - poly, axis=1)))
        rad = 0.5 * float(np.max(poly[:, 0]) - np.min(poly[:, 0]))
        geo.size_hints.append((tuple(seed), 3.0 * rad + 2 * h_loc, h_loc))
    return geo


def _clears_chamber_walls(p: DomainParams, poly: np.ndarray) -> bool:
    """Check every polygon vertex lies on the domain side of both walls."""
    ct, st = math.cos(p.theta), math.sin(p.theta)
    walls = (
        ((p.L, 0.0), (ct, st), (st, -ct)),      # corner +, inward normal
        ((-p.L, 0.0), (-ct, st), (-st, -ct)),   # corner -, mirrored
    )
    for corner, _d, nrm in walls:
        rel = poly - np.asarray(corner)
        below = poly[:, 1] < 1e-15
        if np.any(below & (rel @ np.asarray(nrm) < 1e-12)):
            return False
    return True


def build_cell_geometry(h: HoleSpec, T: float) -> GeometrySpec:
    """Periodicity cell (0,1) x (-T,T) minus the canonical hole."""
    if T < 4:
        raise ValueError("cell truncation must satisfy T >= 4")
    h.validate_in_cell()
    pts, tags = _rect_loop(0.0, 1.0, -T, T,
                           ("Truncation", "Periodic_right", "Truncation", "Periodic_left"))
    geo = GeometrySpec(loops=[(pts, tags)], periodic_x=(0.0, 1.0))
    if not h.is_empty:
        poly = h.polygon()
        geo.loops.append((poly, ["GammaHole"] * len(poly)))
        geo.hole_seeds.append(tuple(poly.mean(axis=0)))
        edge = float(np.max(np.linalg.norm(np.roll(poly, -1, 0) - poly, axis=1)))
        rad = 0.5 * float(poly[:, 0].max() - poly[:, 0].min())
        geo.size_hints.append((tuple(poly.mean(axis=0)), 3.0 * rad, edge))
    return geo


def build_cone_geometry(side: str, theta: float, Rmax: float,
                        hole: HoleSpec | None = None,
                        arc_step: float = 0.02) -> GeometrySpec:
    """Truncated perforated cone for the near-field problems.

    side 'plus': sector angles (0, theta), holes on the negative X1 axis.
    side 'minus': sector angles (pi - theta, pi), holes on the positive axis.
    """
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    if Rmax < 20:
        raise ValueError("Rmax >= 20 required")
    a, b = (0.0, theta) if side == "plus" else (math.pi - theta, math.pi)
    n_arc = max(64, int(math.ceil((b - a) / arc_step)))
    ang = np.linspace(a, b, n_arc + 1)
    arc = Rmax * np.column_stack([np.cos(ang), np.sin(ang)])
    pts = np.vstack([[0.0, 0.0], arc])
    tags = ["GammaN"] + ["Truncation"] * n_arc + ["GammaN"]
    geo = GeometrySpec(loops=[(pts, tags)], corner_vertices=[(0.0, 0.0)])
    if hole is not None and not hole.is_empty:
        canon = hole.polygon()
        for ell in range(1, int(math.floor(Rmax)) + 1):
            if side == "plus":
                poly = np.column_stack([canon[:, 0] - ell, canon[:, 1]])
            else:
                poly = np.column_stack([canon[:, 0] + (ell - 1), canon[:, 1]])
            if np.max(np.hypot(poly[:, 0], poly[:, 1])) >= Rmax - 0.3:
                continue
            if np.min(np.hypot(poly[:, 0], poly[:, 1])) <= 0.3:
                continue
            geo.loops.append((poly, ["GammaHole"] * len(poly)))
            seed = poly.mean(axis=0)
            geo.hole_seeds.append(tuple(seed))
            edge = float(np.max(np.linalg.norm(np.roll(poly, -1, 0) - poly, axis=1)))
            rad = 0.5 * float(poly[:, 0].max() - poly[:, 0].min())
            geo.size_hints.append((tuple(seed), 3.0 * rad, edge))
    return geo
