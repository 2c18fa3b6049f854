"""Corner machinery: angular profiles, singular lifts, coefficient extraction.

Polar conventions.  At the right corner (L, 0) the angle theta+ is measured
counterclockwise from the outward interface-free half-axis, theta+ in
(0, Theta); the slit sits at theta+ = pi (top face: theta -> pi-, bottom
face: theta -> pi+).  At the left corner (-L, 0) the angle theta- runs in
(pi - Theta, pi); the slit sits at theta- = 0 (top face 0+, bottom 0-).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bessel import bessel_j, bessel_jy, bessel_j_array, bessel_y_array
from .errors import IllConditioned, IndexUnsupported, ResonantCase

__all__ = ["SingularExponents", "AngularProfile", "solve_angular_profile",
           "jump_data", "w_base", "CornerFrame", "LiftField", "build_lift_J",
           "build_lift_Y", "extract_ell"]


@dataclass(frozen=True)
class SingularExponents:
    theta: float

    def __post_init__(self):
        if not (math.pi < self.theta < 2 * math.pi):
            raise ValueError("opening angle must lie in (pi, 2 pi)")

    @property
    def lam(self):
        return math.pi / self.theta

    def lambda_n(self, n):
        return n * self.lam


@dataclass(frozen=True)
class CornerFrame:
    """Polar frame of one corner of the interface."""

    side: str           # "plus" | "minus"
    L: float
    theta: float        # opening angle

    @property
    def corner(self):
        return (self.L, 0.0) if self.side == "plus" else (-self.L, 0.0)

    @property
    def interval(self):
        return (0.0, self.theta) if self.side == "plus" \
            else (math.pi - self.theta, math.pi)

    @property
    def slit_angle(self):
        return math.pi if self.side == "plus" else 0.0

    def polar(self, x, y, bottom=None):
        """(r, theta) about the corner; 'bottom' resolves on-slit points."""
        cx, cy = self.corner
        dx = np.asarray(x, dtype=float) - cx
        dy = np.asarray(y, dtype=float) - cy
        r = np.hypot(dx, dy)
        th = np.arctan2(dy, dx)
        if self.side == "plus":
            th = np.mod(th, 2.0 * math.pi)
            if bottom is not None:
                on = (np.abs(dy) == 0.0) & (dx < 0)
                th = np.where(on, math.pi + (1e-9 if bottom else -1e-9), th)
        else:
            if bottom is not None:
                on = (np.abs(dy) == 0.0) & (dx > 0)
                th = np.where(on, (-1e-9 if bottom else 1e-9), th)
        return r, th


@dataclass
class AngularProfile:
    """Piecewise cosine profile w(theta) on the corner sector.

    pieces: list of (lo, hi, amplitude, mu, ref) meaning
    amplitude * cos(mu * (theta - ref)) for lo <= theta <= hi.
    """

    side: str
    pieces: list = field(default_factory=list)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=complex)
        hit = np.zeros(theta.shape, dtype=bool)
        for lo, hi, amp, mu, ref in self.pieces:
            m = (~hit) & (theta >= lo - 1e-13) & (theta <= hi + 1e-13)
            out[m] = amp * np.cos(mu * (theta[m] - ref))
            hit |= m
        return out

    def dtheta(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=complex)
        hit = np.zeros(theta.shape, dtype=bool)
        for lo, hi, amp, mu, ref in self.pieces:
            m = (~hit) & (theta >= lo - 1e-13) & (theta <= hi + 1e-13)
            out[m] = -amp * mu * np.sin(mu * (theta[m] - ref))
            hit |= m
        return out

    @property
    def is_zero(self):
        return all(abs(p[2]) < 1e-300 for p in self.pieces)


def w_base(n, side, exponents: SingularExponents) -> AngularProfile:
    """The continuous sector modes w_{n,0}: Neumann ends, no slit jump."""
    lam_n = exponents.lambda_n(n)
    th = exponents.theta
    if side == "plus":
        return AngularProfile(side, [(0.0, th, 1.0, lam_n, 0.0)])
    return AngularProfile(side, [(math.pi - th, math.pi, 1.0, lam_n, math.pi)])


def solve_angular_profile(n, q, side, jump_val, jump_der,
                          exponents: SingularExponents) -> AngularProfile:
    """Profile w_{n,q} with prescribed value/derivative jumps at the slit.

    The associated separated solution is r^(lambda_n - q) * w(theta); the
    two cosine pieces satisfy Neumann conditions at the sector ends, and the
    2x2 system matches [w] = jump_val and [w'] = jump_der at the slit
    (top minus bottom).
    """
    if q not in (0, 1):
        raise IndexUnsupported("only q in {0, 1} profiles are supported")
    if q == 0:
        return w_base(n, side, exponents)
    th = exponents.theta
    mu = exponents.lambda_n(n) - 1.0
    det_ang = math.sin(mu * th)
    if abs(mu) < 1e-12 or abs(det_ang) < 1e-10:
        raise ResonantCase(f"exponent {mu} resonates with the sector")
    cp, sp = math.cos(mu * math.pi), math.sin(mu * math.pi)
    cq = math.cos(mu * (math.pi - th))
    sq = math.sin(mu * (math.pi - th))
    if side == "plus":
        # up: A cos(mu t) on (0, pi); low: B cos(mu (t - Theta)) on (pi, Theta)
        M = np.array([[cp, -cq], [-mu * sp, mu * sq]])
        rhs = np.array([jump_val, jump_der], dtype=complex)
        A, B = np.linalg.solve(M, rhs)
        return AngularProfile(side, [(0.0, math.pi, A, mu, 0.0),
                                     (math.pi, th, B, mu, th)])
    # minus side: up A cos(mu (t - pi)) on (0, pi);
    # low B cos(mu (t - (pi - Theta))) on (pi - Theta, 0); slit at t = 0
    M = np.array([[cp, -math.cos(mu * (th - math.pi))],
                  [mu * sp, mu * math.sin(mu * (th - math.pi))]])
    rhs = np.array([jump_val, jump_der], dtype=complex)
    A, B = np.linalg.solve(M, rhs)
    return AngularProfile(side, [(0.0, math.pi, A, mu, math.pi),
                                 (math.pi - th, 0.0, B, mu, math.pi - th)])


def jump_data(lam_n, side, constants):
    """Slit jumps (value, theta-derivative) of w_{n,1} from the constants.

    Obtained by applying the effective transmission conditions to the
    separated mode r^lambda_n cos(lambda_n theta): the value jump feeds on
    D1, D2 and the normal-trace jump on N2, N3, with the x2-to-theta
    conversion absorbing a sign flip between the two corners.
    """
    c, s = math.cos(lam_n * math.pi), math.sin(lam_n * math.pi)
    sgn = 1.0 if side == "plus" else -1.0
    jump_val = lam_n * (-sgn * constants.D1 * c + constants.D2 * s)
    jump_der = -sgn * lam_n * (lam_n - 1.0) * (constants.N2 * c
                                               - sgn * constants.N3 * s)
    return jump_val, jump_der


class LiftField:
    """Cut-off radial-Bessel singular lift around one corner.

    value = coeff * chi_L(r) * Z_nu(k0 r) * w(theta) with Z = J or Y; the
    commutator load [Lap, chi_L] v is what the hat problems see.
    """

    def __init__(self, frame: CornerFrame, kind, nu, w: AngularProfile,
                 cut, L, k0, coeff=1.0):
        self.frame = frame
        self.kind = kind        # "J" | "Y"
        self.nu = float(nu)
        self.w = w
        self.cut = cut
        self.L = float(L)
        self.k0 = float(k0)
        self.coeff = complex(coeff)

    # radial cutoff chi_L = 1 - chi(2 r / L) and its r-derivatives
    def _chiL(self, r):
        s = 2.0 / self.L
        t = s * np.asarray(r, dtype=float)
        return (1.0 - self.cut.chi(t),
                -s * self.cut.dchi(t),
                -s * s * self.cut.d2chi(t))

    def _bessel(self, r):
        x = self.k0 * np.asarray(r, dtype=float)
        if self.kind == "J":
            return bessel_j_array(self.nu, x)
        return bessel_y_array(self.nu, x)

    def _bessel_deriv(self, r):
        x = self.k0 * np.asarray(r, dtype=float)
        if self.kind == "J":
            zm = bessel_j_array(self.nu - 1.0, x)
            zp = bessel_j_array(self.nu + 1.0, x)
        else:
            zm = bessel_y_array(self.nu - 1.0, x)
            zp = bessel_y_array(self.nu + 1.0, x)
        return 0.5 * (zm - zp)

    def value(self, x, y, bottom=None):
        r, th = self.frame.polar(x, y, bottom=bottom)
        out = np.zeros(np.shape(r), dtype=complex)
        act = (r < self.L) & (r > 0)
        if np.any(act):
            chi, _, _ = self._chiL(r[act])
            out[act] = (self.coeff * chi * self._bessel(r[act])
                        * self.w(th[act]))
        return out

    def uncut_value(self, x, y, bottom=None):
        r, th = self.frame.polar(x, y, bottom=bottom)
        return self.coeff * self._bessel(r) * self.w(th)

    def gradient(self, x, y, bottom=None):
        """Cartesian gradient of the cut lift (vectorized)."""
        r, th = self.frame.polar(x, y, bottom=bottom)
        out = np.zeros(np.shape(r) + (2,), dtype=complex)
        act = (r < self.L) & (r > 0)
        if not np.any(act):
            return out
        ra, tha = r[act], th[act]
        chi, dchi, _ = self._chiL(ra)
        Z = self._bessel(ra)
        dZ = self.k0 * self._bessel_deriv(ra)
        wv, dwv = self.w(tha), self.w.dtheta(tha)
        dr = self.coeff * (dchi * Z + chi * dZ) * wv
        dt = self.coeff * chi * Z * dwv / ra
        ct, st = np.cos(tha), np.sin(tha)
        out[act, 0] = dr * ct - dt * st
        out[act, 1] = dr * st + dt * ct
        return out

    def dx2_on_slit(self, x1, bottom):
        """Vertical derivative of the lift on the slit face.

        On the slit the x2 direction is purely angular: d/dx2 = -1/r d/dtheta
        at theta = pi (right corner) and +1/r d/dtheta at theta = 0 (left).
        """
        x1 = np.asarray(x1, dtype=float)
        r, th = self.frame.polar(x1, np.zeros_like(x1), bottom=bottom)
        out = np.zeros(x1.shape, dtype=complex)
        act = (r < self.L) & (r > 0)
        if not np.any(act):
            return out
        chi, _, _ = self._chiL(r[act])
        sgn = -1.0 if self.frame.side == "plus" else 1.0
        out[act] = (self.coeff * sgn * chi * self._bessel(r[act])
                    * self.w.dtheta(th[act]) / r[act])
        return out

    def commutator_load(self, x, y, bottom=None):
        """[Lap, chi_L] v = v Lap(chi_L) + 2 grad(chi_L) . grad(v)."""
        r, th = self.frame.polar(x, y, bottom=bottom)
        out = np.zeros(np.shape(r), dtype=complex)
        act = (r > 0.25 * self.L) & (r < self.L)
        if not np.any(act):
            return out
        ra, tha = r[act], th[act]
        chi, dchi, d2chi = self._chiL(ra)
        Z = self._bessel(ra)
        dZ = self.k0 * self._bessel_deriv(ra)
        wv = self.w(tha)
        lap_chi = d2chi + dchi / ra
        out[act] = self.coeff * wv * (Z * lap_chi + 2.0 * dchi * dZ)
        return out

    def near_corner_amplitude(self):
        """Leading small-r coefficient of the radial factor.

        J: (k0/2)^nu / Gamma(nu + 1) * r^nu
        Y: -(Gamma(nu)/pi) (k0/2)^(-nu) * r^(-nu)
        """
        if self.kind == "J":
            return (self.k0 / 2.0) ** self.nu / math.gamma(self.nu + 1.0)
        return -(math.gamma(self.nu) / math.pi) * (self.k0 / 2.0) ** (-self.nu)


def build_lift_J(frame: CornerFrame, w11: AngularProfile, cut, k0,
                 coeff=1.0) -> LiftField:
    """Singular lift J_{lambda_1 - 1}(k0 r) w_{1,1}(theta) with cutoff."""
    exps = SingularExponents(frame.theta)
    return LiftField(frame, "J", exps.lambda_n(1) - 1.0, w11, cut,
                     frame.L, k0, coeff)


def build_lift_Y(i, frame: CornerFrame, cut, k0, coeff=1.0) -> LiftField:
    """Decaying-mode lift Y_{lambda_i}(k0 r) w_{i,0}(theta) with cutoff."""
    if i not in (1, 2):
        raise IndexUnsupported("Y lifts available for i in {1, 2}")
    exps = SingularExponents(frame.theta)
    w = w_base(i, frame.side, exps)
    return LiftField(frame, "Y", exps.lambda_n(i), w, cut, frame.L, k0, coeff)


def extract_ell(evaluate, frame: CornerFrame, m, k0,
                radii=(0.1, 0.15, 0.2), n_theta=96, return_scatter=False):
    """Corner coefficient of J_{lambda_m}(k0 r) w_{m,0}(theta) in a field.

    evaluate(points, bottom) -> complex values; the angular projection is
    done on both slit branches (Gauss panels split at the slit), then each
    radius gives an estimate ell(r); radii near Bessel zeros are skipped and
    the rest combined by least squares.
    """
    exps = SingularExponents(frame.theta)
    lam_m = exps.lambda_n(m)
    th = exps.theta
    c_m = th if m == 0 else th / 2.0
    wm = w_base(m, frame.side, exps)
    a, b = frame.interval
    gamma = frame.slit_angle
    cx, cy = frame.corner

    # Gauss panels on (a, gamma) and (gamma, b), branch chosen per panel
    xg, wg = np.polynomial.legendre.leggauss(n_theta // 2)

    def panel(lo, hi):
        mid, hl = 0.5 * (hi + lo), 0.5 * (hi - lo)
        return mid + hl * xg, hl * wg

    if frame.side == "plus":
        panels = [(panel(a, gamma), False), (panel(gamma, b), True)]
    else:
        panels = [(panel(gamma, b), False), (panel(a, gamma), True)]

    vals = []
    used = []
    for r in radii:
        Jm = bessel_j(lam_m, k0 * r)
        if abs(Jm) <= 1e-8:
            continue
        proj = 0.0
        for (thetas, wts), bottom in panels:
            pts = np.column_stack([cx + r * np.cos(thetas),
                                   cy + r * np.sin(thetas)])
            u = evaluate(pts, bottom)
            proj = proj + np.sum(wts * u * wm(thetas))
        vals.append(proj / (c_m * Jm))
        used.append(r)
    if not vals:
        raise IllConditioned(
            f"all radii near zeros of J_{lam_m:.4f}(k0 r)")
    vals = np.array(vals)
    ell = np.mean(vals)
    scatter = float(np.max(np.abs(vals - ell)) / max(abs(ell), 1e-300))
    if return_scatter:
        return complex(ell), scatter, list(used)
    return complex(ell)
