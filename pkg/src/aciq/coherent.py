"""Rank-one weights built from a single state ``psi``.

States have the form ``psi(x) = exp(i mu arg x) g(|x|)`` with a real radial
profile ``g`` of compact support ``[r_lo, r_hi]`` inside the punctured
plane.  The associated weight and its partial Fourier transform are

    w_psi(q, p) = <U(q, p) psi | psi> / |q|
                = |q|^-2 int d^2x  exp(-i p.x)  psi(x) conj(psi(x / q)),
    hat_psi(q, x) = 2 pi |q|^-2 psi(-x) conj(psi(-x / q)),

so that ``Omega(q) = 2 pi |q|^-2 int d^2x / x^2 psi(x) conj(psi(x / q))``
and ``Omega(1) = 2 pi <Q^-2>``.  Inner products are antilinear in the first
slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .gauge import GaugeData, flux, scalar_strength, check_gauge_condition
from .moments import E1, build_moment_table
from .quadrature import Tail, integrate_log_polar
from .sim2 import PlaneVector
from .weights import Decay, _pointwise

NORM_RESCALE_TOL = 1e-3


class GaussianRing:
    """``g(r) = N exp(-(r - c)^2 / (2 w^2))`` truncated to ``|r - c| <= cut * w``.

    The truncation keeps ``g`` away from the origin, where any nonzero value
    would make ``<Q^-2>`` diverge; at ``cut = 8`` the discarded amplitude is
    below ``exp(-32)`` of the peak.  ``N`` normalizes ``2 pi int g^2 r dr`` to 1.
    """

    kind = "gaussian_ring"

    def __init__(self, center: float, width: float, cut: float = 8.0):
        if not (center > 0 and width > 0):
            raise DomainError("ring needs center > 0 and width > 0")
        if center - cut * width <= 0:
            raise DomainError(
                f"ring of width {width} around {center} reaches the origin; "
                f"<Q^-2> would diverge (need center > {cut} * width)"
            )
        self.center = float(center)
        self.width = float(width)
        self.cut = float(cut)
        self.scale = 1.0
        self.scale = 1.0 / math.sqrt(_radial_integral(lambda r: self(r) ** 2 * r ** 2,
                                                      self.support))

    @property
    def support(self):
        return (self.center - self.cut * self.width, self.center + self.cut * self.width)

    def _inside(self, r):
        lo, hi = self.support
        return (r >= lo) & (r <= hi)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        z = (r - self.center) / self.width
        return np.where(self._inside(r), self.scale * np.exp(-0.5 * z * z), 0.0)

    def d1(self, r):
        r = np.asarray(r, dtype=float)
        return -(r - self.center) / self.width ** 2 * self(r)

    def d2(self, r):
        r = np.asarray(r, dtype=float)
        z = (r - self.center) / self.width
        return (z * z - 1.0) / self.width ** 2 * self(r)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": self.center, "width": self.width}


class TabulatedRadial:
    """Cubic-spline radial profile through samples ``(r_i, g_i)``.

    The profile is taken as zero outside ``[r_0, r_last]``; the end samples
    should vanish for the derivatives to be meaningful.
    """

    kind = "tabulated"

    def __init__(self, r, values):
        from scipy.interpolate import CubicSpline

        r = np.asarray(r, dtype=float)
        values = np.asarray(values, dtype=float)
        if r.size < 4 or np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise DomainError("tabulated profile needs >= 4 increasing radii > 0")
        self._r = r
        self._v = values
        self._spline = CubicSpline(r, values)
        self.scale = 1.0

    @property
    def support(self):
        return (float(self._r[0]), float(self._r[-1]))

    @property
    def center(self):
        i = int(np.argmax(np.abs(self._v)))
        return float(self._r[i])

    def _eval(self, r, nu):
        r = np.asarray(r, dtype=float)
        lo, hi = self.support
        inside = (r >= lo) & (r <= hi)
        return np.where(inside, self.scale * self._spline(np.clip(r, lo, hi), nu), 0.0)

    def __call__(self, r):
        return self._eval(r, 0)

    def d1(self, r):
        return self._eval(r, 1)

    def d2(self, r):
        return self._eval(r, 2)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "r": self._r.tolist(), "values": (self.scale * self._v).tolist()}


def _radial_integral(f, support) -> float:
    """``int_lo^hi f(r) dr / r`` (i.e. ``int dt f(e^t)``) with the polar engine."""
    lo, hi = support
    res = integrate_log_polar(lambda t, phi: f(np.exp(t)) + 0.0 * phi,
                              Tail.compact(math.log(lo)), Tail.compact(math.log(hi)),
                              tol=1e-13, t_center=0.5 * (math.log(lo) + math.log(hi)))
    # the angular integral contributed a factor 2 pi
    return float(res.value.real)


@dataclass(frozen=True)
class StateSpec:
    """``psi(x) = exp(i mu arg x) g(|x|)`` with unit L2 norm."""

    g: object
    mu: float = 0.0
    norm_tol: float = 1e-8
    rescaled_by: float = field(default=1.0, compare=False)

    @classmethod
    def create(cls, g, mu: float = 0.0, norm_tol: float = 1e-8) -> "StateSpec":
        """Validate the norm; rescale when within 1e-3 of unity, refuse beyond."""
        n2 = _radial_integral(lambda r: g(r) ** 2 * r ** 2, g.support)
        norm = math.sqrt(n2)
        if abs(norm - 1.0) > NORM_RESCALE_TOL:
            raise DomainError(f"state norm {norm:.6f} is not within {NORM_RESCALE_TOL} of 1")
        factor = 1.0
        if abs(norm - 1.0) > norm_tol:
            factor = 1.0 / norm
            g.scale *= factor
        if mu != round(mu):
            raise DomainError(f"phase winding mu={mu} must be an integer for a single-valued state")
        return cls(g, float(mu), norm_tol, factor)

    @property
    def support(self):
        return self.g.support

    def psi(self, x1, x2):
        r = np.hypot(x1, x2)
        return np.exp(1j * self.mu * np.arctan2(x2, x1)) * self.g(r)

    def grad_psi(self, x1, x2):
        """Cartesian gradient ``(d1 psi, d2 psi)``."""
        r = np.hypot(x1, x2)
        ph = np.arctan2(x2, x1)
        e = np.exp(1j * self.mu * ph)
        gr = self.g.d1(r)
        gt = 1j * self.mu * self.g(r) / r
        c, s = np.cos(ph), np.sin(ph)
        return e * (gr * c - gt * s), e * (gr * s + gt * c)

    def to_dict(self) -> dict:
        return {"g": self.g.to_dict(), "mu": self.mu}


def state_from_dict(doc: dict) -> StateSpec:
    gdoc = doc.get("g", {})
    kind = gdoc.get("kind")
    if kind == "gaussian_ring":
        g = GaussianRing(gdoc["center"], gdoc["width"])
    elif kind == "tabulated":
        g = TabulatedRadial(gdoc["r"], gdoc["values"])
    else:
        raise ConfigError(f"unknown radial profile kind {kind!r}")
    return StateSpec.create(g, doc.get("mu", 0.0))


# state integrals -------------------------------------------------------------

def _plane_integral(s: StateSpec, f, tol=1e-12) -> complex:
    """``int d^2x f(x1, x2)`` over the support annulus of the state."""
    lo, hi = s.support

    def g(t, phi):
        rho = np.exp(t)
        return rho ** 2 * f(rho * np.cos(phi), rho * np.sin(phi))

    return integrate_log_polar(g, Tail.compact(math.log(lo)), Tail.compact(math.log(hi)),
                               tol=tol, t_center=math.log(s.g.center)).value


@dataclass(frozen=True)
class StateMeans:
    norm2: float
    inv_q2: float
    p2: float
    grad_g2: float
    inv_q_p: PlaneVector
    inv_q2_q_dot_p: complex


def state_means(s: StateSpec) -> StateMeans:
    """Mean values ``<Q^-2>``, ``<P^2>``, ``<Q^-1 P>`` etc. by 2-D quadrature."""
    norm2 = _plane_integral(s, lambda a, b: np.abs(s.psi(a, b)) ** 2).real
    inv_q2 = _plane_integral(s, lambda a, b: np.abs(s.psi(a, b)) ** 2 / (a * a + b * b)).real

    def grad2(a, b):
        d1, d2 = s.grad_psi(a, b)
        return np.abs(d1) ** 2 + np.abs(d2) ** 2

    p2 = _plane_integral(s, grad2).real
    grad_g2 = _plane_integral(s, lambda a, b: s.g.d1(np.hypot(a, b)) ** 2).real

    # conj(psi) (1/x) (-i grad psi), plane product with 1/x = (x1, -x2) / x^2
    def inv_q_p(k):
        def f(a, b):
            d1, d2 = s.grad_psi(a, b)
            v1, v2 = -1j * d1, -1j * d2
            r2 = a * a + b * b
            i1, i2 = a / r2, -b / r2
            comp = (i1 * v1 - i2 * v2) if k == 0 else (i1 * v2 + i2 * v1)
            return np.conj(s.psi(a, b)) * comp
        return _plane_integral(s, f)

    def qdotp(a, b):
        d1, d2 = s.grad_psi(a, b)
        r2 = a * a + b * b
        return np.conj(s.psi(a, b)) * (a * (-1j * d1) + b * (-1j * d2)) / r2

    return StateMeans(norm2, inv_q2, p2, grad_g2, PlaneVector(inv_q_p(0), inv_q_p(1)),
                      _plane_integral(s, qdotp))


def omega_from_state(s: StateSpec, q: PlaneVector = E1, tol: float = 1e-12,
                     with_phase: bool = True) -> complex:
    """``Omega(q) = 2 pi |q|^-2 int d^2x / x^2 psi(x) conj(psi(x / q))``.

    ``with_phase=False`` drops the winding, giving the radial ``Omega^g``.
    """
    r = q.norm()
    if r == 0:
        raise DomainError("Omega evaluated at q = 0")
    lo, hi = s.support
    a, b = max(lo, r * lo), min(hi, r * hi)
    if a >= b:
        return 0j
    psi = s.psi if with_phase else (lambda x1, x2: s.g(np.hypot(x1, x2)))
    inv = 1.0 / r ** 2

    def g(t, phi):
        rho = np.exp(t)
        x1, x2 = rho * np.cos(phi), rho * np.sin(phi)
        # x / q as a plane division
        z1 = (x1 * q.c1 + x2 * q.c2) * inv
        z2 = (x2 * q.c1 - x1 * q.c2) * inv
        return psi(x1, x2) * np.conj(psi(z1, z2))

    res = integrate_log_polar(g, Tail.compact(math.log(a)), Tail.compact(math.log(b)),
                              tol=tol, t_center=0.5 * (math.log(a) + math.log(b)))
    return 2.0 * math.pi * res.value / r ** 2


class CoherentWeight:
    """Weight ``w_psi`` of a rank-one density operator ``|psi><psi|``."""

    family = "coherent"

    def __init__(self, state: StateSpec, tol: float = 1e-12):
        self.state = state
        self.tol = tol
        self.decay = Decay(small=math.inf, large=math.inf)

    def hat(self, q1, q2, x1, x2):
        q1 = np.asarray(q1, dtype=float)
        q2 = np.asarray(q2, dtype=float)
        r2 = q1 * q1 + q2 * q2
        if np.any(r2 == 0):
            raise DomainError("weight transform evaluated at q = 0")
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        # -x / q as a plane division
        z1 = -(x1 * q1 + x2 * q2) / r2
        z2 = -(x2 * q1 - x1 * q2) / r2
        s = self.state
        return 2.0 * np.pi / r2 * s.psi(-x1, -x2) * np.conj(s.psi(z1, z2))

    def hat_q_derivatives(self, x1, x2):
        """Analytic q-derivatives at 1 of ``hat`` for the phase-state form."""
        s = self.state
        rho = np.hypot(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        g, g1, g2 = s.g(rho), s.g.d1(rho), s.g.d2(rho)
        two_pi = 2.0 * np.pi
        d_r = two_pi * g * (-2.0 * g - rho * g1)
        d_th = 1j * s.mu * two_pi * g * g
        d_rr = two_pi * g * (6.0 * g + 6.0 * rho * g1 + rho ** 2 * g2)
        lap = d_rr + d_r - s.mu ** 2 * two_pi * g * g
        return d_r + 0j, d_th, lap + 0j

    def hat_scale(self, q: PlaneVector) -> float:
        return self.state.g.center

    def hat_support(self, q: PlaneVector):
        lo, hi = self.state.support
        r = q.norm()
        return (max(lo, r * lo), min(hi, r * hi))

    def _overlap(self, q1, q2, p1, p2) -> complex:
        """``<U(q, p) psi | psi> / |q|`` by quadrature of the representation."""
        s = self.state
        r2 = q1 * q1 + q2 * q2

        def f(a, b):
            u_psi = np.exp(1j * (p1 * a + p2 * b)) * s.psi((a * q1 + b * q2) / r2,
                                                          (b * q1 - a * q2) / r2) / math.sqrt(r2)
            return np.conj(u_psi) * s.psi(a, b)

        return _plane_integral(s, f, self.tol) / math.sqrt(r2)

    def _inverse_transform(self, q1, q2, p1, p2) -> complex:
        """``(1/2 pi) int d^2x exp(i p.x) hat(q, x)``."""
        sup = self.hat_support(PlaneVector(q1, q2))
        if sup[0] >= sup[1]:
            return 0j

        def g(t, phi):
            rho = np.exp(t)
            a, b = rho * np.cos(phi), rho * np.sin(phi)
            return rho ** 2 * np.exp(1j * (p1 * a + p2 * b)) * self.hat(q1, q2, a, b)

        res = integrate_log_polar(g, Tail.compact(math.log(sup[0])), Tail.compact(math.log(sup[1])),
                                  tol=self.tol, t_center=math.log(self.state.g.center))
        return res.value / (2.0 * np.pi)

    def weight(self, q1, q2, p1, p2):
        return _pointwise(self._overlap, q1, q2, p1, p2)

    def weight_from_transform(self, q1, q2, p1, p2):
        return _pointwise(self._inverse_transform, q1, q2, p1, p2)

    def to_dict(self) -> dict:
        return {"family": "coherent", "state": self.state.to_dict()}


def weight_from_state(s: StateSpec) -> CoherentWeight:
    n2 = _radial_integral(lambda r: s.g(r) ** 2 * r ** 2, s.support)
    if abs(math.sqrt(n2) - 1.0) > s.norm_tol:
        raise DomainError(f"state norm {math.sqrt(n2):.10f} violates the unit-norm requirement")
    return CoherentWeight(s)


@dataclass(frozen=True)
class CoherentGaugeReport:
    """Gauge data of a rank-one weight computed along independent routes."""

    gauge: GaugeData
    means: StateMeans
    omega_g1: float
    flux_log_derivative: complex
    flux_phase_state: complex
    K_moments: complex
    K_means: complex
    K_phase_state_formula: float
    vecpot_coefficient: PlaneVector
    lap_literal: complex
    lap_moments: complex

    @property
    def flux_ratio(self) -> complex:
        """Phase-state flux over log-derivative flux; NaN when both vanish."""
        if self.flux_log_derivative == 0:
            return complex(math.nan, 0.0)
        return self.flux_phase_state / self.flux_log_derivative

    def vector_potential_means(self, x: PlaneVector) -> PlaneVector:
        """``-(Q^-2 / <Q^-2>) Q <Q^-1 P>`` (plane product) at ``x``."""
        r2 = x.c1 ** 2 + x.c2 ** 2
        return (x * self.vecpot_coefficient) * (-1.0 / (r2 * self.means.inv_q2))


def gauge_from_state(s: StateSpec, hbar: float = 1.0, charge: float = 1.0,
                     tol: float = 1e-9) -> CoherentGaugeReport:
    w = weight_from_state(s)
    M = build_moment_table(w, betas=(), gen=(), tol=tol, check_sign=False)
    means = state_means(s)
    G = GaugeData(flux(M, hbar, charge), scalar_strength(M, hbar), check_gauge_condition(M),
                  hbar, charge)
    omega_g1 = omega_from_state(s, with_phase=False).real
    phi_phase = 2.0 * math.pi * hbar * s.mu * omega_g1 / charge
    v = means.inv_q_p
    k_means = hbar ** 2 * (means.p2 / means.inv_q2 - v.dot(v) / means.inv_q2 ** 2)
    k_printed = (4.0 + 2.0 * s.mu ** 2
                 + 2.0 * math.pi * (means.grad_g2 - 4.0 * means.inv_q2) / means.norm2)
    lap_literal = (8.0 * math.pi * means.inv_q2 + 8j * math.pi * means.inv_q2_q_dot_p
                   - 2.0 * math.pi * means.p2)
    return CoherentGaugeReport(
        gauge=G, means=means, omega_g1=omega_g1,
        flux_log_derivative=G.flux, flux_phase_state=complex(phi_phase),
        K_moments=G.K, K_means=complex(k_means), K_phase_state_formula=float(k_printed),
        vecpot_coefficient=v, lap_literal=complex(lap_literal), lap_moments=M.require_lap(),
    )
