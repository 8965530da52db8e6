"""Emergent Aharonov-Bohm structures of the quantized kinetic energy.

Writing ``a = d1 ln Omega(1)``, ``b = d2 ln Omega(1)`` and
``L = Laplacian Omega(1) / Omega(1)``, the quantized kinetic energy takes the
completed-square form

    (P - qc A(Q))^2 + K / Q^2,
    qc A(Q) = i [[-2 - a, b], [-b, -2 - a]] Q / Q^2,
    K = a^2 + b^2 - L,

(with ``qc`` the fictive charge).  When the weight satisfies the gauge
condition ``a = -2`` the potential is the field of an infinitely thin
solenoid, ``A = (Phi0 / 2 pi) (-Q2, Q1) / Q^2``, with flux
``Phi0 = -i (2 pi hbar / qc) b``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GaugeConditionError
from .moments import MomentTable, omega_closed_form_example
from .sim2 import PlaneVector, plane_inv

DEFAULT_GAUGE_TOL = 1e-6


def _log_derivs(M: MomentTable):
    g = M.require_grad()
    return g.c1 / M.omega0, g.c2 / M.omega0


def check_gauge_condition(M: MomentTable, tol: float | None = None) -> float:
    """Residual ``|d1 ln Omega(1) + 2|`` of the gauge condition."""
    a, _ = _log_derivs(M)
    return float(abs(a + 2.0))


def flux(M: MomentTable, hbar: float = 1.0, charge: float = 1.0,
         tol: float = DEFAULT_GAUGE_TOL) -> complex:
    """Topological flux ``-i (2 pi hbar / charge) d2 ln Omega(1)``.

    Refuses with :class:`GaugeConditionError` when the gauge condition is
    violated by more than ``tol``: the potential is then not a solenoid field.
    """
    res = check_gauge_condition(M)
    if res > tol:
        raise GaugeConditionError(res, tol)
    _, b = _log_derivs(M)
    return complex(-1j * (2.0 * math.pi * hbar / charge) * b)


def flux_quanta(phi0: complex, hbar: float = 1.0, charge: float = 1.0) -> float:
    """``Phi0 / (2 pi hbar / charge)`` (real part)."""
    return float((complex(phi0) / (2.0 * math.pi * hbar / charge)).real)


def scalar_strength(M: MomentTable, hbar: float = 1.0) -> complex:
    """``hbar^2 (grad Omega . grad Omega - Omega Lap Omega) / Omega^2`` at 1.

    The dot product is bilinear: a complex gradient is not conjugated.
    """
    g = M.require_grad()
    om = M.omega0
    return complex(hbar ** 2 * (g.dot(g) - om * M.require_lap()) / om ** 2)


def strength_from_alpha(nu: float, alpha, hbar: float = 1.0) -> complex:
    """``hbar^2 (2 nu + alpha'(0)^2 - alpha''(0))`` for the example family."""
    a1, a2 = alpha.derivatives()
    return complex(hbar ** 2 * (2.0 * nu + a1 ** 2 - a2))


def strength_printed_exponential(nu: float, hbar: float = 1.0) -> float:
    """The closed form ``2 hbar^2 nu^2`` printed for exponential alpha.

    Kept for reporting only: it disagrees with :func:`strength_from_alpha`
    and with quadrature, which both give ``2 hbar^2 nu``.
    """
    return 2.0 * hbar ** 2 * nu ** 2


def completed_square_residual(M: MomentTable) -> float:
    """``|c_invQ2 - (-(2 + a)^2 - b^2 + K)|``: the two forms of the kinetic energy agree."""
    a, b = _log_derivs(M)
    lap_ratio = M.require_lap() / M.omega0
    c_inv_q2 = -(4.0 + 4.0 * a + lap_ratio)
    k = scalar_strength(M)
    return float(abs(c_inv_q2 - (-(2.0 + a) ** 2 - b ** 2 + k)))


def potential_matrix(M: MomentTable) -> np.ndarray:
    """``B`` with ``qc A(Q) = i B Q / Q^2``."""
    a, b = _log_derivs(M)
    return np.array([[-2.0 - a, b], [-b, -2.0 - a]], dtype=complex)


def vector_potential_matrix_form(M: MomentTable, x: PlaneVector, charge: float = 1.0) -> PlaneVector:
    """Operative form ``A(x) = (i / charge) B x / x^2`` (valid with or without the gauge condition)."""
    r2 = x.c1 ** 2 + x.c2 ** 2
    if r2 == 0:
        raise DomainError("vector potential evaluated at x = 0")
    B = potential_matrix(M)
    v = B @ np.array([x.c1, x.c2]) * (1j / charge) / r2
    return PlaneVector(complex(v[0]), complex(v[1]))


def vector_potential_diagnostic(M: MomentTable, x: PlaneVector) -> PlaneVector:
    """Plane-product form ``-i (1/x*)(2 e1 + grad Omega / Omega)``."""
    if x.norm() == 0:
        raise DomainError("vector potential evaluated at x = 0")
    a, b = _log_derivs(M)
    inv = plane_inv(x.conj())
    return (inv * PlaneVector(2.0 + a, b)) * (-1j)


def solenoid_potential(phi0: float, x: PlaneVector) -> PlaneVector:
    """Potential of an infinitely thin solenoid of flux ``phi0`` at the origin."""
    r2 = x.c1 ** 2 + x.c2 ** 2
    if r2 == 0:
        raise DomainError("solenoid potential evaluated at x = 0")
    k = phi0 / (2.0 * math.pi)
    return PlaneVector(-k * x.c2 / r2, k * x.c1 / r2)


@dataclass(frozen=True)
class GaugeData:
    """Flux, scalar strength and gauge residual extracted from a moment table."""

    flux: complex
    K: complex
    gauge_condition_residual: float
    hbar: float = 1.0
    charge: float = 1.0

    @property
    def flux_quanta(self) -> float:
        return flux_quanta(self.flux, self.hbar, self.charge)

    def vector_potential(self, x: PlaneVector) -> PlaneVector:
        return vector_potential_field(self, x)

    def to_dict(self) -> dict:
        return {
            "flux": [self.flux.real, self.flux.imag],
            "flux_quanta": self.flux_quanta,
            "K": [self.K.real, self.K.imag],
            "gauge_residual": self.gauge_condition_residual,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def gauge_data(M: MomentTable, hbar: float = 1.0, charge: float = 1.0,
               tol: float = DEFAULT_GAUGE_TOL) -> GaugeData:
    res = check_gauge_condition(M)
    return GaugeData(flux(M, hbar, charge, tol), scalar_strength(M, hbar), res, hbar, charge)


def vector_potential_field(G: GaugeData, x: PlaneVector) -> PlaneVector:
    """``A(x) = (Phi0 / 2 pi) (-x2, x1) / x^2``; the flux must be real."""
    phi0 = complex(G.flux)
    if abs(phi0.imag) > 1e-10 * max(1.0, abs(phi0)):
        raise DomainError(f"flux {phi0} is not real; no physical vector potential")
    return solenoid_potential(phi0.real, x)


def loop_line_integral(field_fn, center: PlaneVector, radius: float, n: int = 4096) -> float:
    """``oint A . dl`` around a circle (trapezoid rule, spectrally accurate).

    ``field_fn`` maps a PlaneVector to a PlaneVector.  The circle must not
    pass through the origin.
    """
    if abs(center.norm() - radius) < 1e-12:
        raise DomainError("loop passes through the origin")
    s = 2.0 * np.pi * np.arange(n) / n
    total = []
    for si in s:
        x = PlaneVector(center.c1 + radius * math.cos(si), center.c2 + radius * math.sin(si))
        a = field_fn(x)
        dl1, dl2 = -radius * math.sin(si), radius * math.cos(si)
        total.append(float(np.real(a.c1)) * dl1 + float(np.real(a.c2)) * dl2)
    return math.fsum(total) * (2.0 * np.pi / n)


# pullback identities --------------------------------------------------------

@dataclass(frozen=True)
class PullbackReport:
    """Relative residuals of the pulled-back derivative identities at each sample."""

    points: tuple
    dot_q: tuple
    gradient: tuple
    laplacian: tuple

    @property
    def max_residual(self) -> float:
        return float(max(max(self.dot_q), max(self.gradient), max(self.laplacian)))


def _omega_function(w, tol):
    if getattr(w, "family", None) == "example":
        return lambda q: omega_closed_form_example(w.nu, w.sigma, w.alpha, q)
    from .moments import omega

    return lambda q: omega(w, q=q, tol=tol).value


def default_pullback_points(n: int = 10, seed: int = 7):
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(math.log(0.5), math.log(3.0), n))
    th = rng.uniform(-np.pi, np.pi, n)
    return [PlaneVector.from_polar(float(a), float(b)) for a, b in zip(r, th)]


def pullback_identity_check(M: MomentTable, w, points=None, omega_fn=None,
                            tol: float = 1e-12) -> PullbackReport:
    """Check the identities for ``F(x') = Omega(Q / x')`` at ``x' = Q``.

    * ``grad_x' F . Q = -d1 Omega(1)``
    * ``grad_x' F = (-Q1 d1 + Q2 d2, -Q2 d1 - Q1 d2) Omega(1) / Q^2``
    * ``Lap_x' F = Lap Omega(1) / Q^2``

    Derivatives in ``x'`` are central differences with one Richardson step;
    residuals are relative to the natural scale ``|Omega(1)| / |Q|^k``.
    """
    if points is None:
        points = default_pullback_points()
    if omega_fn is None:
        omega_fn = _omega_function(w, tol)
    g = M.require_grad()
    lap1 = M.require_lap()
    om = abs(M.omega0)
    d1, d2 = g.c1, g.c2
    dots, grads, laps = [], [], []
    for Q in points:
        rq = Q.norm()

        def F(a, b):
            return omega_fn(Q / PlaneVector(a, b))

        h = 1e-3 * rq

        def first(e1, e2, hh):
            return (F(Q.c1 + hh * e1, Q.c2 + hh * e2) - F(Q.c1 - hh * e1, Q.c2 - hh * e2)) / (2 * hh)

        gx = [(4 * first(*e, h / 2) - first(*e, h)) / 3 for e in ((1, 0), (0, 1))]
        f0 = F(Q.c1, Q.c2)

        def five(hh):
            return (F(Q.c1 + hh, Q.c2) + F(Q.c1 - hh, Q.c2) + F(Q.c1, Q.c2 + hh)
                    + F(Q.c1, Q.c2 - hh) - 4 * f0) / hh ** 2

        hl = 2e-3 * rq
        lap = (4 * five(hl / 2) - five(hl)) / 3

        q2 = rq ** 2
        dots.append(abs(gx[0] * Q.c1 + gx[1] * Q.c2 + d1) / om)
        expect = ((-Q.c1 * d1 + Q.c2 * d2) / q2, (-Q.c2 * d1 - Q.c1 * d2) / q2)
        grads.append(max(abs(gx[0] - expect[0]), abs(gx[1] - expect[1])) / (om / rq))
        laps.append(abs(lap - lap1 / q2) / (om / q2))
    return PullbackReport(tuple(points), tuple(map(float, dots)), tuple(map(float, grads)),
                          tuple(map(float, laps)))
