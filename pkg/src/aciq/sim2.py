"""The similitude group SIM(2) and the complex algebra of the plane.

Two different "imaginary units" show up in affine quantization and they must
not be mixed up:

* the plane unit ``e2 = (0, 1)`` of :class:`PlaneVector`, with ``e2 e2 = -e1``;
* the quantum unit ``1j`` multiplying wave-function amplitudes.

A :class:`PlaneVector` therefore never converts to a Python ``complex``.
Its components may themselves be quantum-complex numbers (e.g. the gradient
of a complex moment function), in which case the plane product acts
bilinearly on them.  Multiplying a PlaneVector by a plain number scales both
components; multiplying two PlaneVectors is the plane product.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fields import SampledField


def _wrap_angle(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    w = math.remainder(theta, 2.0 * math.pi)
    return math.pi if w <= -math.pi else w


@dataclass(frozen=True)
class PlaneVector:
    c1: complex | float
    c2: complex | float

    @classmethod
    def from_polar(cls, r: float, theta: float) -> "PlaneVector":
        return cls(r * math.cos(theta), r * math.sin(theta))

    @property
    def is_real(self) -> bool:
        return complex(self.c1).imag == 0.0 and complex(self.c2).imag == 0.0

    def norm(self) -> float:
        """Euclidean length ``|q|``."""
        return math.hypot(abs(self.c1), abs(self.c2))

    def arg(self) -> float:
        """Polar angle in (-pi, pi] via the two-argument arctangent."""
        a = math.atan2(float(np.real(self.c2)), float(np.real(self.c1)))
        return _wrap_angle(a)

    def polar(self) -> tuple[float, float]:
        return self.norm(), self.arg()

    def conj(self) -> "PlaneVector":
        """Plane conjugate ``q* = (q1, -q2)``; quantum phases are untouched."""
        return PlaneVector(self.c1, -self.c2)

    def dot(self, other: "PlaneVector"):
        """Bilinear Euclidean product ``a1 b1 + a2 b2`` (no complex conjugation)."""
        return self.c1 * other.c1 + self.c2 * other.c2

    def wedge(self, other: "PlaneVector"):
        return self.c1 * other.c2 - self.c2 * other.c1

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2])

    def __add__(self, other):
        if not isinstance(other, PlaneVector):
            return NotImplemented
        return PlaneVector(self.c1 + other.c1, self.c2 + other.c2)

    def __sub__(self, other):
        if not isinstance(other, PlaneVector):
            return NotImplemented
        return PlaneVector(self.c1 - other.c1, self.c2 - other.c2)

    def __neg__(self):
        return PlaneVector(-self.c1, -self.c2)

    def __mul__(self, other):
        if isinstance(other, PlaneVector):
            return plane_mul(self, other)
        if isinstance(other, numbers.Number):
            return PlaneVector(self.c1 * other, self.c2 * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, numbers.Number):
            return PlaneVector(other * self.c1, other * self.c2)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, PlaneVector):
            return plane_mul(self, plane_inv(other))
        if isinstance(other, numbers.Number):
            return PlaneVector(self.c1 / other, self.c2 / other)
        return NotImplemented


E1 = PlaneVector(1.0, 0.0)
E2 = PlaneVector(0.0, 1.0)
ZERO = PlaneVector(0.0, 0.0)


def plane_mul(a: PlaneVector, b: PlaneVector) -> PlaneVector:
    return PlaneVector(a.c1 * b.c1 - a.c2 * b.c2, a.c1 * b.c2 + a.c2 * b.c1)


def plane_inv(a: PlaneVector) -> PlaneVector:
    """Plane inverse ``a* / |a|^2``; ``a`` must be real and nonzero."""
    r2 = a.c1 * a.c1 + a.c2 * a.c2
    if r2 == 0:
        raise DomainError("plane inverse of the zero vector")
    return PlaneVector(a.c1 / r2, -a.c2 / r2)


@dataclass(frozen=True)
class GroupElement:
    """Element ``(q, p)`` of SIM(2): ``q`` scales/rotates, ``p`` translates momenta."""

    q: PlaneVector
    p: PlaneVector

    def __post_init__(self):
        if self.q.c1 == 0 and self.q.c2 == 0:
            raise DomainError("group element needs q != 0")
        if not (self.q.is_real and self.p.is_real):
            raise DomainError("group element components must be real")

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(E1, ZERO)

    @classmethod
    def from_affine(cls, a: float, theta: float, b: PlaneVector) -> "GroupElement":
        """Phase-space coordinates of the affine map ``x -> a R(theta) x + b``."""
        if a <= 0:
            raise DomainError("dilation factor must be positive")
        return cls(PlaneVector.from_polar(1.0 / a, theta), b)


def compose(g1: GroupElement, g2: GroupElement) -> GroupElement:
    """Group law ``(q1, p1)(q2, p2) = (q1 q2, p2 / q1* + p1)``."""
    return GroupElement(plane_mul(g1.q, g2.q), g2.p / g1.q.conj() + g1.p)


def inverse(g: GroupElement) -> GroupElement:
    """``(q, p)^-1 = (q^-1, -q* p)``."""
    return GroupElement(plane_inv(g.q), -plane_mul(g.q.conj(), g.p))


def act_on_plane(a: float, theta: float, b: PlaneVector, x: PlaneVector) -> PlaneVector:
    """Affine action ``a R(theta) x + b``."""
    if a <= 0:
        raise DomainError("dilation factor must be positive")
    c, s = math.cos(theta), math.sin(theta)
    return PlaneVector(a * (c * x.c1 - s * x.c2) + b.c1, a * (s * x.c1 + c * x.c2) + b.c2)


def left_action_jacobians(g0: GroupElement) -> tuple[float, float]:
    """Jacobians of ``q -> q0 q`` and ``p -> p / q0* + p0`` (product is 1)."""
    r2 = g0.q.norm() ** 2
    return r2, 1.0 / r2


def apply_unitary(
    g: GroupElement, phi: SampledField, order: int = 1, zero_pad: bool = True
) -> SampledField:
    """Apply ``(U(q, p) phi)(x) = exp(i p.x) phi(x / q) / |q|`` on the grid of ``phi``.

    ``x / q`` is a plane division, so in log-polar coordinates it shifts
    ``t`` by ``-log|q|`` and ``theta`` by ``-arg q``; the shifted samples are
    interpolated with the given spline ``order``.
    """
    grid = phi.grid
    t, th = grid.mesh()
    qr, qa = g.q.polar()
    x1, x2 = grid.cartesian()
    shifted = phi.interpolate(t - math.log(qr), th - qa, order=order, zero_pad=zero_pad)
    phase = np.exp(1j * (g.p.c1 * x1 + g.p.c2 * x2))
    return phi.with_values(phase * shifted / qr)
