"""Quantized observables, the affine convolution, and integral kernels.

Closed-form quantizations are returned as :class:`OperatorDescriptor`
objects, i.e. coefficient lists over the fixed operator basis

    P^2,  P,  (1/Q*),  (1/Q*).P,  Q.P,  Q^P,  Q^beta,  M Q,  1/Q^2,  1

where ``Q^P = Q1 P2 - Q2 P1``, ``M Q`` is a 2x2 matrix acting on the
position vector, and ``1/Q*`` is the plane inverse of the conjugated
position.  Terms multiplying ``1/Q*`` are plane vectors; they are stored as
a quantum scalar times a :class:`~aciq.sim2.PlaneVector` so that the quantum
unit ``1j`` never mixes with the plane unit ``e2``.

Position-dependent observables ``u(q)`` are also available as genuine
multiplication operators through the affine convolution

    (f1 *aff f2)(x) = int d^2x' / x'^2  f1(x') f2(x / x').
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import fftconvolve

from .errors import DomainError
from .fields import SampledField
from .moments import MomentTable, c_constant
from .quadrature import DEFAULT_TOL, Tail, integrate_log_polar
from .sim2 import E1, GroupElement, PlaneVector, apply_unitary, inverse


@dataclass(frozen=True)
class PlaneTerm:
    """A quantum scalar times a plane vector, ``scalar * vector``."""

    scalar: complex
    vector: PlaneVector

    def value(self) -> PlaneVector:
        return self.vector * self.scalar

    def is_zero(self) -> bool:
        v = self.value()
        return v.c1 == 0 and v.c2 == 0

    def __add__(self, other: "PlaneTerm") -> "PlaneTerm":
        if self.vector == other.vector:
            return PlaneTerm(self.scalar + other.scalar, self.vector)
        return PlaneTerm(1.0 + 0j, self.value() + other.value())

    def scaled(self, a: complex) -> "PlaneTerm":
        return PlaneTerm(self.scalar * a, self.vector)


_ZERO_TERM = PlaneTerm(0j, PlaneVector(0.0, 0.0))


def _zero_term():
    return _ZERO_TERM


@dataclass(frozen=True)
class OperatorDescriptor:
    """Coefficients of a quantized observable over the fixed operator basis."""

    observable: str = ""
    c_P2: complex = 0j
    c_P: complex = 0j
    c_invQstar: PlaneTerm = field(default_factory=_zero_term)
    c_invQstar_P: PlaneTerm = field(default_factory=_zero_term)
    c_QdotP: complex = 0j
    c_QwedgeP: complex = 0j
    c_mult: dict = field(default_factory=dict)
    c_position: np.ndarray | None = None
    c_invQ2: complex = 0j
    c_const: complex = 0j

    @classmethod
    def identity(cls) -> "OperatorDescriptor":
        return cls(observable="1", c_mult={0.0: 1.0 + 0j})

    def __add__(self, other: "OperatorDescriptor") -> "OperatorDescriptor":
        mult = dict(self.c_mult)
        for b, v in other.c_mult.items():
            mult[b] = mult.get(b, 0j) + v
        if self.c_position is None:
            pos = other.c_position
        elif other.c_position is None:
            pos = self.c_position
        else:
            pos = self.c_position + other.c_position
        name = f"{self.observable} + {other.observable}".strip(" +")
        return OperatorDescriptor(
            name, self.c_P2 + other.c_P2, self.c_P + other.c_P,
            self.c_invQstar + other.c_invQstar, self.c_invQstar_P + other.c_invQstar_P,
            self.c_QdotP + other.c_QdotP, self.c_QwedgeP + other.c_QwedgeP, mult, pos,
            self.c_invQ2 + other.c_invQ2, self.c_const + other.c_const,
        )

    def scaled(self, a: complex) -> "OperatorDescriptor":
        return OperatorDescriptor(
            f"{a!r}*({self.observable})", self.c_P2 * a, self.c_P * a,
            self.c_invQstar.scaled(a), self.c_invQstar_P.scaled(a),
            self.c_QdotP * a, self.c_QwedgeP * a,
            {b: v * a for b, v in self.c_mult.items()},
            None if self.c_position is None else self.c_position * a,
            self.c_invQ2 * a, self.c_const * a,
        )

    def __rmul__(self, a):
        return self.scaled(a)

    def coefficients(self) -> dict:
        """Flat numeric view used for comparisons (basis label -> complex)."""
        out = {"P^2": complex(self.c_P2), "P": complex(self.c_P)}
        v = self.c_invQstar.value()
        out["(1/Q*)[1]"], out["(1/Q*)[2]"] = complex(v.c1), complex(v.c2)
        v = self.c_invQstar_P.value()
        out["(1/Q*).P[1]"], out["(1/Q*).P[2]"] = complex(v.c1), complex(v.c2)
        out["Q.P"], out["Q^P"] = complex(self.c_QdotP), complex(self.c_QwedgeP)
        for b in sorted(self.c_mult):
            out[f"Q^{b!r}"] = complex(self.c_mult[b])
        if self.c_position is not None:
            for i in range(2):
                for j in range(2):
                    out[f"M[{i}{j}]"] = complex(self.c_position[i, j])
        out["1/Q^2"], out["1"] = complex(self.c_invQ2), complex(self.c_const)
        return out

    def to_dict(self) -> dict:
        def c(z):
            z = complex(z)
            return [z.real, z.imag]

        def pv(t: PlaneTerm):
            return {"scalar": c(t.scalar), "vector": [c(t.vector.c1), c(t.vector.c2)]}

        terms = [
            {"basis": "P^2", "value": c(self.c_P2)},
            {"basis": "P", "value": c(self.c_P)},
            {"basis": "(1/Q*)", **pv(self.c_invQstar)},
            {"basis": "(1/Q*).P", **pv(self.c_invQstar_P)},
            {"basis": "Q.P", "value": c(self.c_QdotP)},
            {"basis": "Q^P", "value": c(self.c_QwedgeP)},
        ]
        for b in sorted(self.c_mult):
            terms.append({"basis": "Q^beta", "beta": b, "value": c(self.c_mult[b])})
        if self.c_position is not None:
            terms.append({"basis": "M Q", "matrix": [[c(self.c_position[i, j]) for j in range(2)]
                                                     for i in range(2)]})
        terms.append({"basis": "1/Q^2", "value": c(self.c_invQ2)})
        terms.append({"basis": "1", "value": c(self.c_const)})
        return {"observable": self.observable, "terms": terms}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "OperatorDescriptor":
        def z(pair):
            return complex(pair[0], pair[1])

        def pt(t):
            return PlaneTerm(z(t["scalar"]), PlaneVector(z(t["vector"][0]), z(t["vector"][1])))

        kw = {"observable": doc["observable"], "c_mult": {}}
        for t in doc["terms"]:
            b = t["basis"]
            if b == "P^2":
                kw["c_P2"] = z(t["value"])
            elif b == "P":
                kw["c_P"] = z(t["value"])
            elif b == "(1/Q*)":
                kw["c_invQstar"] = pt(t)
            elif b == "(1/Q*).P":
                kw["c_invQstar_P"] = pt(t)
            elif b == "Q.P":
                kw["c_QdotP"] = z(t["value"])
            elif b == "Q^P":
                kw["c_QwedgeP"] = z(t["value"])
            elif b == "Q^beta":
                kw["c_mult"][float(t["beta"])] = z(t["value"])
            elif b == "M Q":
                kw["c_position"] = np.array([[z(e) for e in row] for row in t["matrix"]])
            elif b == "1/Q^2":
                kw["c_invQ2"] = z(t["value"])
            elif b == "1":
                kw["c_const"] = z(t["value"])
            else:
                raise DomainError(f"unknown basis label {b!r}")
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "OperatorDescriptor":
        return cls.from_dict(json.loads(text))


def _two_pi_over_c(M: MomentTable) -> complex:
    return 2.0 * math.pi / c_constant(M)


def quantize_power_q(M: MomentTable, beta: float) -> OperatorDescriptor:
    """``q^beta -> (Omega_beta(1) / Omega(1)) Q^beta``."""
    if beta == 0:
        return OperatorDescriptor.identity()
    ratio = M.beta_moment(beta) / M.omega0
    return OperatorDescriptor(observable=f"q^{float(beta)!r}", c_mult={float(beta): ratio})


def quantize_position(M: MomentTable) -> OperatorDescriptor:
    """``q -> (2 pi / c) [[O210, O201], [-O201, O210]] Q``."""
    a = M.gen(2, 1, 0)
    b = M.gen(2, 0, 1)
    k = _two_pi_over_c(M)
    mat = k * np.array([[a, b], [-b, a]], dtype=complex)
    return OperatorDescriptor(observable="q", c_position=mat)


def _gauge_vector(M: MomentTable) -> PlaneVector:
    g = M.require_grad()
    return PlaneVector(2.0 + g.c1 / M.omega0, g.c2 / M.omega0)


def quantize_momentum(M: MomentTable) -> OperatorDescriptor:
    """``p -> P + i (1/Q*)(2 e1 + grad Omega(1) / Omega(1))``."""
    return OperatorDescriptor(observable="p", c_P=1.0 + 0j,
                              c_invQstar=PlaneTerm(1j, _gauge_vector(M)))


def quantize_kinetic(M: MomentTable) -> OperatorDescriptor:
    """``p^2 -> P^2 + 2i (1/Q*)(2 e1 + grad Omega/Omega).P - [4 + 4 d1 Omega/Omega + Lap Omega/Omega] / Q^2``."""
    g = M.require_grad()
    lap = M.require_lap()
    om = M.omega0
    c_inv_q2 = -(4.0 + 4.0 * g.c1 / om + lap / om)
    return OperatorDescriptor(observable="p^2", c_P2=1.0 + 0j,
                              c_invQstar_P=PlaneTerm(2j, _gauge_vector(M)),
                              c_invQ2=complex(c_inv_q2))


def quantize_dilation(M: MomentTable) -> OperatorDescriptor:
    """Dilation generator ``q.p``."""
    k = _two_pi_over_c(M)
    a, b = M.gen(2, 1, 0), M.gen(2, 0, 1)
    ga, gb = M.gen_grad(2, 1, 0), M.gen_grad(2, 0, 1)
    const = k * (2j * a + 1j * (ga.c1 - gb.c2))
    return OperatorDescriptor(observable="q.p", c_QdotP=k * a, c_QwedgeP=-k * b,
                              c_const=complex(const))


def quantize_angular_momentum(M: MomentTable) -> OperatorDescriptor:
    """Angular momentum ``q^p = q1 p2 - q2 p1``."""
    k = _two_pi_over_c(M)
    a, b = M.gen(2, 1, 0), M.gen(2, 0, 1)
    ga, gb = M.gen_grad(2, 1, 0), M.gen_grad(2, 0, 1)
    const = k * (2j * b + 1j * (gb.c1 + ga.c2))
    return OperatorDescriptor(observable="q^p", c_QwedgeP=k * a, c_QdotP=k * b,
                              c_const=complex(const))


_OBSERVABLES = {
    "p": quantize_momentum,
    "p^2": quantize_kinetic,
    "q": quantize_position,
    "q.p": quantize_dilation,
    "q^p": quantize_angular_momentum,
}


def quantize(M: MomentTable, combination: dict) -> OperatorDescriptor:
    """Quantize a linear combination ``{observable: coefficient}``.

    Observables are ``"1"``, ``"p"``, ``"p^2"``, ``"q"``, ``"q.p"``,
    ``"q^p"`` and ``"q^<beta>"`` (e.g. ``"q^-2"``).
    """
    total = OperatorDescriptor()
    for name, coef in combination.items():
        if name == "1":
            d = OperatorDescriptor.identity()
        elif name in _OBSERVABLES:
            d = _OBSERVABLES[name](M)
        elif name.startswith("q^"):
            d = quantize_power_q(M, float(name[2:]))
        else:
            raise DomainError(f"no closed-form quantization for {name!r}")
        total = total + d.scaled(coef)
    return replace(total, observable=" + ".join(f"{c!r}*{n}" for n, c in combination.items()))


def apply_multiplicative(desc: OperatorDescriptor, phi: SampledField,
                         component: int | None = None) -> SampledField:
    """Apply the multiplication-operator part of a descriptor on a grid.

    Differential terms must vanish.  For a position descriptor ``component``
    selects the row of ``M Q``.
    """
    if any(abs(v) > 0 for v in (desc.c_P2, desc.c_P, desc.c_QdotP, desc.c_QwedgeP)) or \
            not (desc.c_invQstar.is_zero() and desc.c_invQstar_P.is_zero()):
        raise DomainError("descriptor contains differential terms")
    x1, x2 = phi.grid.cartesian()
    r2 = x1 ** 2 + x2 ** 2
    mult = np.zeros_like(r2, dtype=complex)
    for b, v in desc.c_mult.items():
        mult += v * r2 ** (b / 2.0)
    mult += desc.c_invQ2 / r2 + desc.c_const
    if desc.c_position is not None:
        if component not in (0, 1):
            raise DomainError("position descriptor needs component 0 or 1")
        row = desc.c_position[component]
        mult += row[0] * x1 + row[1] * x2
    return phi.with_values(mult * phi.values)


# affine convolution --------------------------------------------------------

def _plane_div_polar(x: PlaneVector, t, phi):
    """``x / x'`` for ``x' = e^t (cos phi, sin phi)`` as Cartesian arrays."""
    r, th = x.polar()
    rr = r * np.exp(-t)
    ang = th - phi
    return rr * np.cos(ang), rr * np.sin(ang)


def affine_convolution(f1, f2, x: PlaneVector, left: Tail, right: Tail,
                       tol: float = DEFAULT_TOL, t_center: float = 0.0) -> complex:
    """``int d^2x'/x'^2 f1(x') f2(x/x')`` by the adaptive polar engine.

    ``left`` and ``right`` declare the decay of the whole integrand in
    ``t = log|x'|`` as ``t -> -inf`` and ``t -> +inf``.
    """
    if x.norm() == 0:
        raise DomainError("affine convolution evaluated at x = 0")

    def g(t, phi):
        rho = np.exp(t)
        z1, z2 = _plane_div_polar(x, t, phi)
        return f1(rho * np.cos(phi), rho * np.sin(phi)) * f2(z1, z2)

    return integrate_log_polar(g, left, right, tol=tol, t_center=t_center).value


def _weight_tails(w, u_exponents):
    """Tails of ``hat(1, -x') u(x/x')`` given ``u ~ |x|^b0`` (0) and ``|x|^binf`` (inf)."""
    b0, binf = u_exponents
    dec = w.decay
    left = Tail.exponential(dec.small - binf)
    if dec.large == "gaussian":
        right = Tail.gaussian()
    else:
        right = Tail.exponential(float(dec.large) + b0)
    return left, right


def weight_convolution_at(w, u, x: PlaneVector, u_exponents=(0.0, 0.0), q: PlaneVector = E1,
                          tol: float = DEFAULT_TOL) -> complex:
    """``(hat(q, -.) *aff u)(x)`` at one point."""
    left, right = _weight_tails(w, u_exponents)
    q1, q2 = float(q.c1), float(q.c2)
    return affine_convolution(lambda a, b: w.hat(q1, q2, -a, -b), u, x, left, right, tol,
                              t_center=math.log(w.hat_scale(q)))


def _kernel_window(w, dt, u_exponents, rel=1e-18):
    """Lattice ``j dt`` covering the significant part of ``hat(1, -x') |x/x'|^b``."""
    t0 = math.log(w.hat_scale(E1))
    binf = u_exponents[1]
    b0 = u_exponents[0]

    def mag(t):
        rho = np.exp(t)
        k = np.abs(w.hat(1.0, 0.0, -rho * np.cos(0.3), -rho * np.sin(0.3)))
        return k * np.exp(-binf * t) if t < t0 else k * np.exp(-b0 * t)

    peak = max(mag(t0 + s) for s in np.linspace(-2, 2, 41))
    lo = t0
    while mag(lo) > rel * peak:
        lo -= 0.25
        if lo < t0 - 400:
            raise DomainError("kernel does not decay towards x' -> 0 for this u")
    hi = t0
    while mag(hi) > rel * peak:
        hi += 0.25
        if hi > t0 + 400:
            raise DomainError("kernel does not decay towards x' -> inf for this u")
    return int(math.floor(lo / dt)), int(math.ceil(hi / dt))


def convolve_on_grid(w, u, grid, u_exponents=(0.0, 0.0)) -> np.ndarray:
    """``(2 pi hat(1, -.) *aff u)`` on every node of a log-polar grid.

    In log-polar coordinates the affine convolution is an ordinary
    convolution (linear in ``t``, circular in ``theta``); the kernel is
    sampled on the grid's own lattice so the trapezoid sum is evaluated by
    FFT.  ``u(x1, x2)`` is sampled on a ``t``-extended copy of the grid.
    """
    dt, dth = grid.dt, grid.dtheta
    j_lo, j_hi = _kernel_window(w, dt, u_exponents)
    # tilt u = exp(gamma t) * u_tilde so that the FFT sees no huge dynamic range
    gamma = 0.5 * (u_exponents[0] + u_exponents[1])
    tk = dt * np.arange(j_lo, j_hi + 1)
    th = grid.theta
    T, TH = np.meshgrid(tk, th, indexing="ij")
    rho = np.exp(T)
    kern = 2.0 * np.pi * w.hat(1.0, 0.0, -rho * np.cos(TH), -rho * np.sin(TH)) * np.exp(-gamma * T)
    n_k = tk.size
    t_ext = grid.t[0] + dt * np.arange(-j_hi, grid.n_r - j_lo)
    TE, THE = np.meshgrid(t_ext, th, indexing="ij")
    re = np.exp(TE)
    uvals = np.asarray(u(re * np.cos(THE), re * np.sin(THE)), dtype=complex)
    uvals = np.broadcast_to(uvals, TE.shape) * np.exp(-gamma * TE)
    kf = np.fft.fft(kern, axis=1)
    uf = np.fft.fft(uvals, axis=1)
    conv = fftconvolve(kf, uf, mode="valid", axes=0)
    out = np.fft.ifft(conv, axis=1) * dt * dth * np.exp(gamma * grid.t)[:, None]
    assert out.shape[0] == grid.n_r and n_k + out.shape[0] - 1 == uvals.shape[0]
    return out


def apply_multiplication_op(M: MomentTable, w, u, phi: SampledField,
                            u_exponents=(0.0, 0.0), method: str = "grid",
                            tol: float = DEFAULT_TOL) -> SampledField:
    """``(Op_u phi)(x) = (w *aff u)(x) phi(x) / c`` with ``w(x) = 2 pi hat(1, -x)``.

    ``method="grid"`` uses the FFT convolution on the field's lattice,
    ``"pointwise"`` the adaptive quadrature at each node (slow).
    """
    c = c_constant(M)
    if method == "grid":
        conv = convolve_on_grid(w, u, phi.grid, u_exponents)
    elif method == "pointwise":
        x1, x2 = phi.grid.cartesian()
        conv = np.empty(x1.shape, dtype=complex)
        for idx in np.ndindex(x1.shape):
            conv[idx] = 2.0 * np.pi * weight_convolution_at(
                w, u, PlaneVector(x1[idx], x2[idx]), u_exponents, tol=tol)
    else:
        raise DomainError(f"unknown method {method!r}")
    return phi.with_values(conv * phi.values / c)


def kernel_separable(M: MomentTable, w, u, v_hat, x: PlaneVector, xp: PlaneVector,
                     u_exponents=(0.0, 0.0), tol: float = DEFAULT_TOL) -> complex:
    """Integral kernel of ``Op_{u(q) v(p)}`` at ``(x, x')``.

    ``A(x, x') = v_hat(x' - x) (x^2 / x'^2) (hat(x/x', -.) *aff u)(x) / c``.
    With ``v_hat=None`` (``v = 1``, ``v_hat = 2 pi delta``) the kernel is
    concentrated on ``x = x'`` and the coefficient of ``delta(x' - x)``, i.e.
    the multiplication-operator value at ``x``, is returned.
    """
    c = c_constant(M)
    if v_hat is None:
        return 2.0 * np.pi * weight_convolution_at(w, u, x, u_exponents, tol=tol) / c
    qv = x / xp
    conv = weight_convolution_at(w, u, x, u_exponents, q=qv, tol=tol)
    d = xp - x
    return complex(v_hat(d.c1, d.c2)) * (x.norm() ** 2 / xp.norm() ** 2) * conv / c


def kernel_general(M: MomentTable, w, f_hat, x: PlaneVector, xp: PlaneVector,
                   left: Tail, right: Tail, tol: float = DEFAULT_TOL) -> complex:
    """Experimental kernel for a general symbol ``f`` (runs at doubled tolerance).

    ``f_hat(a1, a2, b1, b2)`` is the partial Fourier transform of ``f`` in
    ``p``; the integrand tails in ``log|q|`` must be declared.
    """
    c = c_constant(M)
    qv = x / xp
    d = xp - x
    r, th = x.polar()

    def g(t, phi):
        rho = np.exp(t)
        y1, y2 = rho * np.cos(phi), rho * np.sin(phi)
        z1, z2 = _plane_div_polar(x, t, phi)
        return w.hat(qv.c1, qv.c2, -y1, -y2) * f_hat(z1, z2, d.c1, d.c2)

    val = integrate_log_polar(g, left, right, tol=2.0 * tol,
                              t_center=math.log(w.hat_scale(qv))).value
    return (x.norm() ** 2 / xp.norm() ** 2) * val / c


@dataclass(frozen=True)
class CovarianceReport:
    residual: float


def covariance_check(M: MomentTable, w, u, g0: GroupElement, phi: SampledField,
                     u_exponents=(0.0, 0.0), order: int = 3) -> CovarianceReport:
    """Compare ``U(g0) Op_u U(g0)^dagger phi`` with ``Op_{u(./q0)} phi``."""
    q0 = g0.q

    r2 = q0.norm() ** 2

    def u_moved(a, b):
        # plane division by q0, vectorised: (a, b) * conj(q0) / |q0|^2
        return u((a * q0.c1 + b * q0.c2) / r2, (b * q0.c1 - a * q0.c2) / r2)

    back = apply_unitary(inverse(g0), phi, order=order)
    mid = apply_multiplication_op(M, w, u, back, u_exponents)
    lhs = apply_unitary(g0, mid, order=order)
    rhs = apply_multiplication_op(M, w, u_moved, phi, u_exponents)
    return CovarianceReport(float(rhs.relative_l2_distance(lhs)))
