"""Moment integrals of a weight and their q-derivatives at the identity.

The generalized moment is

    Omega_{beta, nu1, nu2}(q) = int d^2y  y^-(beta+2)  y1^nu1 y2^nu2  hat(q, -y),

with ``Omega_beta = Omega_{beta,0,0}`` and ``Omega = Omega_0``.  In log-polar
coordinates ``y = e^t (cos phi, sin phi)`` the measure ``d^2y / y^(beta+2)``
becomes ``e^(-beta t) dt dphi``.

Derivatives at ``q = 1`` are computed under the integral sign: either from
analytic q-derivatives of ``hat`` supplied by the weight, or by central
differences of ``hat`` in ``q`` evaluated on the same quadrature nodes (which
is a finite-difference of ``Omega`` itself, free of quadrature noise).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MissingMomentError
from .quadrature import DEFAULT_TOL, Tail, integrate_log_polar
from .sim2 import E1, PlaneVector

FD_STEP_FIRST = 1e-4
FD_STEP_SECOND = 1e-3


@dataclass(frozen=True)
class Moment:
    value: complex
    abs_err: float


@dataclass(frozen=True)
class GradMoment:
    value: PlaneVector
    abs_err: float


def _check_indices(beta, nu1, nu2):
    if not (isinstance(nu1, (int, np.integer)) and isinstance(nu2, (int, np.integer))):
        raise DomainError("nu1 and nu2 must be integers")
    if nu1 < 0 or nu2 < 0:
        raise DomainError("nu1 and nu2 must be >= 0")
    if not math.isfinite(beta):
        raise DomainError("beta must be finite")


def _tails(w, beta, nu1, nu2, q: PlaneVector, widen: float = 0.0):
    support = w.hat_support(q)
    if support is not None:
        lo, hi = support
        if widen:
            lo, hi = lo * (1.0 - widen), hi * (1.0 + widen)
        return Tail.compact(math.log(lo)), Tail.compact(math.log(hi))
    dec = w.decay
    left = Tail.exponential(dec.small - beta + nu1 + nu2)
    if dec.large == "gaussian":
        right = Tail.gaussian()
    else:
        right = Tail.exponential(float(dec.large) + beta - nu1 - nu2)
    return left, right


def _integrate(w, beta, nu1, nu2, q, kernel, tol, sign=-1, widen=0.0,
               noise_gain=0.0) -> Moment:
    """Integrate ``kernel(x1, x2)`` (a function of ``hat``) against the moment measure.

    ``noise_gain`` is the factor by which the kernel amplifies rounding errors
    of ``hat`` (``1/h`` for a first difference, ``1/h^2`` for a second); the
    tolerance is raised to the resulting noise floor.
    """
    left, right = _tails(w, beta, nu1, nu2, q, widen)
    if noise_gain:
        q1, q2 = float(q.c1), float(q.c2)
        size = _integrate(w, beta, nu1, nu2, q,
                          lambda x1, x2: np.abs(w.hat(q1, q2, x1, x2)), 1e-3, sign, widen)
        tol = max(tol, 200.0 * np.finfo(float).eps * abs(size.value) * noise_gain)

    def g(t, phi):
        rho = np.exp(t)
        c, s = np.cos(phi), np.sin(phi)
        y1, y2 = rho * c, rho * s
        val = kernel(sign * y1, sign * y2) * np.exp(-beta * t)
        if nu1:
            val = val * y1 ** nu1
        if nu2:
            val = val * y2 ** nu2
        return val

    t0 = math.log(w.hat_scale(q))
    res = integrate_log_polar(g, left, right, tol=tol, t_center=t0)
    return Moment(res.value, res.abs_err)


def omega(w, beta: float = 0.0, nu1: int = 0, nu2: int = 0, q: PlaneVector = E1,
          tol: float = DEFAULT_TOL, sign: int = -1) -> Moment:
    """``Omega_{beta,nu1,nu2}(q)`` by adaptive polar quadrature.

    ``sign`` selects ``hat(q, -y)`` (default) or ``hat(q, +y)``.  Integrals
    whose declared decay does not guarantee convergence are refused with
    :class:`~aciq.errors.ConvergenceError`.
    """
    _check_indices(beta, nu1, nu2)
    if tol <= 0:
        raise DomainError("tol must be positive")
    if q.norm() == 0:
        raise DomainError("Omega evaluated at q = 0")
    q1, q2 = float(q.c1), float(q.c2)
    return _integrate(w, beta, nu1, nu2, q, lambda x1, x2: w.hat(q1, q2, x1, x2), tol, sign)


def _alpha_derivs_at(alpha, theta):
    if alpha.kind == "exponential":
        a = complex(alpha(theta))
        return a, 1j * alpha.mu * a, -(alpha.mu ** 2) * a
    h1, h2 = 1e-5, 1e-3
    f = lambda d: complex(alpha(theta + d))  # noqa: E731
    d1 = (4 * (f(h1 / 2) - f(-h1 / 2)) / h1 - (f(h1) - f(-h1)) / (2 * h1)) / 3
    f0 = f(0.0)
    s = lambda hh: (f(hh) - 2 * f0 + f(-hh)) / hh ** 2  # noqa: E731
    d2 = (4 * s(h2 / 2) - s(h2)) / 3
    if theta == 0.0:
        d1, d2 = alpha.derivatives()
    return f0, d1, d2


def omega_closed_form_example(nu: float, sigma: float, alpha, q: PlaneVector) -> complex:
    """``pi sigma^2 exp(nu(2 - |q| - 1/|q|)) / |q|^2 * alpha(arg q)``."""
    r, th = q.polar()
    if r == 0:
        raise DomainError("Omega evaluated at q = 0")
    return complex(math.pi * sigma ** 2 * math.exp(nu * (2.0 - r - 1.0 / r)) / r ** 2
                   * complex(alpha(th)))


def omega_closed_form_gradient(nu, sigma, alpha, q: PlaneVector = E1) -> PlaneVector:
    """Cartesian q-gradient of the closed-form ``Omega`` (exact differentiation)."""
    r, th = q.polar()
    F = math.pi * sigma ** 2 * math.exp(nu * (2.0 - r - 1.0 / r)) / r ** 2
    Fr = F * (-nu * (1.0 - 1.0 / r ** 2) - 2.0 / r)
    a, a1, _ = _alpha_derivs_at(alpha, th)
    d_r, d_th = Fr * a, F * a1
    c, s = math.cos(th), math.sin(th)
    return PlaneVector(c * d_r - s * d_th / r, s * d_r + c * d_th / r)


def omega_closed_form_laplacian(nu, sigma, alpha, q: PlaneVector = E1) -> complex:
    r, th = q.polar()
    F = math.pi * sigma ** 2 * math.exp(nu * (2.0 - r - 1.0 / r)) / r ** 2
    L = -nu * (1.0 - 1.0 / r ** 2) - 2.0 / r
    Fr = F * L
    Frr = F * (L ** 2 + (-2.0 * nu / r ** 3 + 2.0 / r ** 2))
    a, _, a2 = _alpha_derivs_at(alpha, th)
    return complex(Frr * a + Fr * a / r + F * a2 / r ** 2)


def _fd_kernels(w):
    """Central-difference q-derivatives of ``hat`` at q = 1 with one Richardson step."""
    h1, h2 = FD_STEP_FIRST, FD_STEP_SECOND

    def d1(x1, x2):
        def c(h):
            return (w.hat(1.0 + h, 0.0, x1, x2) - w.hat(1.0 - h, 0.0, x1, x2)) / (2 * h)
        return (4 * c(h1 / 2) - c(h1)) / 3

    def d2(x1, x2):
        def c(h):
            return (w.hat(1.0, h, x1, x2) - w.hat(1.0, -h, x1, x2)) / (2 * h)
        return (4 * c(h1 / 2) - c(h1)) / 3

    def lap(x1, x2):
        f0 = w.hat(1.0, 0.0, x1, x2)

        def c(h):
            return (w.hat(1.0 + h, 0.0, x1, x2) + w.hat(1.0 - h, 0.0, x1, x2)
                    + w.hat(1.0, h, x1, x2) + w.hat(1.0, -h, x1, x2) - 4 * f0) / h ** 2
        return (4 * c(h2 / 2) - c(h2)) / 3

    return d1, d2, lap


def _derivative_kernels(w, method):
    if method not in ("auto", "analytic", "fd"):
        raise DomainError(f"unknown derivative method {method!r}")
    if method != "fd":
        probe = w.hat_q_derivatives(np.array([1.0]), np.array([0.0]))
        if probe is not None:
            return tuple((lambda k: (lambda x1, x2: w.hat_q_derivatives(x1, x2)[k]))(k)
                         for k in range(3)), False
        if method == "analytic":
            raise DomainError("weight provides no analytic q-derivatives")
    return _fd_kernels(w), True


def grad_omega_gen_at_1(w, beta: float = 0.0, nu1: int = 0, nu2: int = 0,
                        tol: float = DEFAULT_TOL, method: str = "auto") -> GradMoment:
    """q-gradient at 1 of ``Omega_{beta,nu1,nu2}``."""
    _check_indices(beta, nu1, nu2)
    (k1, k2, _), fd = _derivative_kernels(w, method)
    widen = 2 * FD_STEP_SECOND if fd else 0.0
    gain = 1.0 / FD_STEP_FIRST if fd else 0.0
    a = _integrate(w, beta, nu1, nu2, E1, k1, tol, widen=widen, noise_gain=gain)
    b = _integrate(w, beta, nu1, nu2, E1, k2, tol, widen=widen, noise_gain=gain)
    return GradMoment(PlaneVector(a.value, b.value), math.hypot(a.abs_err, b.abs_err))


def grad_omega_at_1(w, tol: float = DEFAULT_TOL, method: str = "auto") -> GradMoment:
    """``grad Omega(1)``: analytic q-derivatives when available, else differences."""
    return grad_omega_gen_at_1(w, 0.0, 0, 0, tol, method)


def laplacian_omega_at_1(w, tol: float = DEFAULT_TOL, method: str = "auto") -> Moment:
    """``Laplacian Omega(1)``: analytic second derivatives or a 5-point stencil."""
    (_, _, kl), fd = _derivative_kernels(w, method)
    widen = 2 * FD_STEP_SECOND if fd else 0.0
    gain = 1.0 / FD_STEP_SECOND ** 2 if fd else 0.0
    return _integrate(w, 0.0, 0, 0, E1, kl, tol, widen=widen, noise_gain=gain)


def c_constant(w_or_table, tol: float = DEFAULT_TOL) -> complex:
    """Resolution-of-identity constant ``c = 2 pi Omega(1)``."""
    if isinstance(w_or_table, MomentTable):
        om = w_or_table.omega0
    else:
        om = omega(w_or_table, tol=tol).value
    if not (abs(om) > 0 and math.isfinite(abs(om))):
        raise DomainError(f"Omega(1) = {om} violates 0 < Omega(1) < infinity")
    return 2.0 * math.pi * om


def _gen_key(beta, nu1, nu2):
    return (float(beta), int(nu1), int(nu2))


@dataclass(frozen=True)
class MomentTable:
    """Moments at the identity that parameterize all quantized observables.

    ``omega_gen`` and ``grad_gen`` are keyed by ``(beta, nu1, nu2)`` with
    ``beta`` stored as float.  ``err`` maps entry labels to absolute error
    estimates.  ``sign_delta`` is ``|Omega(1)|_{+x} - Omega(1)|_{-x}|``.
    """

    omega0: complex
    omega_beta: dict = field(default_factory=dict)
    omega_gen: dict = field(default_factory=dict)
    grad: PlaneVector | None = None
    lap: complex | None = None
    grad_gen: dict = field(default_factory=dict)
    err: dict = field(default_factory=dict)
    sign_delta: float = 0.0
    sign_flag: bool = False

    def __post_init__(self):
        if not (abs(self.omega0) > 0 and math.isfinite(abs(self.omega0))):
            raise DomainError(f"Omega(1) = {self.omega0} violates 0 < Omega(1) < infinity")

    def beta_moment(self, beta: float) -> complex:
        if beta == 0:
            return self.omega0
        key = float(beta)
        if key in self.omega_beta:
            return self.omega_beta[key]
        raise MissingMomentError((key, 0, 0))

    def gen(self, beta, nu1, nu2) -> complex:
        key = _gen_key(beta, nu1, nu2)
        if key in self.omega_gen:
            return self.omega_gen[key]
        if nu1 == 0 and nu2 == 0:
            return self.beta_moment(beta)
        raise MissingMomentError(key)

    def gen_grad(self, beta, nu1, nu2) -> PlaneVector:
        key = _gen_key(beta, nu1, nu2)
        if key in self.grad_gen:
            return self.grad_gen[key]
        if key == (0.0, 0, 0) and self.grad is not None:
            return self.grad
        raise MissingMomentError(key)

    def require_grad(self) -> PlaneVector:
        if self.grad is None:
            raise MissingMomentError("grad Omega(1)")
        return self.grad

    def require_lap(self) -> complex:
        if self.lap is None:
            raise MissingMomentError("Laplacian Omega(1)")
        return self.lap

    def moment_records(self) -> list[dict]:
        """Rows in the moment export format, in a fixed order."""
        rows = [_record(0.0, 0, 0, self.omega0, self.err.get("omega0", 0.0))]
        for b in sorted(self.omega_beta):
            rows.append(_record(b, 0, 0, self.omega_beta[b], self.err.get(f"beta={b!r}", 0.0)))
        for key in sorted(self.omega_gen):
            rows.append(_record(*key, self.omega_gen[key], self.err.get(f"gen={key!r}", 0.0)))
        return rows


def _record(beta, nu1, nu2, value, err):
    return {"beta": float(beta), "nu1": int(nu1), "nu2": int(nu2), "q": [1.0, 0.0],
            "value": [complex(value).real, complex(value).imag], "abs_err": float(err)}


def build_moment_table(w, betas=(-2.0, -1.0, 0.5, 1.0), gen=((2.0, 1, 0), (2.0, 0, 1)),
                       tol: float = DEFAULT_TOL, method: str = "auto",
                       check_sign: bool = True, threads: int = 1) -> MomentTable:
    """Compute every moment needed by the quantizer and gauge modules.

    Independent integrals run on ``threads`` worker threads; each result is
    computed deterministically, so the table does not depend on the count.
    """
    jobs = {"omega0": lambda: omega(w, tol=tol)}
    for b in betas:
        jobs[f"beta={float(b)!r}"] = (lambda b: lambda: omega(w, b, tol=tol))(b)
    for key in gen:
        k = _gen_key(*key)
        jobs[f"gen={k!r}"] = (lambda k: lambda: omega(w, *k, tol=tol))(k)
        jobs[f"grad_gen={k!r}"] = (lambda k: lambda: grad_omega_gen_at_1(w, *k, tol=tol,
                                                                         method=method))(k)
    jobs["grad"] = lambda: grad_omega_at_1(w, tol, method)
    jobs["lap"] = lambda: laplacian_omega_at_1(w, tol, method)
    if check_sign:
        jobs["omega0_plus"] = lambda: omega(w, tol=tol, sign=+1)

    names = list(jobs)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(names, pool.map(lambda n: jobs[n](), names)))
    else:
        results = {n: jobs[n]() for n in names}

    err = {n: float(r.abs_err) for n, r in results.items()}
    omega_beta = {float(b): results[f"beta={float(b)!r}"].value for b in betas}
    omega_gen = {}
    grad_gen = {}
    for key in gen:
        k = _gen_key(*key)
        omega_gen[k] = results[f"gen={k!r}"].value
        grad_gen[k] = results[f"grad_gen={k!r}"].value
    sign_delta = 0.0
    if check_sign:
        sign_delta = abs(results["omega0_plus"].value - results["omega0"].value)
    return MomentTable(
        omega0=results["omega0"].value,
        omega_beta=omega_beta,
        omega_gen=omega_gen,
        grad=results["grad"].value,
        lap=results["lap"].value,
        grad_gen=grad_gen,
        err=err,
        sign_delta=sign_delta,
        sign_flag=sign_delta > max(tol, err["omega0"]),
    )


def example_beta_ratio(beta: float, sigma: float) -> float:
    """``Omega_beta(1) / Omega(1) = Gamma(1 - beta/2) (sigma^2/2)^(beta/2)`` for the example family."""
    if beta >= 2:
        raise DomainError("Gaussian moment ratio diverges for beta >= 2")
    return math.gamma(1.0 - beta / 2.0) * (sigma ** 2 / 2.0) ** (beta / 2.0)
