"""Weight functions on phase space and their partial Fourier transforms.

A weight ``w(q, p)`` lives on the affine phase space ``R^2_* x R^2``.  Its
partial Fourier transform in the momentum variable is

    hat(q, x) = (1 / 2 pi) int d^2p  exp(-i p.x)  w(q, p),

and everything downstream (moments, operators, gauge data) only needs
``hat``.  Weight objects share a small duck-typed interface:

``weight(q1, q2, p1, p2)``, ``hat(q1, q2, x1, x2)``
    vectorised evaluators returning complex arrays;
``hat_q_derivatives(x1, x2)``
    first and second q-derivatives of ``hat`` at ``q = 1`` or ``None``;
``decay``, ``hat_scale(q)``, ``hat_support(q)``
    information for the quadrature planner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError
from .quadrature import Tail, integrate_log_polar
from .sim2 import PlaneVector, plane_inv, plane_mul


@dataclass(frozen=True)
class AlphaSpec:
    """Angular factor ``alpha(theta)`` of a weight.

    Either ``exponential`` (``alpha = exp(i mu theta)``) or ``tabulated``
    (user callable, optionally with declared ``alpha'(0)``, ``alpha''(0)``).
    """

    kind: str
    mu: float = 0.0
    func: Callable | None = field(default=None, compare=False, repr=False)
    d1: complex | None = None
    d2: complex | None = None
    samples: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("exponential", "tabulated"):
            raise DomainError(f"unknown alpha kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.func is None:
                raise DomainError("tabulated alpha needs a callable")
            a0 = complex(self.func(0.0))
            if abs(a0 - 1.0) > 1e-12:
                raise DomainError(f"alpha(0) must be 1, got {a0}")
            th = np.linspace(-np.pi, np.pi, 64)
            viol = np.max(np.abs(np.conj(self(th)) - self(-th)))
            if viol > 1e-12:
                raise DomainError(
                    f"alpha violates conj(alpha(theta)) = alpha(-theta) by {viol:.2e}"
                )

    @classmethod
    def exponential(cls, mu: float) -> "AlphaSpec":
        return cls("exponential", mu=float(mu))

    @classmethod
    def tabulated(cls, func, d1=None, d2=None) -> "AlphaSpec":
        return cls("tabulated", func=func, d1=d1, d2=d2)

    @classmethod
    def from_samples(cls, theta, values, d1=None, d2=None) -> "AlphaSpec":
        """Periodic cubic interpolation of ``alpha`` sampled on ``[-pi, pi]``."""
        from scipy.interpolate import CubicSpline

        theta = np.asarray(theta, dtype=float)
        values = np.asarray(values, dtype=complex)
        if theta.size < 4:
            raise DomainError("tabulated alpha needs at least 4 samples")
        try:
            spline = CubicSpline(theta, values, bc_type="periodic")
        except ValueError as exc:
            raise DomainError(f"tabulated alpha is not 2 pi periodic: {exc}") from exc

        def func(th):
            th = np.asarray(th, dtype=float)
            return spline(np.mod(th + np.pi, 2 * np.pi) - np.pi)

        return cls("tabulated", func=func, d1=d1, d2=d2,
                   samples=(tuple(theta.tolist()), tuple(values.tolist())))

    def __call__(self, theta):
        if self.kind == "exponential":
            return np.exp(1j * self.mu * np.asarray(theta, dtype=float))
        return np.asarray(self.func(np.asarray(theta, dtype=float)), dtype=complex)

    def derivatives(self) -> tuple[complex, complex]:
        """``(alpha'(0), alpha''(0))``: exact, declared, or Richardson differences."""
        if self.kind == "exponential":
            return 1j * self.mu, -(self.mu ** 2) + 0j
        d1, d2 = self.d1, self.d2
        if d1 is None:
            d1 = _richardson_first(lambda h: complex(self(h)), 1e-5)
        if d2 is None:
            d2 = _richardson_second(lambda h: complex(self(h)), 1e-3)
        return complex(d1), complex(d2)

    def to_dict(self) -> dict:
        if self.kind == "exponential":
            return {"kind": "exponential", "mu": self.mu}
        out = {"kind": "tabulated"}
        if self.samples is not None:
            out["theta"] = list(self.samples[0])
            out["values"] = [[v.real, v.imag] for v in self.samples[1]]
        if self.d1 is not None:
            out["d1"] = [complex(self.d1).real, complex(self.d1).imag]
        if self.d2 is not None:
            out["d2"] = [complex(self.d2).real, complex(self.d2).imag]
        return out


def _richardson_first(f, h):
    def d(hh):
        return (f(hh) - f(-hh)) / (2 * hh)
    return (4 * d(h / 2) - d(h)) / 3


def _richardson_second(f, h):
    f0 = f(0.0)

    def d(hh):
        return (f(hh) - 2 * f0 + f(-hh)) / hh ** 2
    return (4 * d(h / 2) - d(h)) / 3


@dataclass(frozen=True)
class Decay:
    """Declared behaviour of ``hat(q, x)`` in ``|x|``.

    ``small`` is the exponent ``a`` with ``hat ~ |x|^a`` as ``x -> 0``;
    ``large`` is ``"gaussian"`` or an exponent ``b`` with ``hat ~ |x|^-b``.
    """

    small: float = 2.0
    large: float | str = "gaussian"

    def to_dict(self) -> dict:
        return {"small": self.small, "large": self.large}


def _polar_arrays(c1, c2):
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    return np.hypot(c1, c2), np.arctan2(c2, c1)


class ExampleWeight:
    """The localized example family

    ``w(q, p) = exp(2 nu - nu(|q| + 1/|q|)) / |q| * alpha(arg q)
    * (1 - |q| p^2 / (2 sigma^2)) * exp(-|q| p^2 / (2 sigma^2))``.
    """

    family = "example"

    def __init__(self, nu: float, sigma: float, alpha: AlphaSpec | None = None,
                 decay: Decay | None = None):
        if not (nu > 0 and sigma > 0):
            raise DomainError(f"example weight needs nu > 0 and sigma > 0, got {nu}, {sigma}")
        self.nu = float(nu)
        self.sigma = float(sigma)
        self.alpha = alpha if alpha is not None else AlphaSpec.exponential(0.0)
        self.decay = decay if decay is not None else Decay(2.0, "gaussian")

    def __repr__(self):
        return f"ExampleWeight(nu={self.nu}, sigma={self.sigma}, alpha={self.alpha!r})"

    def _radial_prefactor(self, r):
        # combined exponent so that the value at r = 1 is exactly 1
        return np.exp(self.nu * (2.0 - r - 1.0 / r)) / r

    def weight(self, q1, q2, p1, p2):
        r, th = _polar_arrays(q1, q2)
        if np.any(r == 0):
            raise DomainError("weight evaluated at q = 0")
        p2sq = np.asarray(p1, dtype=float) ** 2 + np.asarray(p2, dtype=float) ** 2
        z = r * p2sq / (2.0 * self.sigma ** 2)
        return self._radial_prefactor(r) * self.alpha(th) * (1.0 - z) * np.exp(-z)

    def hat(self, q1, q2, x1, x2):
        r, th = _polar_arrays(q1, q2)
        if np.any(r == 0):
            raise DomainError("weight transform evaluated at q = 0")
        x2sq = np.asarray(x1, dtype=float) ** 2 + np.asarray(x2, dtype=float) ** 2
        s4 = self.sigma ** 4
        return (self._radial_prefactor(r) * self.alpha(th)
                * s4 * x2sq / (2.0 * r ** 2) * np.exp(-self.sigma ** 2 * x2sq / (2.0 * r)))

    def hat_q_derivatives(self, x1, x2):
        """``(d/dq1, d/dq2, Laplacian_q)`` of ``hat(q, x)`` at ``q = 1``."""
        a1, a2 = self.alpha.derivatives()
        s = self.sigma ** 2 * (np.asarray(x1, dtype=float) ** 2
                               + np.asarray(x2, dtype=float) ** 2) / 2.0
        base = self.sigma ** 2 * s * np.exp(-s)
        d_r = base * (s - 3.0)
        d_rr = base * ((s - 3.0) ** 2 + 3.0 - 2.0 * self.nu - 2.0 * s)
        # at |q| = 1 the polar derivatives are Cartesian: d1 = d_r, d2 = d_theta
        return d_r + 0j, a1 * base, d_rr + d_r + a2 * base

    def hat_scale(self, q: PlaneVector) -> float:
        return math.sqrt(2.0 * q.norm()) / self.sigma

    def hat_support(self, q: PlaneVector):
        return None

    def to_dict(self) -> dict:
        return {"family": "example", "nu": self.nu, "sigma": self.sigma,
                "alpha": self.alpha.to_dict(), "decay": self.decay.to_dict()}


class CustomWeight:
    """Weight given by user callables; a missing transform is computed numerically.

    ``weight_fn(q1, q2, p1, p2)`` and ``hat_fn(q1, q2, x1, x2)`` must be
    vectorised.  ``p_decay`` declares the large-|p| behaviour of the weight
    (``"gaussian"`` or a power exponent) for the numerical transform.
    """

    family = "custom"

    def __init__(self, weight_fn=None, hat_fn=None, decay: Decay | None = None,
                 p_decay: float | str = "gaussian", scale: float = 1.0,
                 hat_derivatives=None, tol: float = 1e-12):
        if weight_fn is None and hat_fn is None:
            raise DomainError("custom weight needs a weight or a transform callable")
        self._weight_fn = weight_fn
        self._hat_fn = hat_fn
        self._hat_derivatives = hat_derivatives
        self.decay = decay if decay is not None else Decay()
        self.p_decay = p_decay
        self.scale = float(scale)
        self.tol = tol

    def weight(self, q1, q2, p1, p2):
        if self._weight_fn is not None:
            return np.asarray(self._weight_fn(q1, q2, p1, p2), dtype=complex)
        return _pointwise(self._weight_from_hat, q1, q2, p1, p2)

    def hat(self, q1, q2, x1, x2):
        if self._hat_fn is not None:
            return np.asarray(self._hat_fn(q1, q2, x1, x2), dtype=complex)
        return _pointwise(self._hat_from_weight, q1, q2, x1, x2)

    def hat_q_derivatives(self, x1, x2):
        if self._hat_derivatives is None:
            return None
        return self._hat_derivatives(x1, x2)

    def hat_scale(self, q: PlaneVector) -> float:
        return self.scale

    def hat_support(self, q: PlaneVector):
        return None

    def _hat_from_weight(self, q1, q2, x1, x2) -> complex:
        return numerical_hat(self._weight_fn, q1, q2, x1, x2, self.p_decay,
                             tol=self.tol, scale=1.0 / self.scale)

    def _weight_from_hat(self, q1, q2, p1, p2) -> complex:
        def integrand(t, phi):
            rho = np.exp(t)
            y1, y2 = rho * np.cos(phi), rho * np.sin(phi)
            return rho ** 2 * np.exp(1j * (p1 * y1 + p2 * y2)) * self._hat_fn(q1, q2, y1, y2)

        right = Tail.gaussian() if self.decay.large == "gaussian" else \
            Tail.exponential(float(self.decay.large) - 2.0)
        res = integrate_log_polar(integrand, Tail.exponential(self.decay.small + 2.0), right,
                                  tol=self.tol, t_center=math.log(self.scale))
        return res.value / (2.0 * np.pi)

    def to_dict(self) -> dict:
        return {"family": "custom", "decay": self.decay.to_dict()}


def _pointwise(func, a1, a2, b1, b2):
    arrs = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a1, a2, b1, b2)))
    out = np.empty(arrs[0].shape, dtype=complex)
    for idx in np.ndindex(out.shape):
        out[idx] = func(*(float(a[idx]) for a in arrs))
    return out


def numerical_hat(weight_fn, q1, q2, x1, x2, p_decay="gaussian", tol=1e-12, scale=1.0):
    """``(1/2pi) int d^2p exp(-i p.x) w(q, p)`` by polar quadrature in ``p``."""

    def integrand(t, phi):
        rho = np.exp(t)
        p1, p2 = rho * np.cos(phi), rho * np.sin(phi)
        return rho ** 2 * np.exp(-1j * (p1 * x1 + p2 * x2)) * weight_fn(q1, q2, p1, p2)

    right = Tail.gaussian() if p_decay == "gaussian" else Tail.exponential(float(p_decay) - 2.0)
    res = integrate_log_polar(integrand, Tail.exponential(2.0), right, tol=tol,
                              t_center=math.log(scale))
    return res.value / (2.0 * np.pi)


def eval_weight(w, q: PlaneVector, p: PlaneVector) -> complex:
    """``w(q, p)`` at one phase-space point."""
    if q.norm() == 0:
        raise DomainError("weight evaluated at q = 0")
    return complex(w.weight(q.c1, q.c2, p.c1, p.c2))


def eval_weight_hat(w, q: PlaneVector, x: PlaneVector) -> complex:
    """Partial Fourier transform ``hat(q, x)`` at one point."""
    if q.norm() == 0:
        raise DomainError("weight transform evaluated at q = 0")
    return complex(w.hat(q.c1, q.c2, x.c1, x.c2))


@dataclass(frozen=True)
class SymmetryReport:
    max_violation: float
    n_samples: int


def sample_phase_space(n: int, seed: int = 0):
    """Deterministic random phase-space points: |q| log-uniform in [0.2, 5]."""
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(math.log(0.2), math.log(5.0), n))
    th = rng.uniform(-np.pi, np.pi, n)
    p = rng.uniform(-3.0, 3.0, (n, 2))
    return r * np.cos(th), r * np.sin(th), p[:, 0], p[:, 1]


def check_symmetry(w, n_samples: int = 100, seed: int = 0) -> SymmetryReport:
    """Largest ``|w(q, p) - conj(w(q^-1, -q* p)) / |q|^2|`` over random points."""
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    q1, q2, p1, p2 = sample_phase_space(n_samples, seed)
    worst = 0.0
    for i in range(n_samples):
        q = PlaneVector(q1[i], q2[i])
        p = PlaneVector(p1[i], p2[i])
        lhs = eval_weight(w, q, p)
        qi = plane_inv(q)
        pp = -plane_mul(q.conj(), p)
        rhs = np.conj(eval_weight(w, qi, pp)) / q.norm() ** 2
        worst = max(worst, abs(lhs - rhs))
    return SymmetryReport(float(worst), n_samples)


@dataclass(frozen=True)
class LocalizationProfile:
    """``|w|`` on a ``(q1, p1, p2)`` grid (``q2 = 0``), normalized to its maximum."""

    q: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    values: np.ndarray
    argmax: tuple[float, float, float, float]

    def level_set_count(self, level: float = 0.5) -> int:
        return int(np.count_nonzero(self.values >= level))

    def rows(self):
        """Iterate ``(q1, q2, p1, p2, value)`` in C order."""
        for i, qv in enumerate(self.q):
            for j, a in enumerate(self.p1):
                for k, b in enumerate(self.p2):
                    yield qv, 0.0, a, b, self.values[i, j, k]


def default_localization_axes(q_max=3.0, dq=0.05, p_max=8.0, dp=0.5):
    n_q = int(round(q_max / dq))
    n_p = int(round(p_max / dp))
    q = dq * np.arange(1, n_q + 1)
    p = dp * np.arange(-n_p, n_p + 1)
    return q, p, p.copy()


def localization_profile(w, q=None, p1=None, p2=None) -> LocalizationProfile:
    """Normalized ``|w(q, p)|`` on a grid along the positive q1 axis."""
    dq, dp1, dp2 = default_localization_axes()
    q = dq if q is None else np.asarray(q, dtype=float)
    p1 = dp1 if p1 is None else np.asarray(p1, dtype=float)
    p2 = dp2 if p2 is None else np.asarray(p2, dtype=float)
    if np.any(q <= 0):
        raise DomainError("localization grid must exclude q = 0")
    Q, A, B = np.meshgrid(q, p1, p2, indexing="ij")
    vals = np.abs(w.weight(Q, np.zeros_like(Q), A, B))
    vmax = vals.max()
    if not vmax > 0:
        raise DomainError("weight vanishes on the whole grid")
    i, j, k = np.unravel_index(int(np.argmax(vals)), vals.shape)
    values = vals / vmax
    return LocalizationProfile(q, p1, p2, values,
                               (float(q[i]), 0.0, float(p1[j]), float(p2[k])))


def weight_from_dict(doc: dict):
    """Build a weight from its JSON description (see README for the schema)."""
    fam = doc.get("family")
    if fam == "example":
        alpha_doc = doc.get("alpha", {"kind": "exponential", "mu": 0.0})
        alpha = alpha_from_dict(alpha_doc)
        dec = doc.get("decay", {})
        decay = Decay(float(dec.get("small", 2.0)), dec.get("large", "gaussian"))
        return ExampleWeight(doc["nu"], doc["sigma"], alpha, decay)
    if fam == "coherent":
        from .coherent import state_from_dict, weight_from_state
        return weight_from_state(state_from_dict(doc["state"]))
    raise ConfigError(f"unknown weight family {fam!r}")


def alpha_from_dict(doc: dict) -> AlphaSpec:
    kind = doc.get("kind")
    if kind == "exponential":
        return AlphaSpec.exponential(doc["mu"])
    if kind == "tabulated":
        vals = [complex(a, b) for a, b in doc["values"]]
        d1 = complex(*doc["d1"]) if "d1" in doc else None
        d2 = complex(*doc["d2"]) if "d2" in doc else None
        return AlphaSpec.from_samples(doc["theta"], vals, d1, d2)
    raise ConfigError(f"unknown alpha kind {kind!r}")
