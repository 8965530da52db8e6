"""Radial spectrum of ``(P - A)^2 + K / Q^2`` in a Dirichlet disk annulus.

With ``A`` the solenoid potential of ``mu`` flux quanta and the ansatz
``phi = exp(i m theta) u(r) / sqrt(r)`` the eigenproblem reduces to

    -u'' + ((m - mu)^2 + K - 1/4) / r^2 u = E u,   u(r_min) = u(r_max) = 0,

whose small-``r_min`` limit has eigenvalues ``(j_{nu_eff,k} / r_max)^2`` with
``nu_eff = sqrt((m - mu)^2 + K)``.  The discretized operator is a symmetric
tridiagonal matrix; its lowest eigenvalues are found by Sturm-sequence
bisection and refined by Richardson extrapolation in the mesh size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np

from .errors import ConvergenceError, DomainError


@dataclass(frozen=True)
class RadialProblem:
    """Angular mode ``m``, flux ``mu`` (in quanta), strength ``K`` and the grid."""

    m: int
    mu: float
    K: float
    r_min: float = 1e-3
    r_max: float = 20.0
    n: int = 4000

    def __post_init__(self):
        if self.K < 0:
            raise DomainError(f"strength K={self.K} must be >= 0")
        if not (0 < self.r_min < self.r_max):
            raise DomainError("need 0 < r_min < r_max")
        if self.n < 16:
            raise DomainError("need at least 16 interior points")
        if int(self.m) != self.m:
            raise DomainError("angular mode m must be an integer")

    @property
    def nu_eff(self) -> float:
        return math.sqrt((self.m - self.mu) ** 2 + self.K)

    @property
    def coefficient(self) -> float:
        """``(m - mu)^2 + K - 1/4``, the strength of the ``1/r^2`` term."""
        return (self.m - self.mu) ** 2 + self.K - 0.25

    def with_n(self, n: int) -> "RadialProblem":
        return RadialProblem(self.m, self.mu, self.K, self.r_min, self.r_max, n)


def build_radial_hamiltonian(p: RadialProblem):
    """Diagonal, off-diagonal and grid of the three-point discretization.

    The grid is ``r_i = r_min + i h``, ``i = 1..n``, ``h = (r_max - r_min) / (n + 1)``.
    """
    h = (p.r_max - p.r_min) / (p.n + 1)
    r = p.r_min + h * np.arange(1, p.n + 1)
    diag = 2.0 / h ** 2 + p.coefficient / r ** 2
    off = np.full(p.n - 1, -1.0 / h ** 2)
    return diag, off, r


def sturm_count(diag, off, x: float) -> int:
    """Number of eigenvalues of the tridiagonal matrix strictly below ``x``."""
    off2 = (np.asarray(off, dtype=float) ** 2).tolist()
    diag = np.asarray(diag, dtype=float).tolist()
    # pivots are never allowed to vanish; a tiny pivot flips the next one hugely negative
    pivmin = np.finfo(float).tiny * max(1.0, max(off2, default=1.0))
    count = 0
    d = diag[0] - x
    for i in range(1, len(diag)):
        if abs(d) < pivmin:
            d = -pivmin
        if d < 0:
            count += 1
        d = diag[i] - x - off2[i - 1] / d
    if d < 0:
        count += 1
    return count


def _gershgorin(diag, off):
    a = np.abs(np.concatenate(([0.0], off)))
    b = np.abs(np.concatenate((off, [0.0])))
    return float(np.min(diag - a - b)), float(np.max(diag + a + b))


def tridiagonal_lowest(diag, off, k: int, xtol: float = 1e-13) -> np.ndarray:
    """Lowest ``k`` eigenvalues by bisection on the Sturm count.

    Each bracket is shrunk to ``xtol`` relative to the eigenvalue itself,
    with an absolute floor of a few ulps of the Gershgorin span.
    """
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    lo0, hi0 = _gershgorin(diag, off)
    floor = 4.0 * np.finfo(float).eps * max(abs(lo0), abs(hi0), 1.0)
    out = []
    lo = lo0
    for j in range(k):
        a, b = lo, hi0
        # shrink b to a point that has more than j eigenvalues below it
        while b - a > max(floor, xtol * min(abs(a), abs(b))):
            mid = 0.5 * (a + b)
            if sturm_count(diag, off, mid) > j:
                b = mid
            else:
                a = mid
        out.append(0.5 * (a + b))
        lo = a
    return np.array(out)


@dataclass(frozen=True)
class SpectrumResult:
    problem: RadialProblem
    eigenvalues: np.ndarray
    coarse: np.ndarray
    fine: np.ndarray
    error_estimate: np.ndarray


def eigen_solve(p: RadialProblem, k: int = 3, richardson: bool = True) -> SpectrumResult:
    """Lowest ``k`` Dirichlet eigenvalues on ``n`` and ``2n + 1`` points.

    Doubling ``n + 1`` halves the mesh size, so the second-order error is
    removed by ``(4 E_fine - E_coarse) / 3``; the raw difference serves as
    the error estimate.
    """
    if not 1 <= k <= p.n // 4:
        raise DomainError(f"can resolve 1..{p.n // 4} levels on {p.n} points, asked for {k}")
    coarse = tridiagonal_lowest(*build_radial_hamiltonian(p)[:2], k)
    if not richardson:
        return SpectrumResult(p, coarse, coarse, coarse, np.full(k, np.nan))
    fine = tridiagonal_lowest(*build_radial_hamiltonian(p.with_n(2 * p.n + 1))[:2], k)
    extrap = (4.0 * fine - coarse) / 3.0
    return SpectrumResult(p, extrap, coarse, fine, np.abs(fine - coarse))


# Bessel zeros ---------------------------------------------------------------

def _bessel_series_sign(nu: float, x: float, digits: int = 60) -> int:
    """Sign of ``J_nu(x) / (x/2)^nu`` from its power series in high precision."""
    with localcontext() as ctx:
        ctx.prec = digits
        z = -(Decimal(x) ** 2) / 4
        n = Decimal(nu)
        term = Decimal(1)
        total = Decimal(1)
        k = 0
        while True:
            k += 1
            term = term * z / (k * (n + k))
            total += term
            if k > 10 and abs(term) < Decimal(10) ** (-digits + 5) * max(abs(total), Decimal(1)):
                break
            if k > 5000:
                raise ConvergenceError("Bessel series did not converge", float(total), float(abs(term)))
    return (total > 0) - (total < 0)


def _series_digits(x: float) -> int:
    # terms peak near exp(x) in size; keep enough digits to resolve cancellation
    return 45 + int(x / math.log(10.0))


def bessel_zero(nu: float, k: int, tol: float = 1e-14) -> float:
    """``k``-th positive zero of ``J_nu`` (``nu >= 0``) by bracketing and bisection.

    Independent of any special-function library: the sign of ``J_nu`` is
    taken from its power series summed in decimal arithmetic.
    """
    if nu < 0 or k < 1:
        raise DomainError("need nu >= 0 and k >= 1")
    step = 0.25
    x = max(1e-6, 0.5 * nu)
    found = 0

    def sign(t):
        return _bessel_series_sign(nu, t, _series_digits(t))

    s_prev = sign(x)
    while True:
        x_next = x + step
        s_next = sign(x_next)
        if s_next != s_prev and s_next != 0:
            found += 1
            if found == k:
                a, b = x, x_next
                while b - a > tol * max(1.0, a):
                    mid = 0.5 * (a + b)
                    if sign(mid) == s_prev:
                        a = mid
                    else:
                        b = mid
                return 0.5 * (a + b)
        s_prev = s_next if s_next != 0 else s_prev
        x = x_next
        if x > 1e4:
            raise ConvergenceError("Bessel zero search exceeded range", x, math.inf)


def bessel_zero_oracle(order: float, k: int, R: float) -> np.ndarray:
    """Dirichlet disk eigenvalues ``(j_{order, i} / R)^2`` for ``i = 1..k``."""
    if R <= 0:
        raise DomainError("disk radius must be positive")
    return np.array([(bessel_zero(order, i) / R) ** 2 for i in range(1, k + 1)])


def oracle_eigenvalues(p: RadialProblem, k: int = 3) -> np.ndarray:
    return bessel_zero_oracle(p.nu_eff, k, p.r_max)


@dataclass(frozen=True)
class SpectrumComparison:
    result: SpectrumResult
    oracle: np.ndarray

    @property
    def max_rel_err(self) -> float:
        return float(np.max(self.rel_err))

    @property
    def rel_err(self) -> np.ndarray:
        return np.abs(self.result.eigenvalues - self.oracle) / np.abs(self.oracle)

    def rows(self):
        p = self.result.problem
        return [(p.m, p.mu, p.K, i + 1, float(e), float(o), float(r))
                for i, (e, o, r) in enumerate(zip(self.result.eigenvalues, self.oracle, self.rel_err))]


def spectrum_compare(p: RadialProblem, k: int = 3) -> SpectrumComparison:
    return SpectrumComparison(eigen_solve(p, k), oracle_eigenvalues(p, k))


def problem_from_gauge(G, m: int, **grid) -> RadialProblem:
    """Radial problem for gauge data ``G`` (flux in quanta, real ``K``)."""
    K = complex(G.K)
    if abs(K.imag) > 1e-10 * max(1.0, abs(K)):
        raise DomainError(f"strength {K} is not real")
    return RadialProblem(m, G.flux_quanta, K.real, **grid)
