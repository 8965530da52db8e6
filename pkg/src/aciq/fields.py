"""Sampled complex fields on log-polar grids of the punctured plane.

A grid point is ``x = exp(t) * (cos theta, sin theta)`` with ``t`` uniform on
``[log r_min, log r_max]`` (end points included) and ``theta`` uniform and
periodic on ``[0, 2 pi)``.  The Euclidean measure is
``d^2x = exp(2 t) dt dtheta``; the invariant measure ``d^2x / x^2`` is just
``dt dtheta``, which is why affine convolutions become ordinary convolutions
in these coordinates.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DomainError, ExtrapolationError


@dataclass(frozen=True)
class LogPolarGrid:
    r_min: float
    r_max: float
    n_r: int
    n_theta: int

    def __post_init__(self):
        if not (0.0 < self.r_min < self.r_max):
            raise DomainError(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")
        if self.n_r < 2 or self.n_theta < 3:
            raise DomainError("log-polar grid needs n_r >= 2 and n_theta >= 3")

    @property
    def t(self) -> np.ndarray:
        return np.linspace(np.log(self.r_min), np.log(self.r_max), self.n_r)

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def dt(self) -> float:
        return (np.log(self.r_max) - np.log(self.r_min)) / (self.n_r - 1)

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    def mesh(self):
        """Return ``(t, theta)`` arrays of shape ``(n_r, n_theta)``."""
        return np.meshgrid(self.t, self.theta, indexing="ij")

    def cartesian(self):
        t, th = self.mesh()
        r = np.exp(t)
        return r * np.cos(th), r * np.sin(th)

    def measure(self) -> np.ndarray:
        """Quadrature weights for ``d^2x`` (trapezoid in t, uniform in theta)."""
        wt = np.full(self.n_r, self.dt)
        wt[0] *= 0.5
        wt[-1] *= 0.5
        r2 = np.exp(2.0 * self.t)
        return np.outer(wt * r2, np.full(self.n_theta, self.dtheta))


@dataclass(frozen=True)
class SampledField:
    """Complex samples ``values[i, j]`` of a field at grid node ``(t_i, theta_j)``."""

    grid: LogPolarGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n_r, self.grid.n_theta):
            raise DomainError(
                f"field shape {vals.shape} does not match grid "
                f"({self.grid.n_r}, {self.grid.n_theta})"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: LogPolarGrid, func) -> "SampledField":
        """Sample ``func(x1, x2)`` (vectorised) on ``grid``."""
        x1, x2 = grid.cartesian()
        return cls(grid, np.asarray(func(x1, x2), dtype=complex))

    def with_values(self, values) -> "SampledField":
        return SampledField(self.grid, values)

    def inner(self, other: "SampledField") -> complex:
        """``<self|other> = int conj(self) other d^2x`` by grid quadrature."""
        if other.grid != self.grid:
            raise DomainError("fields live on different grids")
        return complex(np.sum(self.grid.measure() * np.conj(self.values) * other.values))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.grid.measure() * np.abs(self.values) ** 2)))

    def relative_l2_distance(self, other: "SampledField") -> float:
        diff = self.with_values(self.values - other.values)
        return diff.norm() / self.norm()

    def interpolate(self, t, theta, order: int = 1, zero_pad: bool = True) -> np.ndarray:
        """Evaluate the field at log-polar points ``(t, theta)``.

        Interpolation is spline-based of the given ``order`` (1 = bilinear) and
        periodic in theta.  Points with ``t`` outside the sampled range are
        set to zero when ``zero_pad`` is true, otherwise
        :class:`ExtrapolationError` is raised.
        """
        if order not in (1, 3):
            raise DomainError("interpolation order must be 1 or 3")
        g = self.grid
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        it = (t - g.t[0]) / g.dt
        outside = (it < -1e-9) | (it > g.n_r - 1 + 1e-9)
        if np.any(outside) and not zero_pad:
            raise ExtrapolationError(
                f"{int(outside.sum())} evaluation points fall outside the sampled "
                f"radial range [{g.r_min}, {g.r_max}]"
            )
        ith = np.mod(theta, 2.0 * np.pi) / g.dtheta
        # periodic padding in theta so that the spline sees a wrapped signal
        pad = 4
        wrapped = np.concatenate(
            [self.values[:, -pad:], self.values, self.values[:, :pad]], axis=1
        )
        coords = np.array([np.clip(it, 0.0, g.n_r - 1), ith + pad])
        coords = coords.reshape(2, -1)
        kw = dict(order=order, mode="nearest", prefilter=(order > 1))
        re = ndimage.map_coordinates(wrapped.real, coords, **kw)
        im = ndimage.map_coordinates(wrapped.imag, coords, **kw)
        out = (re + 1j * im).reshape(t.shape)
        return np.where(outside, 0.0, out)

    def to_csv(self) -> str:
        """Serialise as CSV rows ``r, theta, re, im``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "theta", "re", "im"])
        r = np.exp(self.grid.t)
        for i in range(self.grid.n_r):
            for j, th in enumerate(self.grid.theta):
                v = self.values[i, j]
                writer.writerow([repr(float(r[i])), repr(float(th)),
                                 repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, grid: LogPolarGrid) -> "SampledField":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        vals = np.array([float(a) + 1j * float(b) for _, _, a, b in rows])
        return cls(grid, vals.reshape(grid.n_r, grid.n_theta))
