"""Affine covariant integral quantization (ACIQ) on the punctured plane.

The package is organised by stage of the computation:

* :mod:`aciq.sim2` -- similitude group SIM(2), plane algebra, unitary action
* :mod:`aciq.fields` -- log-polar sampled fields on the punctured plane
* :mod:`aciq.weights` -- weight functions and their partial Fourier transforms
* :mod:`aciq.quadrature` -- adaptive polar quadrature engine
* :mod:`aciq.moments` -- moment integrals Omega and their derivatives at 1
* :mod:`aciq.quantizer` -- quantized observables, affine convolution, kernels
* :mod:`aciq.gauge` -- affine vector potential, flux and scalar strength
* :mod:`aciq.coherent` -- rank-one (coherent state) weights
* :mod:`aciq.spectral` -- radial Hamiltonian, Sturm bisection, Bessel zeros
* :mod:`aciq.cli` -- the ``aciq`` command line tool
"""

from .errors import (
    ACIQError,
    ConfigError,
    ConvergenceError,
    DomainError,
    ExtrapolationError,
    GaugeConditionError,
    MissingMomentError,
)
from .sim2 import (
    GroupElement,
    PlaneVector,
    act_on_plane,
    apply_unitary,
    compose,
    inverse,
    plane_inv,
    plane_mul,
)

__version__ = "0.1.0"

__all__ = [
    "ACIQError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "ExtrapolationError",
    "GaugeConditionError",
    "MissingMomentError",
    "GroupElement",
    "PlaneVector",
    "act_on_plane",
    "apply_unitary",
    "compose",
    "inverse",
    "plane_inv",
    "plane_mul",
]
