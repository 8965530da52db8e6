import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aciq.coherent import (CoherentWeight, GaussianRing, StateSpec, TabulatedRadial,
                           gauge_from_state, omega_from_state, state_from_dict, state_means,
                           weight_from_state)
from aciq.errors import ConfigError, DomainError
from aciq.gauge import vector_potential_matrix_form
from aciq.moments import build_moment_table, omega
from aciq.sim2 import PlaneVector


def ring_state(center=1.0, width=0.1, mu=0):
    return StateSpec.create(GaussianRing(center, width), mu)


@pytest.mark.parametrize("idx", [0, 1])
def test_ring_means_match_frozen_values(oracle, idx):
    ref = oracle["ring"][idx]
    s = ring_state(ref["center"], ref["width"])
    m = state_means(s)
    assert abs(m.norm2 - 1.0) < 1e-12
    assert abs(m.inv_q2 - ref["inv_q2"]) < 1e-10 * ref["inv_q2"]
    assert abs(m.grad_g2 - ref["grad_g2"]) < 1e-10 * ref["grad_g2"]
    assert abs(omega_from_state(s, with_phase=False).real - ref["omega_g1"]) < 1e-10 * ref["omega_g1"]


def test_identity_moment_is_two_pi_mean_inverse_square():
    s = ring_state(mu=1)
    w = weight_from_state(s)
    m = state_means(s)
    assert abs(omega(w).value - 2 * math.pi * m.inv_q2) < 1e-9
    assert abs(omega_from_state(s) - 2 * math.pi * m.inv_q2) < 1e-10


@settings(max_examples=15, deadline=None)
@given(r=st.floats(0.92, 1.08), th=st.floats(-math.pi, math.pi), mu=st.integers(-2, 2))
def test_phase_factorizes(r, th, mu):
    s = ring_state(mu=mu)
    q = PlaneVector.from_polar(r, th)
    full = omega_from_state(s, q)
    radial = omega_from_state(s, q, with_phase=False)
    assert abs(full - cmath.exp(1j * mu * th) * radial) < 1e-9 * max(abs(radial), 1e-3)


def test_generic_quadrature_matches_literal_overlap_off_identity():
    s = ring_state(mu=1)
    w = weight_from_state(s)
    for q in (PlaneVector(1.05, 0.02), PlaneVector(0.97, -0.04)):
        assert abs(omega(w, q=q).value - omega_from_state(s, q)) < 1e-9


def test_overlap_and_transform_routes_agree():
    s = ring_state(mu=1)
    w = weight_from_state(s)
    rng = np.random.default_rng(3)
    for _ in range(20):
        q = PlaneVector.from_polar(rng.uniform(0.9, 1.1), rng.uniform(-math.pi, math.pi))
        p1, p2 = rng.normal(0.0, 2.0, 2)
        a = w.weight(q.c1, q.c2, p1, p2)
        b = w.weight_from_transform(q.c1, q.c2, p1, p2)
        assert abs(a - b) < 1e-6


def test_analytic_derivatives_match_differences():
    s = ring_state(mu=1)
    w = CoherentWeight(s)
    Ma = build_moment_table(w, betas=(), gen=(), method="analytic", check_sign=False)
    Mf = build_moment_table(w, betas=(), gen=(), method="fd", check_sign=False)
    scale = abs(Ma.omega0)
    assert abs(Ma.grad.c1 - Mf.grad.c1) < 1e-6 * scale
    assert abs(Ma.grad.c2 - Mf.grad.c2) < 1e-6 * scale
    assert abs(Ma.lap - Mf.lap) < 1e-5 * scale


def test_real_state_has_no_vector_potential_and_mean_ratio_strength(oracle):
    s = ring_state()
    rep = gauge_from_state(s)
    M = build_moment_table(weight_from_state(s), betas=(), gen=(), check_sign=False)
    for x in (PlaneVector(0.5, 0.5), PlaneVector(-1.2, 0.3), PlaneVector(0.1, -2.0)):
        A = vector_potential_matrix_form(M, x)
        assert math.hypot(abs(A.c1), abs(A.c2)) < 1e-10
        B = rep.vector_potential_means(x)
        assert math.hypot(abs(B.c1), abs(B.c2)) < 1e-10
    k_ref = rep.means.p2 / rep.means.inv_q2
    assert abs(rep.K_moments - k_ref) < 1e-6 * k_ref
    assert abs(rep.K_moments - oracle["ring"][0]["K"]) < 1e-6 * oracle["ring"][0]["K"]
    assert rep.gauge.flux == 0
    assert math.isnan(rep.flux_ratio.real)


@pytest.mark.parametrize("mu", [1, 2])
def test_phase_state_strength_and_flux_routes(oracle, mu):
    s = ring_state(mu=mu)
    rep = gauge_from_state(s)
    ref = oracle["ring"][0]
    assert abs(rep.K_moments - ref["K"]) < 1e-6 * ref["K"]
    assert abs(rep.K_means - rep.K_moments) < 1e-6 * ref["K"]
    assert abs(rep.flux_log_derivative - 2 * math.pi * mu) < 1e-8
    assert abs(rep.flux_phase_state - 2 * math.pi * mu * ref["omega_g1"]) < 1e-8
    assert abs(rep.flux_ratio - ref["omega_g1"]) < 1e-6 * ref["omega_g1"]
    assert abs(rep.lap_literal - rep.lap_moments) < 1e-8 * abs(rep.lap_moments)


def test_printed_phase_state_strength_disagrees_with_quadrature():
    rep = gauge_from_state(ring_state(mu=1))
    assert abs(rep.K_phase_state_formula - rep.K_moments.real) > 200.0


def test_strength_is_scale_invariant(oracle):
    a = gauge_from_state(ring_state(1.0, 0.1))
    b = gauge_from_state(ring_state(2.0, 0.2))
    assert abs(a.K_moments - b.K_moments) < 1e-8 * abs(a.K_moments)
    assert abs(b.K_moments - oracle["ring"][1]["K"]) < 1e-6 * oracle["ring"][1]["K"]


def test_norm_rescaled_when_close_and_rejected_when_far():
    g = GaussianRing(1.0, 0.1)
    g.scale *= 1.0005
    s = StateSpec.create(g, 0)
    assert abs(s.rescaled_by - 1 / 1.0005) < 1e-9
    assert abs(state_means(s).norm2 - 1.0) < 1e-10
    g2 = GaussianRing(1.0, 0.1)
    g2.scale *= 1.01
    with pytest.raises(DomainError):
        StateSpec.create(g2, 0)


def test_weight_from_state_rechecks_norm():
    s = ring_state()
    s.g.scale *= 1.0001
    with pytest.raises(DomainError):
        weight_from_state(s)


def test_fractional_winding_rejected():
    with pytest.raises(DomainError):
        StateSpec.create(GaussianRing(1.0, 0.1), 0.5)


def test_ring_touching_origin_rejected():
    with pytest.raises(DomainError):
        GaussianRing(0.5, 0.1)
    with pytest.raises(DomainError):
        GaussianRing(1.0, 0.0)


def test_tabulated_profile_reproduces_ring():
    ring = GaussianRing(1.0, 0.1)
    lo, hi = ring.support
    r = np.linspace(lo, hi, 801)
    s = StateSpec.create(TabulatedRadial(r, ring(r)), 1)
    a = state_means(s)
    b = state_means(StateSpec.create(GaussianRing(1.0, 0.1), 1))
    assert abs(a.inv_q2 - b.inv_q2) < 1e-6
    assert abs(a.grad_g2 - b.grad_g2) < 1e-3 * b.grad_g2
    with pytest.raises(DomainError):
        TabulatedRadial([0.0, 1.0, 2.0, 3.0], [0, 1, 1, 0])


def test_state_from_dict_round_trip():
    s = state_from_dict({"g": {"kind": "gaussian_ring", "center": 1.0, "width": 0.1}, "mu": 2})
    assert s.mu == 2.0
    again = state_from_dict(s.to_dict())
    assert again.to_dict() == s.to_dict()
    with pytest.raises(ConfigError):
        state_from_dict({"g": {"kind": "hollow"}})


def test_weight_at_identity_is_squared_norm():
    w = weight_from_state(ring_state(mu=1))
    assert abs(w.weight(1.0, 0.0, 0.0, 0.0) - 1.0) < 1e-9
