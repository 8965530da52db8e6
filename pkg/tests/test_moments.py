import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aciq.errors import DomainError, MissingMomentError
from aciq.moments import (MomentTable, build_moment_table, c_constant, example_beta_ratio,
                          grad_omega_at_1, laplacian_omega_at_1, omega,
                          omega_closed_form_example, omega_closed_form_gradient,
                          omega_closed_form_laplacian)
from aciq.sim2 import PlaneVector
from aciq.weights import AlphaSpec, ExampleWeight


def example(nu=1.0, sigma=3.5, mu=1.0):
    return ExampleWeight(nu, sigma, AlphaSpec.exponential(mu))


@pytest.mark.parametrize("nu,sigma", [(1, 3.5), (16, 3.5), (64, 1.0)])
def test_omega_at_identity_is_pi_sigma_squared(nu, sigma):
    val = omega(example(nu, sigma)).value
    assert abs(val - math.pi * sigma ** 2) / (math.pi * sigma ** 2) < 1e-8


def test_beta_moments_match_frozen_quadrature_and_gamma_formula(oracle):
    w = example(1.0, 3.5)
    om1 = omega(w).value
    for row in oracle["omega_beta"]:
        got = omega(w, row["beta"]).value
        assert abs(got - row["gamma_formula"]) / row["gamma_formula"] < 1e-8
        assert abs(row["quadrature"] - row["gamma_formula"]) / row["gamma_formula"] < 1e-8
        ratio = example_beta_ratio(row["beta"], 3.5)
        assert abs(got / om1 - ratio) < 1e-7 * ratio


def test_beta_ratio_rejects_divergent_orders():
    with pytest.raises(DomainError):
        example_beta_ratio(2.0, 1.0)


def test_odd_first_moments_vanish_for_radial_transform():
    w = example(1.0, 3.5)
    assert abs(omega(w, 2.0, 1, 0).value) < 1e-10
    assert abs(omega(w, 2.0, 0, 1).value) < 1e-10


def test_sign_convention_is_immaterial_for_even_transform():
    w = example(1.0, 3.5)
    assert abs(omega(w, sign=+1).value - omega(w, sign=-1).value) < 1e-12


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.3, 3.0), th=st.floats(-math.pi, math.pi))
def test_closed_form_matches_quadrature_off_identity(r, th):
    w = example(1.0, 3.5, mu=1.0)
    q = PlaneVector.from_polar(r, th)
    got = omega(w, q=q).value
    want = omega_closed_form_example(1.0, 3.5, w.alpha, q)
    assert abs(got - want) <= 1e-8 * max(abs(want), 1e-300) + 1e-14


@pytest.mark.parametrize("nu,mu", [(1.0, 1.0), (4.0, 0.5), (16.0, 2.0)])
def test_analytic_and_difference_derivatives_agree(nu, mu):
    w = example(nu, 3.5, mu)
    ga = grad_omega_at_1(w, method="analytic").value
    gf = grad_omega_at_1(w, method="fd").value
    gc = omega_closed_form_gradient(nu, 3.5, w.alpha)
    scale = abs(omega(w).value)
    for a, b, c in ((ga.c1, gf.c1, gc.c1), (ga.c2, gf.c2, gc.c2)):
        assert abs(a - b) < 1e-6 * scale
        assert abs(a - c) < 1e-8 * scale
    la = laplacian_omega_at_1(w, method="analytic").value
    lf = laplacian_omega_at_1(w, method="fd").value
    lc = omega_closed_form_laplacian(nu, 3.5, w.alpha)
    assert abs(la - lf) < 1e-6 * scale
    assert abs(la - lc) < 1e-8 * scale


def test_log_gradient_and_laplacian_structure():
    nu, sigma, mu = 2.0, 3.5, 1.5
    w = example(nu, sigma, mu)
    om = omega(w).value
    g = grad_omega_at_1(w).value
    assert abs(g.c1 / om + 2.0) < 1e-8
    assert abs(g.c2 / om - 1j * mu) < 1e-8
    lap = laplacian_omega_at_1(w).value
    assert abs(lap / om - (4.0 - 2.0 * nu - mu ** 2)) < 1e-8


def test_unknown_derivative_method_rejected():
    with pytest.raises(DomainError):
        grad_omega_at_1(example(), method="spline")


def test_index_validation():
    w = example()
    with pytest.raises(DomainError):
        omega(w, 0.0, -1, 0)
    with pytest.raises(DomainError):
        omega(w, 0.0, 1.5, 0)
    with pytest.raises(DomainError):
        omega(w, q=PlaneVector(0.0, 0.0))
    with pytest.raises(DomainError):
        omega(w, tol=0.0)


def test_table_is_deterministic_and_thread_independent():
    w = example(1.0, 3.5, 1.0)
    a = build_moment_table(w, threads=1)
    b = build_moment_table(w, threads=4)
    assert a.moment_records() == b.moment_records()
    assert a.grad == b.grad and a.lap == b.lap
    assert not a.sign_flag


def test_table_records_and_missing_entries():
    w = example(1.0, 3.5, 1.0)
    M = build_moment_table(w, betas=(-2.0,), gen=())
    recs = M.moment_records()
    assert [(r["beta"], r["nu1"], r["nu2"]) for r in recs] == [(0.0, 0, 0), (-2.0, 0, 0)]
    assert set(recs[0]) == {"beta", "nu1", "nu2", "q", "value", "abs_err"}
    assert M.beta_moment(0) == M.omega0
    with pytest.raises(MissingMomentError):
        M.beta_moment(1.0)
    with pytest.raises(MissingMomentError):
        M.gen(2.0, 1, 0)
    with pytest.raises(MissingMomentError):
        M.gen_grad(2.0, 1, 0)
    bare = MomentTable(omega0=1.0)
    with pytest.raises(MissingMomentError):
        bare.require_grad()
    with pytest.raises(MissingMomentError):
        bare.require_lap()


def test_table_rejects_degenerate_identity_moment():
    with pytest.raises(DomainError):
        MomentTable(omega0=0.0)
    with pytest.raises(DomainError):
        MomentTable(omega0=float("inf"))


def test_resolution_constant():
    w = example(1.0, 3.5)
    c = c_constant(w)
    assert abs(c - 2 * math.pi ** 2 * 3.5 ** 2) < 1e-8 * abs(c)
    M = build_moment_table(w, betas=(), gen=(), check_sign=False)
    assert c_constant(M) == 2 * math.pi * M.omega0


def test_closed_form_rejects_origin():
    with pytest.raises(DomainError):
        omega_closed_form_example(1.0, 1.0, AlphaSpec.exponential(0.0), PlaneVector(0.0, 0.0))


def test_tabulated_alpha_moments_match_exponential():
    mu = 1.0
    th = np.linspace(-math.pi, math.pi, 721)
    tab = AlphaSpec.from_samples(th, np.exp(1j * mu * th), d1=1j * mu, d2=-(mu ** 2) + 0j)
    wt = ExampleWeight(1.0, 3.5, tab)
    we = example(1.0, 3.5, mu)
    assert abs(omega(wt).value - omega(we).value) < 1e-10
    g1, g2 = grad_omega_at_1(wt).value, grad_omega_at_1(we).value
    assert abs(g1.c2 - g2.c2) < 1e-6 * abs(omega(we).value)
