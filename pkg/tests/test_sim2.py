import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aciq.errors import DomainError
from aciq.fields import LogPolarGrid, SampledField
from aciq.sim2 import (GroupElement, PlaneVector, act_on_plane, apply_unitary, compose,
                       inverse, left_action_jacobians, plane_inv, plane_mul)

finite = st.floats(-10, 10, allow_nan=False)
nonzero = st.tuples(finite, finite).filter(lambda v: math.hypot(*v) > 1e-2)


def close(a: PlaneVector, b: PlaneVector, tol=1e-12):
    return abs(a.c1 - b.c1) <= tol and abs(a.c2 - b.c2) <= tol


def test_plane_mul_examples():
    assert plane_mul(PlaneVector(1, 0), PlaneVector(3, -2)) == PlaneVector(3, -2)
    assert plane_mul(PlaneVector(0, 1), PlaneVector(0, 1)) == PlaneVector(-1, 0)
    assert plane_mul(PlaneVector(2, 0), PlaneVector(0, 3)) == PlaneVector(0, 6)


def test_plane_inv_examples():
    assert plane_inv(PlaneVector(1, 0)) == PlaneVector(1, 0)
    r, th = plane_inv(PlaneVector.from_polar(2, math.pi / 2)).polar()
    assert r == pytest.approx(0.5) and th == pytest.approx(-math.pi / 2)
    assert close(plane_inv(PlaneVector(3, 4)), PlaneVector(3 / 25, -4 / 25), 1e-15)
    with pytest.raises(DomainError):
        plane_inv(PlaneVector(0, 0))


@given(nonzero)
def test_polar_round_trip(v):
    a = PlaneVector(*v)
    b = PlaneVector.from_polar(*a.polar())
    assert abs(b.c1 - a.c1) <= 1e-14 * a.norm() + 1e-300
    assert abs(b.c2 - a.c2) <= 1e-14 * a.norm() + 1e-300
    assert -math.pi < a.arg() <= math.pi


@given(st.tuples(finite, finite), st.tuples(finite, finite), st.tuples(finite, finite))
def test_plane_mul_commutative_associative(a, b, c):
    a, b, c = PlaneVector(*a), PlaneVector(*b), PlaneVector(*c)
    assert close(plane_mul(a, b), plane_mul(b, a), 0)
    lhs, rhs = plane_mul(plane_mul(a, b), c), plane_mul(a, plane_mul(b, c))
    assert close(lhs, rhs, 1e-12 * (1 + a.norm() * b.norm() * c.norm()))


@given(nonzero)
def test_plane_inverse_property(v):
    a = PlaneVector(*v)
    assert close(plane_mul(a, plane_inv(a)), PlaneVector(1, 0), 1e-13)


def test_compose_and_inverse_examples():
    g = GroupElement(PlaneVector(2, 0), PlaneVector(1, 0))
    h = GroupElement(PlaneVector(1, 0), PlaneVector(0, 1))
    gh = compose(g, h)
    assert close(gh.q, PlaneVector(2, 0)) and close(gh.p, PlaneVector(1, 0.5))
    e = GroupElement.identity()
    assert compose(e, g) == g
    assert inverse(e) == e
    d = inverse(GroupElement(PlaneVector(2, 0), PlaneVector(0, 0)))
    assert close(d.q, PlaneVector(0.5, 0)) and close(d.p, PlaneVector(0, 0))
    k = inverse(GroupElement(PlaneVector(0, 1), PlaneVector(1, 0)))
    assert close(k.q, PlaneVector(0, -1)) and close(k.p, PlaneVector(0, 1))


def test_group_rejects_zero_q():
    with pytest.raises(DomainError):
        GroupElement(PlaneVector(0, 0), PlaneVector(1, 1))


def _random_elements(rng, n):
    r = np.exp(rng.uniform(-1.5, 1.5, n))
    th = rng.uniform(-np.pi, np.pi, n)
    p = rng.uniform(-3, 3, (n, 2))
    return [GroupElement(PlaneVector.from_polar(a, b), PlaneVector(*c)) for a, b, c in zip(r, th, p)]


def test_associativity_1000_triples():
    rng = np.random.default_rng(3)
    a, b, c = (_random_elements(rng, 1000) for _ in range(3))
    worst = 0.0
    for x, y, z in zip(a, b, c):
        l, r = compose(compose(x, y), z), compose(x, compose(y, z))
        worst = max(worst, abs(l.q.c1 - r.q.c1), abs(l.q.c2 - r.q.c2),
                    abs(l.p.c1 - r.p.c1), abs(l.p.c2 - r.p.c2))
    assert worst < 1e-12 * 100  # entries reach O(100)


@given(st.floats(-1.5, 1.5), st.floats(-3.1, 3.1), finite, finite)
@settings(max_examples=200)
def test_inverse_gives_identity(lr, th, p1, p2):
    g = GroupElement(PlaneVector.from_polar(math.exp(lr), th), PlaneVector(p1, p2))
    e = compose(g, inverse(g))
    assert close(e.q, PlaneVector(1, 0), 1e-13) and close(e.p, PlaneVector(0, 0), 1e-13)


def test_act_on_plane_examples():
    x = PlaneVector(0.3, -0.7)
    assert close(act_on_plane(1, 0, PlaneVector(0, 0), x), x)
    assert close(act_on_plane(2, 0, PlaneVector(1, 1), PlaneVector(1, 0)), PlaneVector(3, 1))
    assert close(act_on_plane(1, math.pi / 2, PlaneVector(0, 0), PlaneVector(1, 0)),
                 PlaneVector(0, 1), 1e-15)


@given(st.floats(-2, 2), st.floats(-3.1, 3.1))
def test_left_action_preserves_measure(lr, th):
    g0 = GroupElement(PlaneVector.from_polar(math.exp(lr), th), PlaneVector(0.1, 0.2))
    jq, jp = left_action_jacobians(g0)
    assert jq == pytest.approx(math.exp(2 * lr), rel=1e-12)
    assert abs(jq * jp - 1.0) < 1e-12


@pytest.fixture(scope="module")
def field():
    grid = LogPolarGrid(1e-2, 1e2, 256, 128)
    return SampledField.from_function(
        grid, lambda a, b: np.exp(-np.log(np.hypot(a, b)) ** 2) * (1 + 0.3 * a / np.hypot(a, b)))


def test_unitary_identity_and_norm(field):
    same = apply_unitary(GroupElement.identity(), field)
    assert same.relative_l2_distance(field) < 1e-14
    g = GroupElement(PlaneVector.from_polar(1.7, 0.4), PlaneVector(0.5, -0.3))
    moved = apply_unitary(g, field, order=3)
    assert abs(moved.norm() - field.norm()) / field.norm() < 1e-6


def test_unitary_representation_property(field):
    g1 = GroupElement(PlaneVector.from_polar(1.3, 0.5), PlaneVector(0.4, 0.1))
    g2 = GroupElement(PlaneVector.from_polar(0.8, -1.1), PlaneVector(-0.2, 0.3))
    a = apply_unitary(g1, apply_unitary(g2, field, order=3), order=3)
    b = apply_unitary(compose(g1, g2), field, order=3)
    assert abs(abs(a.inner(b)) - field.norm() ** 2) / field.norm() ** 2 < 1e-5


def test_plane_and_quantum_units_are_distinct():
    # the plane's e2 squares to -e1 while a complex scalar factor commutes with both slots
    e2 = PlaneVector(0, 1)
    assert plane_mul(e2, e2) == PlaneVector(-1, 0)
    v = 1j * PlaneVector(1, 0)
    assert v == PlaneVector(1j, 0)
