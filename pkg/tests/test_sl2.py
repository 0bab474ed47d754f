import numpy as np
import pytest

from horolab.sl2 import (GroupElement, canonical_sign, conj_by_geodesic,
                         conj_by_horocycle, frobenius_gap, identity, one_param,
                         rotation)

RNG = np.random.default_rng(20260822)


def random_element(rng, scale=1.0):
    # exp of a random traceless matrix has determinant one
    a, b, c = rng.normal(size=3) * scale
    x = np.array([[a, b], [c, -a]])
    q = a * a + b * c
    if q > 0:
        r = np.sqrt(q)
        m = np.cosh(r) * np.eye(2) + np.sinh(r) / r * x
    elif q < 0:
        r = np.sqrt(-q)
        m = np.cos(r) * np.eye(2) + np.sin(r) / r * x
    else:
        m = np.eye(2) + x
    return GroupElement(m)


class TestCanonicalForm:
    def test_identity(self):
        e = identity()
        assert np.allclose(e.m, np.eye(2))
        assert e.is_identity()

    def test_sign_flip(self):
        g = GroupElement(-np.eye(2))
        assert np.allclose(g.m, np.eye(2))

    def test_trace_positive(self):
        for _ in range(200):
            g = random_element(RNG)
            assert g.m[0, 0] + g.m[1, 1] >= -1e-10

    def test_near_traceless_sign_rule(self):
        # trace zero: first nonzero of (a11, a12, a21) must be positive
        m = np.array([[0.0, 1.0], [-1.0, 0.0]])
        g = GroupElement(m)
        assert g.m[0, 1] > 0
        h = GroupElement(-m)
        assert np.allclose(g.m, h.m)

    def test_det_renormalized(self):
        m = np.eye(2) * np.sqrt(1.0 + 5e-7)
        g = GroupElement(m)
        assert abs(g.det() - 1.0) <= 1e-12

    def test_det_rejected(self):
        with pytest.raises(ValueError):
            GroupElement(np.eye(2) * 2.0)

    def test_shape_rejected(self):
        with pytest.raises(ValueError):
            GroupElement(np.eye(3))

    def test_frozen(self):
        g = random_element(RNG)
        with pytest.raises(ValueError):
            g.m[0, 0] = 5.0


class TestAlgebra:
    def test_mul_inverse(self):
        for _ in range(100):
            g = random_element(RNG)
            h = random_element(RNG)
            prod = g * h
            assert abs(prod.det() - 1.0) <= 1e-12
            back = prod * h.inverse()
            assert back.approx_eq(g, 1e-9)

    def test_inverse_exact_adjugate(self):
        g = random_element(RNG)
        assert (g * g.inverse()).is_identity(1e-12)

    def test_equality_mod_sign(self):
        g = random_element(RNG)
        h = GroupElement(-np.array(g.m))
        assert g.approx_eq(h)
        assert g == h

    def test_key_grid(self):
        g = random_element(RNG)
        h = GroupElement(np.array(g.m) * (1.0 + 2e-13))
        assert g.key() == h.key()


class TestClassify:
    def test_one_param_kinds(self):
        assert one_param("geodesic", 1.0).classify() == "hyperbolic"
        assert one_param("stable", 1.0).classify() == "parabolic"
        assert one_param("unstable", -0.5).classify() == "parabolic"
        assert rotation(1.0).classify() == "elliptic"
        assert identity().classify() == "parabolic"

    def test_geodesic_entries(self):
        t = 0.8
        a = one_param("geodesic", t)
        assert np.isclose(a.m[0, 0], np.exp(t / 2))
        assert np.isclose(a.m[1, 1], np.exp(-t / 2))
        assert a.m[0, 1] == a.m[1, 0] == 0.0

    def test_horocycle_entries(self):
        b = one_param("stable", 0.3)
        assert b.m[0, 1] == 0.3 and b.m[1, 0] == 0.0
        c = one_param("unstable", 0.3)
        assert c.m[1, 0] == 0.3 and c.m[0, 1] == 0.0

    def test_rotation_half_angle(self):
        # rotation(theta) turns the tangent direction at i by theta, so the
        # matrix angle is theta/2 and the quarter turn has entries cos/sin pi/8
        r = rotation(np.pi / 4)
        assert np.isclose(r.m[0, 0], np.cos(np.pi / 8))
        assert np.isclose(r.m[0, 1], np.sin(np.pi / 8))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            one_param("loxodromic", 1.0)


class TestGap:
    def test_identity_zero(self):
        assert frobenius_gap(np.eye(2)) == 0.0
        assert frobenius_gap(-np.eye(2)) == 0.0

    def test_small_perturbation(self):
        g = one_param("stable", 0.01)
        assert 0.0 < g.frobenius_gap() < 0.05


class TestConjugationFormulas:
    # closed-form entry maps against literal triple products

    def test_geodesic_conjugation(self):
        for _ in range(300):
            k = random_element(RNG).m
            t, s = RNG.uniform(-3, 3, size=2)
            got = conj_by_geodesic(k, t, s)
            want = (one_param("geodesic", -t).m @ k
                    @ one_param("geodesic", s).m)
            assert np.max(np.abs(got - want)) <= 1e-12

    def test_horocycle_conjugation(self):
        for _ in range(300):
            k = random_element(RNG).m
            s1, s2 = RNG.uniform(-3, 3, size=2)
            got = conj_by_horocycle(k, s1, s2)
            want = (one_param("stable", -s2).m @ k
                    @ one_param("stable", s1).m)
            assert np.max(np.abs(got - want)) <= 1e-12

    def test_renormalization_identity(self):
        # a_{-t} b_s a_t = b_{s e^{-t}}
        for _ in range(100):
            t, s = RNG.uniform(-2, 2, size=2)
            got = conj_by_geodesic(one_param("stable", s).m, t, t)
            want = one_param("stable", s * np.exp(-t)).m
            assert np.max(np.abs(got - want)) <= 1e-12
