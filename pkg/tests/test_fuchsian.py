import math

import numpy as np
import pytest

from horolab import metric
from horolab.fuchsian import (BudgetExceededError, FuchsianGroup,
                              QuotientPoint, load_ball_cache, load_group_file,
                              preset_bolza, save_ball_cache, save_group_file)
from horolab.sl2 import GroupElement, one_param

RNG = np.random.default_rng(20260822)


@pytest.fixture(scope="module")
def bolza():
    return preset_bolza()


def random_frame(rng, scale=0.8):
    w = rng.normal(size=3) * scale
    return GroupElement(metric.algebra_exp(metric.from_vector(w)))


class TestPreset:
    def test_generator_entries(self, bolza):
        g0 = bolza.generators[0].m
        s2 = math.sqrt(2.0)
        assert np.isclose(g0[0, 0], 1.0 + s2)
        assert np.isclose(g0[0, 1], math.sqrt(2.0 + 2.0 * s2))
        assert np.isclose(g0[0, 1], g0[1, 0])

    def test_generators_distinct(self, bolza):
        # the four generators and their inverses are eight distinct elements
        keys = set()
        for g in bolza.generators:
            keys.add(g.key())
            keys.add(g.inverse().key())
        assert len(keys) == 8

    def test_generator_traces(self, bolza):
        for g in bolza.generators:
            assert np.isclose(g.trace(), 2.0 + 2.0 * math.sqrt(2.0))

    def test_word_sphere_counts(self, bolza):
        # genus-two surface group growth: 8, 56, 392, 2736
        assert bolza.word_sphere_counts(4) == [8, 56, 392, 2736]


class TestShortestRecord:
    def test_trace_gap_exact(self, bolza):
        rec = bolza.shortest_record()
        assert abs(rec.eps_star - 2.0 * math.sqrt(2.0)) <= 1e-9
        assert abs(rec.trace - (2.0 + 2.0 * math.sqrt(2.0))) <= 1e-9

    def test_systole(self, bolza):
        rec = bolza.shortest_record()
        want = 2.0 * math.acosh(1.0 + math.sqrt(2.0))
        assert abs(rec.length - want) <= 1e-9

    def test_sigma0(self, bolza):
        rec = bolza.shortest_record()
        assert abs(rec.sigma0 - 2.1618) <= 1e-3
        assert abs(rec.sigma0 - rec.length / math.sqrt(2.0)) <= 1e-12

    def test_witness_is_generator(self, bolza):
        rec = bolza.shortest_record()
        assert rec.word in {f"g{k}" for k in range(4)} | {
            f"g{k}^-1" for k in range(4)
        }

    def test_accessors(self, bolza):
        assert bolza.injectivity_radius() == bolza.shortest_record().sigma0
        assert bolza.trace_gap() == bolza.shortest_record().eps_star


class TestEnumeration:
    def test_ball_monotone(self, bolza):
        small = {g.key() for g in bolza.enumerate_ball(3.0)}
        large = {g.key() for g in bolza.enumerate_ball(5.0)}
        assert small <= large
        assert len(small) < len(large)

    def test_ball_contains_generators(self, bolza):
        keys = {g.key() for g in bolza.enumerate_ball(3.2)}
        for g in bolza.generators:
            assert g.key() in keys

    def test_ball_arrays_shapes(self, bolza):
        mats, disps, idx = bolza.ball_arrays(4.0)
        assert mats.shape == (len(disps), 2, 2)
        assert np.all(disps <= 4.0 + 1e-9)
        dets = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
        assert np.max(np.abs(dets - 1.0)) <= 1e-9

    def test_budget_error(self):
        g = preset_bolza(max_ball_size=50)
        with pytest.raises(BudgetExceededError):
            g.enumerate_ball(8.0)

    def test_growth_after_budget_retry(self, bolza):
        # ask for a radius already covered: no work, same answer
        a = len(bolza.enumerate_ball(4.0))
        b = len(bolza.enumerate_ball(4.0))
        assert a == b


class TestReduce:
    def test_reduction_identity(self, bolza):
        for _ in range(30):
            g = random_frame(RNG, scale=1.5)
            gamma, word, red = bolza.reduce(g)
            assert (gamma * g).approx_eq(red, 1e-8)
            assert metric.displacement(red) <= metric.displacement(g) + 1e-12
            assert bolza.word_element(word).approx_eq(gamma, 1e-9)

    def test_far_point_comes_back(self, bolza):
        g = one_param("stable", 40.0)
        _, _, red = bolza.reduce(g)
        assert metric.displacement(red) <= bolza.covering_radius() + 0.5

    def test_covering_radius_bounds(self, bolza):
        r = bolza.covering_radius()
        assert 1.0 <= r <= 3.0


class TestQuotientDistance:
    def test_same_coset_zero(self, bolza):
        q = bolza.quotient_distance(
            QuotientPoint(bolza.generators[0]),
            QuotientPoint(GroupElement(np.eye(2))),
        )
        assert q.value <= 1e-9
        assert q.word == "g0"

    def test_matches_group_distance_nearby(self, bolza):
        y = QuotientPoint(one_param("stable", 0.3))
        x = QuotientPoint(GroupElement(np.eye(2)))
        q = bolza.quotient_distance(x, y)
        d = metric.distance(one_param("stable", 0.3))
        assert q.value <= d + 1e-9
        assert abs(q.value - d) <= 1e-6  # identity is the argmin here

    def test_symmetry(self, bolza):
        x = QuotientPoint(random_frame(RNG))
        y = QuotientPoint(random_frame(RNG))
        a = bolza.quotient_distance(x, y).value
        b = bolza.quotient_distance(y, x).value
        assert abs(a - b) <= 1e-7

    def test_invariance_under_deck_motion(self, bolza):
        x = QuotientPoint(random_frame(RNG))
        y = QuotientPoint(random_frame(RNG))
        a = bolza.quotient_distance(x, y).value
        moved = QuotientPoint(bolza.generators[2] * x.rep)
        b = bolza.quotient_distance(moved, y).value
        assert abs(a - b) <= 1e-7

    def test_gamma_achieves_value(self, bolza):
        x = QuotientPoint(random_frame(RNG))
        y = QuotientPoint(random_frame(RNG))
        q = bolza.quotient_distance(x, y)
        d = metric.distance(x.rep, q.gamma * y.rep)
        assert abs(d - q.value) <= 1e-7

    def test_bounded_by_diameter(self, bolza):
        for _ in range(5):
            x = QuotientPoint(random_frame(RNG, scale=2.0))
            y = QuotientPoint(random_frame(RNG, scale=2.0))
            q = bolza.quotient_distance(x, y)
            assert q.value <= 4.0


class TestSameCoset:
    def test_yes(self, bolza):
        g = random_frame(RNG)
        h = bolza.generators[1] * bolza.generators[0].inverse() * g
        res = bolza.same_coset(g, h)
        assert res.status == "yes"
        assert (res.gamma * g).approx_eq(h, 1e-7)

    def test_no(self, bolza):
        g = GroupElement(np.eye(2))
        h = one_param("stable", 0.4)
        assert bolza.same_coset(g, h).status == "no"

    def test_word_renders(self, bolza):
        res = bolza.same_coset(bolza.generators[3], GroupElement(np.eye(2)))
        assert res.status == "yes"
        assert res.word == "g3^-1"


class TestFiles:
    def test_group_file_round_trip(self, bolza, tmp_path):
        p = tmp_path / "group.txt"
        save_group_file(bolza, p)
        loaded = load_group_file(p)
        assert loaded.name == bolza.name
        for a, b in zip(loaded.generators, bolza.generators):
            assert a.approx_eq(b, 1e-12)

    def test_group_file_rejects_bad_det(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("name broken\n2 0 0 2\n")
        with pytest.raises(ValueError):
            load_group_file(p)

    def test_group_file_needs_name(self, tmp_path):
        p = tmp_path / "anon.txt"
        p.write_text("1 0 0 1\n")
        with pytest.raises(ValueError):
            load_group_file(p)

    def test_ball_cache_round_trip(self, tmp_path):
        g1 = preset_bolza()
        g1.enumerate_ball(4.0)
        n1 = g1.ball_size()
        p = tmp_path / "ball.txt"
        save_ball_cache(g1, p)

        g2 = preset_bolza()
        added = load_ball_cache(g2, p)
        assert g2.ball_size() == n1
        assert added == n1 - 1  # identity was already present
        # loaded store answers enumeration identically
        a = sorted(g.key() for g in g1.enumerate_ball(3.5))
        b = sorted(g.key() for g in g2.enumerate_ball(3.5))
        assert a == b

    def test_ball_cache_name_mismatch(self, bolza, tmp_path):
        p = tmp_path / "ball.txt"
        save_ball_cache(bolza, p)
        other = FuchsianGroup("other", list(bolza.generators))
        with pytest.raises(ValueError):
            load_ball_cache(other, p)
