import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdlandscape.linalg import SignalPair, make_rng
from bdlandscape.sample import (
    EnsembleRecord,
    MeasurementEnsemble,
    SampleFlag,
    classify_sample_point,
    concentration_gap,
    delta_rate,
    ensemble_from_seed,
    generate_measurements,
    sample_subgradient,
    sample_value,
)

from conftest import random_pair


def naive_value(ens, p):
    total = 0.0
    for i in range(ens.m):
        aw = sum(ens.A[i, j] * p.w[j] for j in range(ens.d1))
        bx = sum(ens.B[i, j] * p.x[j] for j in range(ens.d2))
        total += abs(aw * bx - ens.y[i])
    return total / ens.m


def single_term():
    e = np.array([1.0])
    truth = SignalPair(e, e)
    return MeasurementEnsemble(np.ones((1, 1)), np.ones((1, 1)), np.ones(1), truth)


@pytest.fixture
def ens(rng):
    truth = random_pair(rng, 4, 3)
    return generate_measurements(make_rng(11), truth, 100)


class TestGenerate:
    def test_truth_is_zero(self):
        truth = SignalPair.canonical(5, 4)
        e = generate_measurements(make_rng(0), truth, 40)
        assert sample_value(e, truth) == 0.0

    def test_deterministic(self):
        truth = SignalPair.canonical(3, 3)
        a = ensemble_from_seed(5, truth, 20)
        b = ensemble_from_seed(5, truth, 20)
        assert np.array_equal(a.A, b.A) and np.array_equal(a.B, b.B) and np.array_equal(a.y, b.y)

    def test_y_formula_bitwise(self, ens):
        for i in range(ens.m):
            assert ens.y[i] == (ens.A[i] @ ens.truth.w) * (ens.B[i] @ ens.truth.x) or math.isclose(
                ens.y[i], float(ens.A[i] @ ens.truth.w) * float(ens.B[i] @ ens.truth.x), rel_tol=1e-14
            )

    def test_mean_of_y(self):
        truth = SignalPair.canonical(3, 2)
        e = generate_measurements(make_rng(4), truth, 10**4)
        sd = float(np.std(e.y))
        assert abs(float(np.mean(e.y))) <= 4 * sd / math.sqrt(e.m)

    def test_read_only(self, ens):
        with pytest.raises(ValueError):
            ens.A[0, 0] = 1.0

    def test_bad_m(self):
        with pytest.raises(ValueError):
            generate_measurements(make_rng(0), SignalPair.canonical(2, 2), 0)

    def test_record_roundtrip(self):
        truth = SignalPair([1.0, -2.0, 0.5], [0.25, 3.0])
        e = ensemble_from_seed(42, truth, 17)
        rec = EnsembleRecord.from_json(e.record().to_json())
        again = rec.regenerate()
        assert rec.seed == 42 and rec.m == 17
        assert np.array_equal(again.A, e.A) and np.array_equal(again.y, e.y)

    def test_record_needs_seed(self, ens):
        with pytest.raises(ValueError):
            ens.record()


class TestValue:
    def test_single_term(self):
        assert sample_value(single_term(), SignalPair([2.0], [1.0])) == 1.0

    def test_naive_oracle(self, ens, rng):
        for _ in range(5):
            p = random_pair(rng, 4, 3)
            assert sample_value(ens, p) == pytest.approx(naive_value(ens, p), rel=1e-12)

    def test_dimension_mismatch(self, ens):
        with pytest.raises(ValueError):
            sample_value(ens, SignalPair.zeros(3, 3))

    @pytest.mark.parametrize("alpha", [-4.0, 1e-3, 0.7, 250.0])
    def test_scale_invariance(self, ens, rng, alpha):
        p = random_pair(rng, 4, 3)
        assert sample_value(ens, p.rescaled(alpha)) == pytest.approx(sample_value(ens, p), rel=1e-12)

    def test_nonnegative_and_triangle(self, ens, rng):
        f0 = sample_value(ens, SignalPair.zeros(4, 3))
        assert f0 == pytest.approx(float(np.abs(ens.y).mean()), rel=1e-15)
        for _ in range(50):
            p = random_pair(rng, 4, 3, scale=rng.uniform(0.1, 10))
            f = sample_value(ens, p)
            model = float(np.mean(np.abs(ens.A @ p.w) * np.abs(ens.B @ p.x)))
            assert 0.0 <= f <= model + f0 + 1e-12 * (model + f0)


class TestSubgradient:
    def test_truth(self, ens):
        gw, gx = sample_subgradient(ens, ens.truth)
        assert not gw.any() and not gx.any()

    def test_single_term(self):
        gw, gx = sample_subgradient(single_term(), SignalPair([2.0], [1.0]))
        assert gw.tolist() == [1.0] and gx.tolist() == [2.0]

    def test_finite_differences(self, ens, rng):
        h = 1e-7
        for _ in range(50):
            p = random_pair(rng, 4, 3)
            assert np.all((ens.A @ p.w) * (ens.B @ p.x) - ens.y != 0)
            gw, gx = sample_subgradient(ens, p)
            for _ in range(10):
                dw, dx = rng.standard_normal(4), rng.standard_normal(3)
                fp = sample_value(ens, SignalPair(p.w + h * dw, p.x + h * dx))
                fm = sample_value(ens, SignalPair(p.w - h * dw, p.x - h * dx))
                assert (fp - fm) / (2 * h) == pytest.approx(gw @ dw + gx @ dx, abs=1e-4)


class TestDelta:
    def test_log_term_one(self):
        # m = e (d1+d2+1) has no integer solution; take the nearest m
        n = 1000
        m = round(n * math.e)
        expected = ((n / m) * math.log(m / n)) ** 0.125
        assert delta_rate(600, 399, m) == pytest.approx(expected, rel=1e-15)
        assert delta_rate(600, 399, m) == pytest.approx(math.exp(-0.125), abs=1e-4)

    def test_d150(self):
        assert delta_rate(100, 50, 1208) == pytest.approx(((151 / 1208) * math.log(1208 / 151)) ** 0.125, rel=1e-15)

    def test_decreasing(self):
        assert delta_rate(100, 50, 16 * 151) < delta_rate(100, 50, 8 * 151)

    @given(st.integers(1, 50), st.integers(1, 50), st.integers(3, 40))
    def test_monotone_past_peak(self, d1, d2, k):
        n = d1 + d2 + 1
        assert delta_rate(d1, d2, (k + 1) * n) < delta_rate(d1, d2, k * n)

    @pytest.mark.parametrize("m", [1, 10, 11])
    def test_domain(self, m):
        with pytest.raises(ValueError):
            delta_rate(5, 5, m)


class TestClassify:
    def test_truth(self, rng):
        t = random_pair(rng, 4, 3)
        assert SampleFlag.NEAR_SOLUTION in classify_sample_point(t, t, 0.1).flags

    def test_zero(self, rng):
        t = random_pair(rng, 4, 3)
        cls = classify_sample_point(SignalPair.zeros(4, 3), t, 0.1)
        assert SampleFlag.NEAR_ZERO in cls.flags
        assert SampleFlag.NEAR_SOLUTION not in cls.flags

    def test_orthogonal(self, rng):
        t = random_pair(rng, 5, 4)
        w = rng.standard_normal(5)
        w -= (w @ t.w) / (t.w @ t.w) * t.w
        x = rng.standard_normal(4)
        x -= (x @ t.x) / (t.x @ t.x) * t.x
        p = SignalPair(1e-3 * w, 1e-3 * x)
        cls = classify_sample_point(p, t, 0.05)
        assert SampleFlag.NEAR_ORTHOGONAL in cls.flags
        assert abs(cls.witness["inner_w"]) <= 1e-14 and abs(cls.witness["inner_x"]) <= 1e-14

    def test_generic_far_point(self):
        t = SignalPair.canonical(3, 3)
        p = SignalPair([5.0, 5.0, 0.0], [-5.0, 5.0, 0.0])
        assert classify_sample_point(p, t, 1e-3).unclassified

    @settings(max_examples=200)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 2.0), st.floats(0.1, 10.0))
    def test_flags_match_witness(self, seed, delta, c):
        rng = make_rng(seed)
        t = random_pair(rng, 3, 4)
        p = random_pair(rng, 3, 4, scale=rng.uniform(0.01, 3))
        cls = classify_sample_point(p, t, delta, c)
        w = cls.witness
        tn, nw, nx = t.norm, np.linalg.norm(t.w), np.linalg.norm(t.x)
        scale = (w["nu"] ** 2 + 1) * delta * c
        assert (SampleFlag.NEAR_ZERO in cls.flags) == (w["point_norm"] <= c * delta * tn)
        assert (SampleFlag.NEAR_SOLUTION in cls.flags) == (w["residual_frobenius"] <= scale * nw * nx)
        orth = abs(w["inner_w"]) <= scale * w["point_norm"] * nw and abs(w["inner_x"]) <= scale * w["point_norm"] * nx
        assert (SampleFlag.NEAR_ORTHOGONAL in cls.flags) == orth

    def test_infinite_constant(self, rng):
        t = random_pair(rng, 3, 3)
        assert len(classify_sample_point(random_pair(rng, 3, 3), t, 0.5, math.inf).flags) == 3

    def test_argument_errors(self, rng):
        t = random_pair(rng, 2, 2)
        with pytest.raises(ValueError):
            classify_sample_point(t, SignalPair([0.0, 0.0], [1.0, 1.0]), 0.1)
        with pytest.raises(ValueError):
            classify_sample_point(t, t, 0.0)
        with pytest.raises(ValueError):
            classify_sample_point(t, t, 0.1, c=-1.0)


class TestConcentration:
    def test_truth_only(self, ens):
        with pytest.raises(ValueError):
            concentration_gap(ens, [ens.truth])

    def test_skips_truth(self, ens, rng):
        p = random_pair(rng, 4, 3)
        assert concentration_gap(ens, [ens.truth, p]) == concentration_gap(ens, [p])

    def test_large_m(self):
        truth = SignalPair.canonical(5, 5)
        rng = make_rng(17)
        probes = [random_pair(rng, 5, 5) for _ in range(100)]
        e = generate_measurements(make_rng(18), truth, 10**5)
        assert concentration_gap(e, probes) <= 0.05

    def test_decreasing_in_m(self):
        d1 = d2 = 5
        n = d1 + d2 + 1
        truth = SignalPair.canonical(d1, d2)
        rng = make_rng(99)
        probes = [random_pair(rng, d1, d2) for _ in range(20)]
        wins_64 = 0
        monotone = 0
        for s in range(10):
            gaps = [concentration_gap(generate_measurements(make_rng(1000 + s), truth, k * n), probes) for k in (4, 8, 16, 32, 64)]
            wins_64 += gaps[-1] < gaps[0]
            monotone += all(b < a for a, b in zip(gaps[:4], gaps[1:4]))
        assert wins_64 > 5
        assert monotone > 5
