import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barbarik3.distributions import (
    Assignment,
    ExplicitDistribution,
    LogLinearDistribution,
    ProductDistribution,
    UnionOfProducts,
    from_descriptor,
    index_to_bits,
    mult_distance,
    random_explicit,
    to_descriptor,
    tv_distance,
)
from conftest import enumerate_union_of_products


def empirical_tv(dist, samples):
    rows, probs = dist.support_table()
    keys = {str(Assignment.from_array(r)): p for r, p in zip(rows, probs)}
    counts = {}
    for row in samples:
        s = "".join("1" if b else "0" for b in row)
        counts[s] = counts.get(s, 0) + 1
    total = len(samples)
    allkeys = set(keys) | set(counts)
    return 0.5 * sum(abs(keys.get(s, 0.0) - counts.get(s, 0) / total) for s in allkeys)


class TestAssignment:
    def test_roundtrip(self):
        a = Assignment.from_string("0110")
        assert str(a) == "0110"
        assert a.index() == 0b0110  # bits 2 and 3 set, read little-endian
        assert Assignment.from_index(a.index(), 4) == a
        assert Assignment.from_array(a.to_array()) == a

    def test_bitwise_equality_and_hash(self):
        assert Assignment((1, 0)) == Assignment.from_string("10")
        assert len({Assignment((1, 0)), Assignment.from_string("10"), Assignment((0, 1))}) == 2

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError):
            Assignment((0, 2))


class TestUnionOfProducts:
    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_matches_literal_enumeration(self, k):
        oracle, z = enumerate_union_of_products(k)
        dist = UnionOfProducts(k)
        assert z == 4**k * (1 + 3**k)
        assert math.isclose(dist.normalizer, z)
        assert len(oracle) == dist.support_size == 2**k + 4**k
        dense = dist.dense()
        assert dense.sum() == pytest.approx(1.0, abs=1e-9)
        for key, p in oracle.items():
            assert dist.prob(Assignment.from_string(key)) == pytest.approx(p, rel=1e-12)
        assert np.count_nonzero(dense) == len(oracle)

    def test_k1_points(self):
        # oracle: Z = 16; selector is the fourth variable
        dist = UnionOfProducts(1)
        assert dist.prob(Assignment.from_string("1100")) == pytest.approx(1 / 16)
        assert dist.prob(Assignment.from_string("1110")) == pytest.approx(3 / 16)
        assert dist.prob(Assignment.from_string("0011")) == pytest.approx(3 / 16)
        # selector 1 forces the weighted variable on
        assert dist.prob(Assignment.from_string("1101")) == 0.0

    def test_sampling_close_to_exact(self, rng):
        dist = UnionOfProducts(1)
        assert empirical_tv(dist, dist.sample_batch(rng, 100_000)) <= 0.02

    def test_large_k_probabilities_are_finite(self, rng):
        dist = UnionOfProducts(39)
        bits = dist.sample_batch(rng, 1000)
        p = dist.prob_batch(bits)
        assert np.all(p > 0) and np.all(np.isfinite(p))
        assert dist.satisfies(bits).all()


class TestSimpleFamilies:
    def test_uniform_point(self):
        assert ExplicitDistribution.uniform(2).prob(Assignment.from_string("00")) == 0.25

    def test_point_mass_product(self, rng):
        d = ProductDistribution([1, 1, 0])
        assert d.prob(Assignment.from_string("110")) == 1.0
        assert all(d.sample(rng) == Assignment.from_string("110") for _ in range(20))

    def test_uniform_n1_fraction(self, rng):
        frac = ExplicitDistribution.uniform(1).sample_batch(rng, 10_000).mean()
        assert 0.47 <= frac <= 0.53

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            ExplicitDistribution.uniform(3).prob(Assignment.from_string("01"))

    def test_explicit_validation(self):
        with pytest.raises(ValueError):
            ExplicitDistribution(1, [0.5, 0.6])
        with pytest.raises(ValueError):
            ExplicitDistribution(1, [1.5, -0.5])

    def test_from_mapping(self):
        d = ExplicitDistribution.from_mapping(2, {"10": 0.25, "01": 0.75})
        assert d.prob(Assignment.from_string("01")) == 0.75
        assert d.to_mapping() == {"10": 0.25, "01": 0.75}

    def test_loglinear_unconstrained_is_logistic_product(self):
        theta = [0.5, 1.0, 2.0]
        d = LogLinearDistribution(theta)
        cube = index_to_bits(np.arange(8), 3)
        w = np.exp(cube @ np.array(theta))
        assert d.prob_batch(cube) == pytest.approx(w / w.sum(), rel=1e-12)

    def test_loglinear_constrained(self):
        theta = [0.3, 0.7, 1.1, 0.2]
        pred = lambda bits: bits.sum(axis=1) >= 2  # noqa: E731
        d = LogLinearDistribution(theta, pred)
        cube = index_to_bits(np.arange(16), 4)
        w = np.where(cube.sum(axis=1) >= 2, np.exp(cube @ np.array(theta)), 0.0)
        assert d.dense() == pytest.approx(w / w.sum(), rel=1e-12)

    def test_loglinear_constrained_too_large(self):
        with pytest.raises(ValueError):
            LogLinearDistribution(np.ones(25), lambda b: np.ones(len(b), bool))

    @pytest.mark.slow
    def test_sampling_converges(self, rng):
        # E[TV] ~ sqrt(2/pi) * sum(sqrt(p)) / (2 sqrt(N)): about 0.006 on 256 points
        d = random_explicit(8, rng)
        samples = d.sample_batch(rng, 1_000_000)
        idx = samples.astype(np.int64) @ (1 << np.arange(8))
        emp = np.bincount(idx, minlength=256) / len(idx)
        assert 0.5 * np.abs(emp - d.probs).sum() <= 0.01

    def test_sampling_never_hits_zero_mass(self, rng):
        d = ExplicitDistribution.from_mapping(3, {"101": 0.3, "010": 0.7})
        p = d.prob_batch(d.sample_batch(rng, 5000))
        assert np.all(p > 0)


class TestDistances:
    def test_identity(self):
        d = UnionOfProducts(2)
        assert tv_distance(d, d) == 0
        assert mult_distance(d, d) == 0

    def test_disjoint(self):
        a = ExplicitDistribution.from_mapping(2, {"00": 1.0})
        b = ExplicitDistribution.from_mapping(2, {"11": 0.5, "01": 0.5})
        assert tv_distance(a, b) == 1.0
        assert mult_distance(a, b) == math.inf

    def test_two_point_values(self):
        half = ExplicitDistribution(1, [0.5, 0.5])
        assert tv_distance(half, ExplicitDistribution(1, [1.0, 0.0])) == pytest.approx(0.5)
        assert mult_distance(half, ExplicitDistribution(1, [0.6, 0.4])) == pytest.approx(0.2)

    def test_subset(self):
        a = ExplicitDistribution(2, [0.1, 0.2, 0.3, 0.4])
        b = ExplicitDistribution(2, [0.4, 0.3, 0.2, 0.1])
        S = [Assignment.from_index(0, 2), Assignment.from_index(3, 2)]
        assert tv_distance(a, b, subset=S) == pytest.approx(0.5 * (0.3 + 0.3))

    def test_parametric_shared_support(self):
        # product over n=30 with only 3 free bits is enumerable
        m = np.ones(30)
        m[:3] = [0.5, 0.2, 0.9]
        d1 = ProductDistribution(m)
        m2 = m.copy()
        m2[1] = 0.3
        d2 = ProductDistribution(m2)
        assert tv_distance(d1, d2) == pytest.approx(0.1, abs=1e-12)

    def test_non_enumerable(self):
        with pytest.raises(ValueError, match="enumerable"):
            tv_distance(UnionOfProducts(39), UnionOfProducts(39))

    @given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(0.2, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_tv_mult_identity(self, n, seed, frac):
        g = np.random.default_rng(seed)
        a, b = random_explicit(n, g, frac), random_explicit(n, g, frac)
        assert 2 * tv_distance(a, b) <= mult_distance(a, b) + 1e-12


class TestDescriptors:
    @pytest.mark.parametrize(
        "dist",
        [
            UnionOfProducts(2),
            ExplicitDistribution.from_mapping(3, {"101": 0.25, "011": 0.75}),
            ProductDistribution([0.1, 0.5, 0.9]),
            LogLinearDistribution([0.5, 1.5]),
            LogLinearDistribution([0.5, 1.5, 0.25], lambda b: b[:, 0] | b[:, 2]),
        ],
        ids=["union", "explicit", "product", "loglinear", "loglinear-constrained"],
    )
    def test_roundtrip(self, dist):
        desc = to_descriptor(dist, seed=7)
        assert desc["seed"] == 7
        back = from_descriptor(desc)
        assert back.n == dist.n
        assert tv_distance(dist, back) == pytest.approx(0.0, abs=1e-12)

    def test_explicit_keys_are_binary_strings(self):
        desc = to_descriptor(ExplicitDistribution.from_mapping(4, {"0110": 1.0}))
        assert desc["params"]["probs"] == {"0110": 1.0}

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            from_descriptor({"family": "cnf", "params": {}})
