import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from conftest import random_train
from oracles import bias_loops, boltzmann_expectation, gram_loops
from probqsvm import (BinaryModel, BoltzmannConfig, ConfigError, EncodingConfig, InputError,
                      KernelSpec, SampleSet, TrainingSet, aggregate, boltzmann_weights,
                      build_qubo, compute_gram, enumerate_exact, probabilistic_bias,
                      weighted_alphas)
from probqsvm.boltzmann import best_only_weights

energy_lists = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=30)
# distinct energies on a 1e-3 grid, so orderings survive float rounding
distinct_energies = st.lists(st.integers(-10_000, 10_000), min_size=2, max_size=20,
                             unique=True).map(lambda v: [k * 1e-3 for k in v])


def sample_set(energies, n_vars=6):
    m = len(energies)
    states = ((np.arange(m)[:, None] >> np.arange(n_vars)) & 1)
    return SampleSet(states, energies, deduplicated=True)


class TestWeights:
    def test_single_record(self):
        assert boltzmann_weights(sample_set([3.0]), BoltzmannConfig(1.0)).tolist() == [1.0]

    def test_equal_energies(self):
        w = boltzmann_weights(sample_set([2.0, 2.0]), BoltzmannConfig(0.3))
        assert w.tolist() == [0.5, 0.5]

    def test_two_state(self):
        w = boltzmann_weights(sample_set([0.0, 1.0]), BoltzmannConfig(1.0))
        z = 1 + math.exp(-1)
        assert w[0] == pytest.approx(1 / z, abs=1e-15)
        assert w[1] == pytest.approx(math.exp(-1) / z, abs=1e-15)
        assert w[0] == pytest.approx(0.73106, abs=1e-5)

    def test_requires_deduplicated(self):
        s = SampleSet([[0], [1]], [0.0, 1.0])
        with pytest.raises(InputError):
            boltzmann_weights(s, BoltzmannConfig(1.0))

    def test_temperature_positive(self):
        with pytest.raises(ConfigError):
            BoltzmannConfig(temperature=0.0)

    def test_default_temperature_is_energy_spread(self):
        e = [0.0, 1.0, 3.0]
        s = sample_set(e)
        expect = np.exp(-np.array(e) / np.std(e))
        assert np.allclose(boltzmann_weights(s), expect / expect.sum(), atol=1e-15)

    @given(energy_lists, st.floats(1e-3, 1e3))
    def test_normalized(self, energies, t):
        w = boltzmann_weights(sample_set(energies), BoltzmannConfig(t))
        assert abs(w.sum() - 1.0) <= 1e-12
        assert np.all(w >= 0)

    @given(energy_lists, st.floats(0.1, 100), st.floats(-1e3, 1e3))
    def test_shift_invariant(self, energies, t, c):
        w1 = boltzmann_weights(sample_set(energies), BoltzmannConfig(t))
        w2 = boltzmann_weights(sample_set([e + c for e in energies]), BoltzmannConfig(t))
        assert np.max(np.abs(w1 - w2)) <= 1e-12

    @given(distinct_energies, st.floats(1, 10))
    def test_monotone(self, energies, t):
        w = boltzmann_weights(sample_set(energies), BoltzmannConfig(t))
        order = np.argsort(energies)
        assert np.all(np.diff(w[order]) < 0)

    @given(distinct_energies)
    def test_cold_limit_picks_minimum(self, energies):
        w = boltzmann_weights(sample_set(energies), BoltzmannConfig(1e-9))
        assert int(np.argmax(w)) == int(np.argmin(energies))

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=20))
    def test_hot_limit_is_uniform(self, energies):
        spread = max(energies) - min(energies)
        assume(spread > 0)
        w = boltzmann_weights(sample_set(energies), BoltzmannConfig(1e9 * spread))
        assert np.max(np.abs(w - 1 / len(energies))) < 1e-6

    def test_best_only_ties_split(self):
        w = best_only_weights(sample_set([1.0, -2.0, 0.0, -2.0]))
        assert w.tolist() == [0.0, 0.5, 0.0, 0.5]


class TestWeightedAlphas:
    enc = EncodingConfig(2, 2)

    def test_identical_decodes(self):
        s = SampleSet([[1, 0, 1, 1], [1, 0, 1, 1]], [0.0, 1.0], deduplicated=True)
        assert weighted_alphas(s, [0.3, 0.7], self.enc).tolist() == [1.0, 3.0]

    def test_midpoint(self):
        s = SampleSet([[0, 0], [1, 1]], [0.0, 0.0], deduplicated=True)
        assert weighted_alphas(s, [0.5, 0.5], self.enc).tolist() == [1.5]

    def test_length_mismatch(self):
        s = SampleSet([[0, 0], [1, 1]], [0.0, 0.0], deduplicated=True)
        with pytest.raises(InputError):
            weighted_alphas(s, [1.0], self.enc)

    def test_exhaustive_expectation(self, rng):
        train = random_train(rng, 4)
        enc = EncodingConfig(2, 2, 0.2, KernelSpec("gaussian", 0.8))
        out = enumerate_exact(build_qubo(train, enc))
        alphas = weighted_alphas(out, boltzmann_weights(out, BoltzmannConfig(1.0)), enc)
        gram = gram_loops(train.features.tolist(), 0.8)
        expect, _, _ = boltzmann_expectation(train.labels.tolist(), gram, 2, 2, 0.2, 1.0)
        assert np.allclose(alphas, expect, atol=1e-10, rtol=0)

    @given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**32))
    def test_bounded(self, n, bits, seed):
        r = np.random.default_rng(seed)
        enc = EncodingConfig(3, bits)
        m = int(r.integers(1, 20))
        s = SampleSet(r.integers(0, 2, size=(m, n * bits)), r.normal(size=m), deduplicated=True)
        w = r.random(m)
        a = weighted_alphas(s, w / w.sum(), enc)
        assert np.all(a >= 0) and np.all(a <= enc.alpha_max)


class TestBias:
    def test_single_term(self):
        train = TrainingSet([[0.2]], [1])
        gram = compute_gram(train, KernelSpec("gaussian", 1.0))
        assert probabilistic_bias([1.5], train, gram, 3.0) == pytest.approx(1 - 1.5, abs=1e-15)

    def test_degenerate_fallback(self, rng):
        train = random_train(rng, 4)
        gram = compute_gram(train, KernelSpec())
        alphas = np.array([0.0, 3.0, 3.0, 0.0])
        y = train.labels
        resid = y - gram.T @ (alphas * y)
        assert probabilistic_bias(alphas, train, gram, 3.0) == pytest.approx(resid[1:3].mean())

    def test_all_zero(self, rng):
        train = random_train(rng, 3)
        assert probabilistic_bias(np.zeros(3), train, compute_gram(train, KernelSpec()), 3.0) == 0.0

    def test_matches_loops(self, rng):
        train = random_train(rng, 5, 3)
        gram = compute_gram(train, KernelSpec("gaussian", 0.6))
        alphas = rng.uniform(0, 3, size=5)
        expect = bias_loops(alphas.tolist(), train.labels.tolist(),
                            gram_loops(train.features.tolist(), 0.6), 3.0)
        assert probabilistic_bias(alphas, train, gram, 3.0) == pytest.approx(expect, abs=1e-10)

    def test_out_of_box(self, rng):
        train = random_train(rng, 2)
        with pytest.raises(InputError):
            probabilistic_bias([4.0, 0.0], train, compute_gram(train, KernelSpec()), 3.0)


class TestAggregate:
    def setup_problem(self, rng, n=4):
        train = random_train(rng, n)
        enc = EncodingConfig(2, 2, 0.5, KernelSpec("gaussian", 1.2))
        return train, enc, enumerate_exact(build_qubo(train, enc))

    def test_cold_limit_equals_best_only(self, rng):
        train, enc, out = self.setup_problem(rng)
        assert np.sum(out.energies == out.min_energy) == 1
        cold = aggregate(out, train, enc, BoltzmannConfig(1e-9))
        best = aggregate(out, train, enc, BoltzmannConfig(mode="best"))
        assert np.array_equal(cold.alphas, best.alphas)
        assert cold.bias == best.bias

    def test_best_only_is_minimum_state(self, rng):
        train, enc, out = self.setup_problem(rng)
        best = aggregate(out, train, enc, BoltzmannConfig(mode="best"))
        i = int(np.argmin(out.energies))
        expect = out.states[i].reshape(-1, 2) @ enc.place_values
        assert np.array_equal(best.alphas, expect)

    def test_full_pipeline_matches_enumeration(self, rng):
        train, enc, out = self.setup_problem(rng)
        model = aggregate(out, train, enc, BoltzmannConfig(1.0))
        gram = gram_loops(train.features.tolist(), 1.2)
        alpha, _, _ = boltzmann_expectation(train.labels.tolist(), gram, 2, 2, 0.5, 1.0)
        assert np.allclose(model.alphas, alpha, atol=1e-10, rtol=0)
        b = bias_loops(alpha, train.labels.tolist(), gram, 3.0)
        assert model.bias == pytest.approx(b, abs=1e-9)

    def test_explicit_box_below_encoding(self, rng):
        train, enc, out = self.setup_problem(rng, 2)
        with pytest.raises(ConfigError):
            aggregate(out, train, enc, BoltzmannConfig(box_parameter=2.0))

    def test_deduplicates_input(self, rng):
        train, enc, out = self.setup_problem(rng, 2)
        doubled = SampleSet(np.vstack([out.states, out.states]),
                            np.concatenate([out.energies, out.energies]))
        a = aggregate(doubled, train, enc, BoltzmannConfig(1.0))
        b = aggregate(out, train, enc, BoltzmannConfig(1.0))
        assert np.allclose(a.alphas, b.alphas, atol=1e-15)


def test_binary_model_round_trip(rng):
    train = random_train(rng, 3)
    enc = EncodingConfig(2, 2, 0.5)
    model = aggregate(enumerate_exact(build_qubo(train, enc)), train, enc)
    back = BinaryModel.from_dict(model.to_dict())
    assert back == model
    assert np.array_equal(back.alphas, model.alphas) and back.bias == model.bias
