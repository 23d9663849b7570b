from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_train
from probqsvm import (AnnealConfig, AnnealingSampler, BatchConfig, BinaryModel, CapacityError,
                      EncodingConfig, EnsembleModel, ExactSampler, InputError, KernelSpec,
                      TrainingSet, ensemble_margin, partition, predict_ensemble, train_binary,
                      train_ensemble)
from probqsvm.ensemble import ensemble_margins, partition_indices, predict_ensemble_labels
from probqsvm.svm import predict_labels


def constant(bias, dim=1):
    return BinaryModel([0.0], bias, np.zeros((1, dim)), [1], KernelSpec())


class TestPartition:
    def test_banknote_sizes(self, rng):
        train = random_train(rng, 250)
        sizes = [len(b) for b in partition(train, BatchConfig(100, shuffle_seed=3))]
        assert sizes == [100, 100, 50]

    def test_single_batch_is_permutation(self, rng):
        train = random_train(rng, 20)
        (batch,) = partition(train, BatchConfig(20, shuffle_seed=1))
        assert sorted(map(tuple, batch.features)) == sorted(map(tuple, train.features))

    def test_stratified(self, rng):
        x = rng.normal(size=(100, 2))
        y = np.array([1, -1] * 50)
        rng.shuffle(y)
        for batch in partition(TrainingSet(x, y), BatchConfig(20, shuffle_seed=4, stratified=True)):
            assert Counter(batch.labels.tolist()) == {1: 10, -1: 10}

    @given(st.integers(1, 300), st.integers(1, 120), st.integers(0, 2**32), st.booleans())
    def test_lossless(self, n, size, seed, stratified):
        labels = np.random.default_rng(seed).choice([-1, 1], size=n)
        batches = partition_indices(labels, size, seed, stratified)
        assert len(batches) == -(-n // size)
        assert all(len(b) <= size for b in batches)
        assert sorted(np.concatenate(batches).tolist()) == list(range(n))

    @given(st.integers(2, 200), st.integers(2, 40), st.integers(0, 2**32))
    def test_stratified_balance(self, n, size, seed):
        r = np.random.default_rng(seed)
        labels = r.choice([-1, 1], size=n)
        batches = partition_indices(labels, size, seed, stratified=True)
        share = np.mean(labels == 1)
        for b in batches:
            assert abs(np.sum(labels[b] == 1) - share * len(b)) <= 1 + 1e-9

    def test_default_batch_fills_budget(self, rng):
        assert BatchConfig().resolve(2, 550) == 275
        with pytest.raises(CapacityError):
            BatchConfig(300).resolve(2, 550)


class TestPredictEnsemble:
    def test_majority(self):
        e = EnsembleModel((constant(1.0), constant(1.0), constant(-1.0)))
        assert ensemble_margin(e, [0.0]) == pytest.approx(1 / 3)
        assert predict_ensemble(e, [0.0]) == 1

    def test_single_member(self):
        for b in (0.4, -0.4):
            assert predict_ensemble(EnsembleModel((constant(b),)), [0.0]) == (1 if b > 0 else -1)

    def test_tie(self):
        e = EnsembleModel((constant(1.0), constant(-1.0)))
        assert ensemble_margin(e, [0.0]) == 0.0
        assert predict_ensemble(e, [0.0]) == 1

    @pytest.mark.parametrize("b,expect", [(1.0, 1.0), (-1.0, -1.0)])
    def test_unanimous(self, b, expect):
        assert ensemble_margin(EnsembleModel((constant(b),) * 3), [0.0]) == expect

    def test_members_must_agree(self):
        with pytest.raises(InputError):
            EnsembleModel((constant(1.0, 1), constant(1.0, 2)))
        with pytest.raises(InputError):
            EnsembleModel(())

    @given(st.lists(st.sampled_from([-1.0, 1.0, 0.5, -0.5]), min_size=1, max_size=9),
           st.randoms())
    def test_permutation_invariant_and_parity(self, biases, rnd):
        members = [constant(b) for b in biases]
        e = EnsembleModel(tuple(members))
        shuffled = members[:]
        rnd.shuffle(shuffled)
        assert predict_ensemble(EnsembleModel(tuple(shuffled)), [0.0]) == predict_ensemble(e, [0.0])
        m = ensemble_margin(e, [0.0])
        assert -1 <= m <= 1
        k = abs(m) * len(biases)
        assert abs(k - round(k)) < 1e-9 and round(k) % 2 == len(biases) % 2

    def test_identical_members(self, rng):
        train = random_train(rng, 5)
        m = train_binary(train, EncodingConfig(2, 2, 0.1), ExactSampler())
        xs = rng.normal(size=(30, 2))
        e = EnsembleModel((m, m, m))
        assert np.array_equal(predict_ensemble_labels(e, xs), predict_labels(m, xs))


class TestTrainEnsemble:
    enc = EncodingConfig(2, 2, 0.01, KernelSpec("gaussian", 1.0))

    def test_single_batch_degenerates(self, rng):
        train = random_train(rng, 5)
        e = train_ensemble(train, BatchConfig(10, shuffle_seed=2), self.enc, ExactSampler())
        m = train_binary(train, self.enc, ExactSampler())
        assert len(e.members) == 1
        xs = rng.normal(size=(50, 2))
        assert np.array_equal(predict_ensemble_labels(e, xs), predict_labels(m, xs))

    def test_member_count(self, rng):
        train = random_train(rng, 250)
        sampler = AnnealingSampler(AnnealConfig(num_reads=2, sweeps_per_read=5))
        e = train_ensemble(train, BatchConfig(100), self.enc, sampler)
        assert len(e.members) == 3

    def test_deterministic_and_logged(self, rng):
        train = random_train(rng, 30)
        sampler = AnnealingSampler(AnnealConfig(num_reads=10, sweeps_per_read=100, seed=1))
        log = []
        a = train_ensemble(train, BatchConfig(8, 5), self.enc, sampler, log=log)
        b = train_ensemble(train, BatchConfig(8, 5), self.enc, sampler)
        assert a.to_json() == b.to_json()
        assert [entry["size"] for entry in log] == [8, 8, 8, 6]
        assert EnsembleModel.from_dict(a.to_dict()) == a

    def test_batches_use_distinct_streams(self, rng):
        x = np.zeros((8, 1))
        train = TrainingSet(x, [1, -1] * 4)
        sampler = AnnealingSampler(AnnealConfig(num_reads=5, sweeps_per_read=20, t_final=5.0, seed=1))
        e = train_ensemble(train, BatchConfig(4, stratified=True), self.enc, sampler)
        infos = [m.provenance["sampler_info"] for m in e.members]
        assert infos[0] != infos[1]

    def test_errors_name_the_batch(self, rng):
        train = random_train(rng, 10)
        with pytest.raises(CapacityError, match="batch 0"):
            train_ensemble(train, BatchConfig(5), self.enc, ExactSampler(max_vars=4))
