import math

import numpy as np
import pytest

import npclust as nc
from npclust import rng
from npclust.docmodel import GibbsConfig
from npclust.exchangeability import (between_ordering_sd, between_partition_sd,
                                     run_ordering_study)
from npclust.priors import Partition

from oracles import all_permutation_log_probs


class TestBetweenOrderingSd:
    def test_dp_py_zero(self):
        gen = rng.generator(0)
        for spec in (nc.dirichlet(1.0), nc.pitman_yor(2.0, 0.5)):
            for _ in range(10):
                p = nc.sample_partition(spec, int(gen.integers(2, 40)), gen)
                sd = between_ordering_sd(spec, p, 200, gen)
                assert sd < 1e-9

    def test_up_singletons_zero(self):
        spec = nc.uniform(1.5)
        p = Partition.from_labels([1, 2, 3, 4, 5, 6])
        assert between_ordering_sd(spec, p, 100, rng.generator(1)) == 0.0

    def test_up_exact_enumeration_n3(self):
        # blocks {2,1}: orderings give log 1/4 (x2) and log 1/6 (x4)
        spec = nc.uniform(1.0)
        p = Partition.from_labels([1, 1, 2])
        vals = all_permutation_log_probs(spec, [1, 1, 2])
        assert sorted(round(math.exp(v), 12) for v in vals) == [
            round(1 / 6, 12)] * 4 + [round(1 / 4, 12)] * 2
        exact_mean = np.mean(vals)
        exact_sd = np.std(vals, ddof=0)
        m = 20_000
        est = between_ordering_sd(spec, p, m, rng.generator(2))
        # Monte Carlo sample SD vs exhaustive population SD
        assert est == pytest.approx(exact_sd, rel=0.05)
        assert exact_mean != 0.0

    def test_up_enumeration_matches_monte_carlo_n6(self, backend):
        spec = nc.uniform(2.0)
        labels = [1, 1, 2, 3, 2, 1]
        vals = all_permutation_log_probs(spec, labels)
        exact_sd = np.std(vals, ddof=0)
        est = between_ordering_sd(spec, Partition.from_labels(labels), 4000,
                                  rng.generator(3))
        assert est == pytest.approx(exact_sd, rel=0.1)

    def test_requires_two_orderings(self):
        with pytest.raises(ValueError):
            between_ordering_sd(nc.uniform(1.0), Partition.from_labels([1, 2]), 1,
                                rng.generator(0))


class TestBetweenPartitionSd:
    def test_identical_partitions_zero(self):
        spec = nc.uniform(1.0)
        p = Partition.from_labels([1, 2, 1])
        assert between_partition_sd(spec, [p, p, p]) < 1e-12

    def test_two_point_example(self):
        # log(1/4) and log(1/6): SD = |log(1/4)-log(1/6)|/sqrt(2)
        spec = nc.uniform(1.0)
        ps = [Partition.from_labels([1, 1, 2]), Partition.from_labels([1, 2, 2])]
        expect = abs(math.log(1 / 4) - math.log(1 / 6)) / math.sqrt(2)
        assert between_partition_sd(spec, ps) == pytest.approx(expect, abs=1e-12)
        assert expect == pytest.approx(0.2867, abs=1e-4)

    def test_dp_hand_values(self):
        spec = nc.dirichlet(1.0)
        ps = [Partition.from_labels([1, 1, 1]), Partition.from_labels([1, 2, 3])]
        # 1 * 1/2 * 2/3 = 1/3 and 1 * 1/2 * 1/3 = 1/6
        vals = [math.log(1 / 3), math.log(1 / 6)]
        assert between_partition_sd(spec, ps) == pytest.approx(np.std(vals, ddof=1),
                                                               abs=1e-12)

    def test_size_mismatch_rejected(self):
        spec = nc.uniform(1.0)
        with pytest.raises(ValueError):
            between_partition_sd(spec, [Partition.from_labels([1, 2]),
                                        Partition.from_labels([1, 2, 3])])
        with pytest.raises(ValueError):
            between_partition_sd(spec, [Partition.from_labels([1, 2])])


class TestRunOrderingStudy:
    def test_degenerate_study(self):
        corpus, _ = nc.synth_corpus(2, 6, 4, 8, 0.1, seed=3)
        study = run_ordering_study(nc.uniform(1.0), corpus, num_chains=2,
                                   num_orderings=2,
                                   gibbs_config=GibbsConfig(sweeps=5),
                                   master_seed=4)
        assert len(study.partitions) == 2
        assert len(study.per_partition_ordering_sd) == 2
        assert all(sd >= 0.0 for sd in study.per_partition_ordering_sd)
        assert study.between_partition_sd >= 0.0

    def test_single_document_corpus(self):
        corpus, _ = nc.synth_corpus(1, 1, 4, 6, 0.0, seed=5)
        study = run_ordering_study(nc.uniform(1.0), corpus, num_chains=2,
                                   num_orderings=10,
                                   gibbs_config=GibbsConfig(sweeps=3),
                                   master_seed=6)
        assert all(sd == 0.0 for sd in study.per_partition_ordering_sd)
        assert study.between_partition_sd < 1e-12

    def test_ordering_sd_smaller_than_partition_sd(self):
        # qualitative robustness property on a small synthetic corpus
        corpus, _ = nc.synth_corpus(4, 8, 6, 15, 0.3, seed=7)
        study = run_ordering_study(nc.uniform(2.0), corpus, num_chains=4,
                                   num_orderings=200,
                                   gibbs_config=GibbsConfig(sweeps=60, burn_in=30,
                                                            hyper_interval=10),
                                   master_seed=8)
        assert study.mean_ordering_sd < study.between_partition_sd

    def test_deterministic(self):
        corpus, _ = nc.synth_corpus(2, 5, 4, 8, 0.2, seed=9)
        kw = dict(num_chains=2, num_orderings=50,
                  gibbs_config=GibbsConfig(sweeps=10, burn_in=5), master_seed=10)
        a = run_ordering_study(nc.uniform(1.0), corpus, **kw)
        b = run_ordering_study(nc.uniform(1.0), corpus, **kw)
        assert a.per_partition_ordering_sd == b.per_partition_ordering_sd
        assert a.between_partition_sd == b.between_partition_sd
