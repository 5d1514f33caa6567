"""Tests for the annealer and sample pools."""
import time

import numpy as np
import pytest

import pyqubofolio as qf
from pyqubofolio.qubo import bits_to_int

SMALL = qf.SamplerConfig(n_reads=16, sweeps=50, seed=3)
ENC_2_1 = qf.Encoding(2, 1, 1)


def random_problem(rng, n_bits):
    q = rng.normal(size=(n_bits, n_bits))
    return qf.QuboProblem(0.5 * (q + q.T), float(rng.normal()))


def oracle_matches(n_instances, n_bits, config, seed, timings=None):
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_instances):
        problem = random_problem(rng, n_bits)
        _, best = qf.brute_force_min(problem)
        start = time.perf_counter()
        pool = qf.sample(problem, config)
        if timings is not None:
            timings.append(time.perf_counter() - start)
        hits += abs(pool.min_energy - best) <= 1e-9 * (1 + abs(best))
    return hits


class TestAnnealer:
    def test_single_bit(self):
        pool = qf.sample(qf.QuboProblem(np.array([[-1.0]]), 0.0), SMALL)
        assert pool.states[0].tolist() == [1]
        assert pool.min_energy == -1

    def test_flat(self):
        pool = qf.sample(qf.QuboProblem(np.zeros((4, 4)), 2.5), SMALL)
        assert np.all(pool.energies == 2.5)
        values = [bits_to_int(s) for s in pool.states]
        assert values == sorted(values)
        assert pool.counts.sum() == SMALL.n_reads

    def test_energies(self):
        problem = random_problem(np.random.default_rng(0), 8)
        pool = qf.sample(problem, SMALL)
        assert np.allclose(pool.energies, problem.energy(pool.states), rtol=0, atol=1e-12)
        assert np.all(np.diff(pool.energies) >= 0)

    def test_deterministic(self):
        problem = random_problem(np.random.default_rng(1), 10)
        first = qf.sample(problem, SMALL)
        second = qf.sample(problem, SMALL)
        parallel = qf.SimulatedAnnealingSampler(qf.SamplerConfig(16, 50, seed=3, n_jobs=2)).sample(problem)
        for pool in (second, parallel):
            assert np.array_equal(first.states, pool.states)
            assert np.array_equal(first.energies, pool.energies)
            assert np.array_equal(first.counts, pool.counts)

    def test_streams(self):
        problem = random_problem(np.random.default_rng(2), 10)
        sampler = qf.SimulatedAnnealingSampler(qf.SamplerConfig(4, 1, beta_initial=1e-6, beta_final=1e-5))
        assert sampler.sample(problem, (0,)).to_text() != sampler.sample(problem, (1,)).to_text()

    def test_more_reads(self):
        problem = random_problem(np.random.default_rng(3), 12)
        few = qf.sample(problem, qf.SamplerConfig(n_reads=8, sweeps=20))
        many = qf.sample(problem, qf.SamplerConfig(n_reads=32, sweeps=20))
        assert many.min_energy <= few.min_energy
        seen = {bits_to_int(s) for s in many.states}
        assert {bits_to_int(s) for s in few.states} <= seen

    def test_oracle(self):
        assert oracle_matches(20, 12, qf.SamplerConfig(n_reads=64, sweeps=200), seed=4) >= 19

    @pytest.mark.slow()
    def test_oracle_full(self):
        assert oracle_matches(100, 12, qf.SamplerConfig(n_reads=256, sweeps=500), seed=5) >= 99

    @pytest.mark.slow()
    def test_oracle_defaults(self):
        timings = []
        assert oracle_matches(100, 14, qf.SamplerConfig(), seed=7, timings=timings) >= 99
        assert sum(timings) < 60

    def test_schedule(self):
        problem = qf.QuboProblem(np.array([[-2.0, 1.0], [1.0, 0.0]]), 0.0)
        betas = qf.SamplerConfig(sweeps=3).schedule(problem)
        assert np.allclose(betas, [0.05, np.sqrt(0.05 * 25.0), 25.0])
        assert qf.SamplerConfig(sweeps=1).schedule(problem).tolist() == [25.0]


class TestPool:
    def test_exhaustive(self):
        problem = random_problem(np.random.default_rng(6), 5)
        pool = qf.ExhaustiveSampler().sample(problem)
        assert pool.n_entries == 32
        _, best = qf.brute_force_min(problem)
        assert pool.min_energy == best

    def test_tie_order(self):
        pool = qf.SamplePool.from_states(
            qf.QuboProblem(np.zeros((2, 2)), 0.0), np.array([[1, 1], [1, 0], [0, 1], [1, 0]])
        )
        assert pool.states.tolist() == [[0, 1], [1, 0], [1, 1]]
        assert pool.counts.tolist() == [1, 2, 1]

    def test_to_text(self):
        pool = qf.SamplePool.from_states(qf.QuboProblem(np.array([[-1.0]]), 0.0), np.array([[1], [1], [0]]))
        assert pool.to_text() == "-1.0 2 1\n0.0 1 0\n"

    def test_empty(self):
        pool = qf.SamplePool(np.zeros((0, 2), "u1"), np.zeros(0), np.zeros(0, "i8"))
        with pytest.raises(qf.EmptyPoolError):
            _ = pool.min_energy
        with pytest.raises(qf.EmptyPoolError):
            qf.pool_top_by(pool, lambda h: 0, 1, ENC_2_1)


class TestTopBy:
    def pool(self, states, energies):
        n = len(states)
        return qf.SamplePool(np.array(states, "u1"), np.array(energies, "f8"), np.ones(n, "i8"))

    def test_singleton(self):
        top = qf.pool_top_by(self.pool([[1, 0]], [0.0]), lambda h: -1e9, 5, ENC_2_1)
        assert len(top) == 1
        assert top[0].holdings.units.tolist() == [1, 0]

    def test_order(self):
        scores = {0: 0.5, 1: 0.9}
        top = qf.pool_top_by(
            self.pool([[1, 0], [0, 1]], [-1.0, 0.0]), lambda h: scores[int(h.units[1])], 5, ENC_2_1
        )
        assert [c.score for c in top] == [0.9, 0.5]

    def test_tie_break(self):
        top = qf.pool_top_by(self.pool([[0, 1], [1, 0]], [-5.0, -3.0]), lambda h: 1.0, 5, ENC_2_1)
        assert [c.energy for c in top] == [-5.0, -3.0]

    def test_limit(self):
        states = [[0, 0], [0, 1], [1, 0], [1, 1]]
        top = qf.pool_top_by(self.pool(states, [0.0, 1.0, 2.0, 3.0]), lambda h: h.invested, 2, ENC_2_1)
        assert [c.state.tolist() for c in top] == [[1, 1], [0, 1]]
        with pytest.raises(qf.InputRangeError):
            qf.pool_top_by(self.pool(states, [0.0] * 4), lambda h: 0, 0, ENC_2_1)

    def test_keep(self):
        states = [[0, 0], [0, 1], [1, 0], [1, 1]]
        pool = self.pool(states, [0.0, 1.0, 2.0, 3.0])
        top = qf.pool_top_by(pool, lambda h: h.invested, 5, ENC_2_1, lambda h: h.invested == 1)
        assert [c.state.tolist() for c in top] == [[0, 1], [1, 0]]
        assert qf.pool_top_by(pool, lambda h: 0, 5, ENC_2_1, lambda h: False) == []
