"""Tests for the binary encoding and the per-step QUBO."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pyqubofolio as qf
from pyqubofolio.qubo import bits_to_int, enumerate_states

ENC_5_2 = qf.Encoding(n_assets=1, bit_depth=2, total_bundles=5)


def assert_close(a, b, tol: float = 1e-10) -> None:
    assert np.allclose(a, b, rtol=tol, atol=tol)


def random_params(rng, n_assets, gamma=None, rho=None):
    mu = rng.normal(0, 0.02, n_assets)
    root = rng.normal(0, 0.1, (n_assets, n_assets))
    sigma = root @ root.T
    gamma = rng.uniform(0, 5) if gamma is None else gamma
    rho = rng.uniform(0, 2) if rho is None else rho
    return qf.StepCostParams(mu, sigma, gamma, rho)


def random_encoding(rng, max_bits=12):
    bit_depth = int(rng.integers(1, 4))
    n_assets = int(rng.integers(1, max_bits // bit_depth + 1))
    return qf.Encoding(n_assets, bit_depth, int(rng.integers(1, 8)))


class TestEncoding:
    @pytest.mark.parametrize(("bits", "weight"), [((1, 0), 0.2), ((0, 0), 0.0), ((1, 1), 0.6), ((0, 1), 0.4)])
    def test_decode(self, bits, weight):
        assert_close(qf.decode(np.array(bits), ENC_5_2).weights, [weight])

    def test_layout(self):
        enc = qf.Encoding(n_assets=2, bit_depth=2, total_bundles=5)
        assert qf.decode(np.array([1, 0, 0, 1]), enc).units.tolist() == [1, 2]
        assert_close(enc.unit_matrix() @ np.array([1, 0, 0, 1]), [0.2, 0.4])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 7), min_size=1, max_size=8))
    def test_encode_inverse(self, units):
        enc = qf.Encoding(len(units), 3, 5)
        holdings = qf.Holdings(np.array(units, dtype="i8"), 5)
        assert qf.decode(qf.encode(holdings, enc), enc).units.tolist() == units

    def test_depths(self):
        assert qf.Encoding.from_diversification(10, 20, 0.4).bit_depth == 3
        assert qf.Encoding.from_diversification(10, 20, 0.35).bit_depth == 3
        assert qf.Encoding.from_diversification(10, 5, 1.0).bit_depth == 2
        enc = qf.Encoding.full_concentration(4, 5)
        assert enc.bit_depth == 3
        assert enc.max_units >= 5

    def test_full_investment(self):
        assert qf.Encoding(3, 1, 3).admits_full_investment
        assert not qf.Encoding(2, 1, 3).admits_full_investment

    def test_bit_order(self):
        assert bits_to_int(np.array([1, 0, 1])) == 5
        states = enumerate_states(3)
        assert [bits_to_int(s) for s in states] == list(range(8))


class TestStepQubo:
    def test_single_linear_term(self):
        enc = qf.Encoding(1, 1, 1)
        problem = qf.build_step_qubo(qf.StepCostParams(np.array([0.1]), np.zeros((1, 1)), 0.0, 0.0), enc)
        assert_close(problem.q, [[-0.1]])
        assert problem.offset == 0
        assert_close(problem.energy(np.array([1])), -0.1)

    def test_penalty_only(self):
        enc = qf.Encoding(2, 1, 1)
        problem = qf.build_step_qubo(qf.StepCostParams(np.zeros(2), np.zeros((2, 2)), 0.0, 1.0), enc)
        states = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])
        assert_close(problem.energy(states), [1.0, 0.0, 0.0, 1.0])
        x, energy = qf.brute_force_min(problem)
        assert x.tolist() == [0, 1]
        assert energy == 0

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        enc = qf.Encoding(3, 2, 5)
        problem = qf.build_step_qubo(random_params(rng, 3), enc)
        assert np.array_equal(problem.q, problem.q.T)

    def test_energy_equals_cost(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            enc = random_encoding(rng)
            params = random_params(rng, enc.n_assets)
            problem = qf.build_step_qubo(params, enc)
            states = enumerate_states(enc.n_bits)
            costs = [qf.step_cost(qf.decode(x, enc), params) for x in states]
            assert_close(problem.energy(states), costs)

    def test_upper_triangular(self):
        rng = np.random.default_rng(2)
        problem = qf.build_step_qubo(random_params(rng, 3), qf.Encoding(3, 2, 5))
        upper = problem.to_upper()
        assert np.array_equal(upper, np.triu(upper))
        states = enumerate_states(6).astype("f8")
        energies = np.einsum("ri,ij,rj->r", states, upper, states) + problem.offset
        assert_close(energies, problem.energy(states))

    def test_to_text(self):
        problem = qf.QuboProblem(np.array([[-1.0, 0.5], [0.5, 0.0]]), 0.0)
        assert problem.to_text() == "# bits=2 offset=0.0\n0 0 -1.0\n0 1 1.0\n"


class TestStepCost:
    def test_empty(self):
        params = qf.StepCostParams(np.array([0.1, 0.2]), np.eye(2), 1.0, 3.0)
        assert_close(qf.step_cost(qf.Holdings.zeros(2, 5), params), 3.0)

    def test_hand_computed(self):
        params = qf.StepCostParams(np.array([0.01, 0.02]), 0.04 * np.eye(2), 2.0, 10.0)
        assert_close(qf.step_cost(qf.Holdings(np.array([1, 4]), 5), params), 0.0092, 1e-12)

    def test_normalized_no_penalty(self):
        rng = np.random.default_rng(3)
        params = random_params(rng, 3, rho=0.0)
        holdings = qf.Holdings(np.array([2, 1, 2]), 5)
        assert_close(qf.step_cost(holdings, params), qf.step_cost(holdings, params._replace(rho=123.0)))


class TestBruteForce:
    def test_single_bit(self):
        x, energy = qf.brute_force_min(qf.QuboProblem(np.array([[-1.0]]), 0.0))
        assert x.tolist() == [1]
        assert energy == -1

    def test_flat(self):
        x, energy = qf.brute_force_min(qf.QuboProblem(np.zeros((3, 3)), 0.0))
        assert x.tolist() == [0, 0, 0]
        assert energy == 0

    def test_linear_closed_form(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            enc = random_encoding(rng)
            params = random_params(rng, enc.n_assets, gamma=0.0, rho=0.0)
            x, _ = qf.brute_force_min(qf.build_step_qubo(params, enc))
            expected = np.repeat(params.mu > 0, enc.bit_depth).astype("u1")
            assert x.tolist() == expected.tolist()

    def test_penalty_dominance(self):
        rng = np.random.default_rng(5)
        checked = 0
        for _ in range(50):
            enc = random_encoding(rng)
            if not enc.admits_full_investment:
                continue
            params = random_params(rng, enc.n_assets)
            params = params._replace(rho=qf.auto_rho(params.mu, params.sigma, params.gamma, enc))
            x, _ = qf.brute_force_min(qf.build_step_qubo(params, enc))
            assert qf.decode(x, enc).invested == enc.total_bundles
            checked += 1
        assert checked > 10

    def test_parallel(self):
        rng = np.random.default_rng(6)
        q = rng.normal(size=(17, 17))
        problem = qf.QuboProblem(0.5 * (q + q.T), 1.0)
        x1, e1 = qf.brute_force_min(problem)
        x2, e2 = qf.brute_force_min(problem, n_jobs=2)
        assert x1.tolist() == x2.tolist()
        assert e1 == e2
