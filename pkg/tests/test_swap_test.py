import math

import numpy as np
import pytest

from conftest import diag, random_states
from purity_vqa.errors import DimMismatch, ImaginaryTraceProduct, InvalidFraction, InvalidShots
from purity_vqa.state import maximally_mixed, pure_state, random_density_matrix, trace_product_exact
from purity_vqa.swap_test import SwapTestPlan, circuit_size, permutation_expectation, sample_swap_test

PLUS = pure_state([1.0, 1.0])


def random_diagonal(dim, rng):
    v = rng.dirichlet(np.ones(dim))
    return diag(*v)


class TestPlan:
    @pytest.mark.parametrize("k, n", [(1, 1), (3, 2), (5, 4)])
    def test_counts(self, k, n):
        plan = SwapTestPlan(k, n)
        assert plan.ancilla_count == 1
        assert plan.total_qubits == k * n + 1
        assert plan.cswap_count == (k - 1) * n

    @pytest.mark.parametrize("shots", [0, -5, 2.5, "many"])
    def test_invalid_shots(self, shots):
        with pytest.raises(InvalidShots):
            SwapTestPlan(2, 1, shots)


class TestPermutationExpectation:
    @pytest.mark.parametrize(
        "ms, expected",
        [
            ([PLUS, PLUS], 1.0),
            ([diag(1, 0), diag(0, 1), diag(1, 0)], 0.0),
            ([diag(0.75, 0.25)] * 3, 0.4375),
        ],
    )
    def test_examples(self, ms, expected):
        assert permutation_expectation(ms) == pytest.approx(expected, abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            permutation_expectation([diag(0.5, 0.5), maximally_mixed(4)])

    def test_complex_products_are_rejected(self):
        # three generic states give a complex trace product
        rng = np.random.default_rng(0)
        ms = [random_density_matrix(2, rng) for _ in range(3)]
        assert abs(trace_product_exact(ms).imag) > 1e-8
        with pytest.raises(ImaginaryTraceProduct):
            permutation_expectation(ms)

    def test_spectral_equivalence(self):
        for m in random_states(10, seed=11):
            for k in (2, 3, 4):
                assert permutation_expectation([m] * k) == pytest.approx(np.sum(m.eigenvalues**k), abs=1e-10)


class TestSampling:
    def test_exact_examples(self):
        r = sample_swap_test(SwapTestPlan(2, 1), [diag(1, 0), diag(1, 0)])
        assert r.prob_plus == 1.0 and r.expectation == 1.0 and r.std_error == 0.0
        r = sample_swap_test(SwapTestPlan(2, 1), [diag(0.5, 0.5)] * 2)
        assert r.expectation == pytest.approx(0.5, abs=1e-12)

    def test_exact_matches_permutation_expectation(self):
        for m in random_states(6, seed=12):
            for k in (2, 3):
                r = sample_swap_test(SwapTestPlan(k, 1), [m] * k)
                assert abs(r.expectation - permutation_expectation([m] * k)) < 1e-12
                assert abs(r.expectation - (2 * r.prob_plus - 1)) < 1e-12

    def test_shot_estimate_within_tolerance(self):
        r = sample_swap_test(SwapTestPlan(2, 1, 10**5, seed=3), [diag(0.75, 0.25)] * 2)
        assert abs(r.expectation - 0.625) < 5 / math.sqrt(1e5)
        assert r.std_error == pytest.approx(math.sqrt(r.prob_plus * (1 - r.prob_plus) / 1e5))
        assert abs(r.expectation - (2 * r.prob_plus - 1)) < 1e-12

    def test_seeded_determinism(self):
        ms = [diag(0.75, 0.25)] * 3
        a = sample_swap_test(SwapTestPlan(3, 1, 1000, seed=42), ms)
        b = sample_swap_test(SwapTestPlan(3, 1, 1000, seed=42), ms)
        c = sample_swap_test(SwapTestPlan(3, 1, 1000, seed=43), ms)
        assert a == b and a != c

    def test_unbiased_over_seeds(self):
        rng = np.random.default_rng(13)
        for t in range(20):
            k = (2, 3, 4)[t % 3]
            dim = (2, 4)[t % 2]
            ms = [random_diagonal(dim, rng) for _ in range(k)]
            exact = permutation_expectation(ms)
            est = [sample_swap_test(SwapTestPlan(k, 1, 10**4, seed=1000 * t + s), ms) for s in range(200)]
            mean = np.mean([r.expectation for r in est])
            se = math.sqrt(sum(r.expectation_std_error**2 for r in est)) / len(est)
            assert abs(mean - exact) < 3 * max(se, 1e-12)


class TestCircuitSize:
    @pytest.mark.parametrize(
        "args, kwargs, expected",
        [
            (("rank", 1), {}, 7),
            (("fidelity", 2), {}, 28),
            (("frac_power", 1), {"p": 1, "q": 2}, 13),
            (("state_learning", 3), {}, 23),
            (("entropy", 2), {"l": 5, "p": 0, "q": 1}, 12),
        ],
    )
    def test_examples(self, args, kwargs, expected):
        assert circuit_size(*args, **kwargs) == expected

    def test_invalid_fraction(self):
        with pytest.raises(InvalidFraction):
            circuit_size("frac_power", 1, p=3, q=2)
