"""Witness outcome distributions: paper examples, moments, brute force."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from entcert.errors import DomainError
from entcert.finite_stats import CorrelationSetting, correlation_pmf, squared_correlation_pmf
from entcert.witnesses import (
    LinearWitness,
    QuadraticWitness,
    linear_witness_pmf,
    quadratic_witness_pmf,
    witness_grid,
    witness_moments,
    witness_pmf,
)

F = Fraction
PP = 1.5e-3  # percentage-point tolerance on reported probabilities


def settings(correlations, copies):
    return [CorrelationSetting(t, n) for t, n in zip(correlations, copies)]


class TestLinearExamples:
    """The two-setting, ten-copy scenario the whole analysis starts from."""

    W = LinearWitness([1, -1], 1)

    def test_boundary_violation_probability(self):
        pmf = linear_witness_pmf(settings([-0.75, 0.75], [10, 10]), self.W)
        assert pmf.mass_below(F(-4, 5)) == pytest.approx(0.267, abs=PP)

    def test_separable_violation_at_strict_bound(self):
        pmf = linear_witness_pmf(settings([-0.5, 0.5], [10, 10]), self.W)
        assert pmf.mass_below(F(-4, 5)) == pytest.approx(0.025, abs=PP)

    def test_separable_negative_value_probability(self):
        pmf = linear_witness_pmf(settings([-0.5, 0.5], [10, 10]), self.W)
        assert pmf.mass_below(0, inclusive=False) == pytest.approx(0.415, abs=PP)


class TestQuadraticExamples:
    def test_maximal_value_probabilities(self):
        ent = quadratic_witness_pmf(settings([0.75, -0.75], [10, 10]))
        assert ent.probability(2) == pytest.approx(0.069, abs=PP)
        sep = quadratic_witness_pmf(settings([0.5**0.5, 0.5**0.5], [10, 10]))
        assert sep.probability(2) == pytest.approx(0.042, abs=PP)

    def test_single_setting_single_copy(self):
        pmf = quadratic_witness_pmf(settings([1.0], [1]))
        assert pmf.outcomes == (F(1),)
        assert pmf.probabilities == (1.0,)


class TestMoments:
    def test_quadratic_equal_copies_closed_form(self):
        sts = settings([0.75, -0.75], [10, 10])
        mean, variance = witness_moments(sts, QuadraticWitness(2))
        # ((n - 1) * S_ideal + M) / n with S_ideal = 9/8
        assert mean == pytest.approx((9 * 9 / 8 + 2) / 10, abs=1e-15)
        pmf = quadratic_witness_pmf(sts)
        assert pmf.mean() == pytest.approx(mean, abs=1e-12)
        assert pmf.variance() == pytest.approx(variance, abs=1e-12)

    def test_zero_coefficients_give_constant(self):
        w = LinearWitness([0, 0], F(5, 2))
        sts = settings([0.3, -0.8], [4, 6])
        assert witness_moments(sts, w) == pytest.approx((2.5, 0.0))
        pmf = linear_witness_pmf(sts, w)
        assert pmf.outcomes == (F(5, 2),)

    def test_perfect_correlations_have_no_variance(self):
        sts = settings([1, -1, 1, -1, 1], [4] * 5)
        mean, variance = witness_moments(sts, QuadraticWitness(5))
        assert mean == pytest.approx(5.0)
        assert variance == pytest.approx(0.0)

    def test_closed_forms_match_pmf_moments(self):
        rng = np.random.default_rng(23)
        for _ in range(60):
            m = int(rng.integers(1, 4))
            sts = settings(rng.uniform(-1, 1, m), rng.integers(1, 9, m))
            coeffs = [F(int(v), int(d)) for v, d in zip(rng.integers(-3, 4, m), rng.integers(1, 4, m))]
            const = F(int(rng.integers(-2, 3)))
            w = LinearWitness(coeffs, const)
            mean, variance = witness_moments(sts, w)
            pmf = linear_witness_pmf(sts, w)
            assert pmf.mean() == pytest.approx(mean, abs=1e-12)
            assert pmf.variance() == pytest.approx(variance, abs=1e-12)
            q_mean, q_var = witness_moments(sts, QuadraticWitness(m))
            q_pmf = quadratic_witness_pmf(sts)
            assert q_pmf.mean() == pytest.approx(q_mean, abs=1e-12)
            assert q_pmf.variance() == pytest.approx(q_var, abs=1e-12)


class TestSupportBounds:
    def test_linear_support_inside_coefficient_range(self):
        w = LinearWitness([F(1, 2), -2], 1)
        pmf = linear_witness_pmf(settings([0.2, 0.9], [5, 3]), w)
        low, high = 1 - F(5, 2), 1 + F(5, 2)
        assert all(low <= o <= high for o in pmf.outcomes)

    def test_quadratic_support_inside_zero_to_m(self):
        pmf = quadratic_witness_pmf(settings([0.3, -0.4, 0.5], [3, 4, 5]))
        assert all(0 <= o <= 3 for o in pmf.outcomes)


def brute_force_pmf(sts, witness):
    """Exhaustive enumeration over all per-setting outcome tuples."""
    if isinstance(witness, QuadraticWitness):
        grids = [list(squared_correlation_pmf(s).items()) for s in sts]
        evaluate = lambda values: sum(values, F(0))
    else:
        grids = [list(correlation_pmf(s).items()) for s in sts]
        evaluate = lambda values: sum(
            (c * v for c, v in zip(witness.coefficients, values)), witness.constant
        )
    acc = {}
    for combo in itertools.product(*grids):
        value = evaluate([v for v, _ in combo])
        prob = 1.0
        for _, p in combo:
            prob *= p
        acc[value] = acc.get(value, 0.0) + prob
    return acc


class TestBruteForceEquivalence:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_small_allocations_exhaustively(self, m):
        rng = np.random.default_rng(100 + m)
        for copies in itertools.product(range(1, 5), repeat=m):
            sts = settings(rng.uniform(-1, 1, m), copies)
            for witness in [QuadraticWitness(m), LinearWitness([1] + [-1] * (m - 1), 1)]:
                exact = witness_pmf(sts, witness)
                oracle = brute_force_pmf(sts, witness)
                assert set(exact.outcomes) == set(oracle)
                for outcome, prob in oracle.items():
                    assert abs(exact.probability(outcome) - prob) < 1e-14

    def test_permuting_quadratic_settings_is_invariant(self):
        rng = np.random.default_rng(9)
        sts = settings(rng.uniform(-1, 1, 3), [5, 3, 2])
        base = quadratic_witness_pmf(sts)
        for perm in itertools.permutations(sts):
            other = quadratic_witness_pmf(list(perm))
            assert other.outcomes == base.outcomes
            assert other.probabilities == pytest.approx(base.probabilities, abs=1e-15)


class TestValidation:
    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            linear_witness_pmf(settings([0.5], [4]), LinearWitness([1, -1], 1))
        with pytest.raises(DomainError):
            witness_pmf(settings([0.5], [4]), QuadraticWitness(2))

    def test_witness_needs_a_setting(self):
        with pytest.raises(DomainError):
            LinearWitness([], 1)
        with pytest.raises(DomainError):
            QuadraticWitness(0)

    def test_grid_is_independent_of_correlations(self):
        w = QuadraticWitness(2)
        grid = witness_grid([4, 6], w)
        pmf = witness_pmf(settings([0.9, -0.2], [4, 6]), w)
        assert pmf.outcomes == grid
