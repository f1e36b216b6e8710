"""Witness functionals of correlations and their exact outcome distributions.

Two shapes are supported: a linear combination of correlations plus a
constant, and the sum of squared full correlations.  Outcome distributions
are composed by exact convolution over the per-setting grids, assuming
independent settings.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError
from .finite_stats import (
    CorrelationSetting,
    correlation_moments,
    correlation_pmf,
    squared_correlation_moments,
    squared_correlation_pmf,
)
from .pmf import OutcomePmf, RationalLike, as_fraction, convolve_all


@dataclass(frozen=True)
class LinearWitness:
    """Witness value  sum_j coefficients[j] * correlation_j + constant.

    The convention is that separable states give a nonnegative value in the
    infinite-statistics limit, so negative observed values indicate
    entanglement.
    """

    coefficients: tuple[Fraction, ...]
    constant: Fraction

    def __init__(self, coefficients: Sequence[RationalLike], constant: RationalLike = 0):
        if len(coefficients) < 1:
            raise DomainError("a linear witness needs at least one coefficient")
        object.__setattr__(self, "coefficients", tuple(as_fraction(c) for c in coefficients))
        object.__setattr__(self, "constant", as_fraction(constant))

    @property
    def num_settings(self) -> int:
        return len(self.coefficients)

    def ideal_value(self, correlations: Sequence[float]) -> float:
        return float(self.constant) + sum(
            float(c) * t for c, t in zip(self.coefficients, correlations)
        )


@dataclass(frozen=True)
class QuadraticWitness:
    """Witness value  sum_j correlation_j^2 over ``num_settings`` settings.

    Values above 1 are impossible for separable states with infinite
    statistics.
    """

    num_settings: int

    def __post_init__(self):
        if (
            isinstance(self.num_settings, bool)
            or not isinstance(self.num_settings, numbers.Integral)
            or self.num_settings < 1
        ):
            raise DomainError(f"num_settings must be a positive integer, got {self.num_settings!r}")
        object.__setattr__(self, "num_settings", int(self.num_settings))

    def ideal_value(self, correlations: Sequence[float]) -> float:
        return sum(t * t for t in correlations)


Witness = LinearWitness | QuadraticWitness


def _check_settings(settings: Sequence[CorrelationSetting], witness: Witness) -> None:
    if len(settings) != witness.num_settings:
        raise DomainError(
            f"witness expects {witness.num_settings} settings, got {len(settings)}"
        )


def linear_witness_pmf(settings: Sequence[CorrelationSetting], witness: LinearWitness) -> OutcomePmf:
    """Exact pmf of a linear witness via pairwise convolution."""
    _check_settings(settings, witness)
    parts = [
        correlation_pmf(s).affine(scale=c)
        for s, c in zip(settings, witness.coefficients)
    ]
    return convolve_all(parts).affine(shift=witness.constant)


def quadratic_witness_pmf(settings: Sequence[CorrelationSetting]) -> OutcomePmf:
    """Exact pmf of the sum of squared correlation estimates."""
    if not settings:
        raise DomainError("quadratic witness needs at least one setting")
    return convolve_all(squared_correlation_pmf(s) for s in settings)


def witness_pmf(settings: Sequence[CorrelationSetting], witness: Witness) -> OutcomePmf:
    if isinstance(witness, LinearWitness):
        return linear_witness_pmf(settings, witness)
    _check_settings(settings, witness)
    return quadratic_witness_pmf(settings)


def witness_moments(settings: Sequence[CorrelationSetting], witness: Witness) -> tuple[float, float]:
    """Closed-form mean and variance of the witness outcome.

    Linear: mean is the ideal witness value, variance the coefficient-weighted
    sum of estimate variances.  Quadratic: per-setting squared-estimate
    moments add, which for equal copy counts n reduces to
    ((n - 1) * S_ideal + M) / n for the mean.
    """
    _check_settings(settings, witness)
    if isinstance(witness, LinearWitness):
        mean = float(witness.constant)
        variance = 0.0
        for s, c in zip(settings, witness.coefficients):
            m, v = correlation_moments(s)
            cf = float(c)
            mean += cf * m
            variance += cf * cf * v
        return mean, variance
    mean = 0.0
    variance = 0.0
    for s in settings:
        m, v = squared_correlation_moments(s)
        mean += m
        variance += v
    return mean, variance


def witness_grid(copies: Sequence[int], witness: Witness) -> tuple[Fraction, ...]:
    """Full outcome grid of a witness for the given copy counts.

    The grid does not depend on the correlations because zero-probability
    points are retained throughout.
    """
    settings = [CorrelationSetting(0.0, n) for n in copies]
    return witness_pmf(settings, witness).outcomes
