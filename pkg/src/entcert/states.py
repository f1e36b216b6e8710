"""Models of the entangled-state hypothesis.

The tested states are mixtures of a perfectly correlating pure state with
unbiased noise, so every full correlation is the ideal sign scaled by the
pure-state weight p.  The hypothesis is either a fixed member of this family
or an average over a truncated Gaussian prior on p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError
from .finite_stats import CorrelationSetting
from .pmf import OutcomePmf, mix_pmfs
from .witnesses import Witness, witness_pmf


def entanglement_threshold(num_qubits: int) -> float:
    """Pure-state weight above which the noisy family is entangled."""
    if num_qubits < 2:
        raise DomainError(f"need at least 2 qubits, got {num_qubits}")
    return 1.0 / (2 ** (num_qubits - 1) + 1)


@dataclass(frozen=True)
class NoisyPureFamily:
    """Pure state mixed with white noise at weight ``purity``.

    ``signs`` are the ideal perfect-correlation signs of the pure state for
    the declared settings; the mixed state's correlations are sign * purity.
    """

    purity: float
    num_qubits: int
    signs: tuple[int, ...]

    def __init__(self, purity: float, num_qubits: int, signs: Sequence[int]):
        if not (0.0 <= purity <= 1.0):
            raise DomainError(f"purity must lie in [0, 1], got {purity}")
        if any(s not in (-1, 1) for s in signs):
            raise DomainError(f"signs must be +/-1, got {tuple(signs)}")
        if num_qubits < 2:
            raise DomainError(f"need at least 2 qubits, got {num_qubits}")
        object.__setattr__(self, "purity", float(purity))
        object.__setattr__(self, "num_qubits", int(num_qubits))
        object.__setattr__(self, "signs", tuple(int(s) for s in signs))

    @property
    def is_entangled(self) -> bool:
        return self.purity > entanglement_threshold(self.num_qubits)


def family_correlations(family: NoisyPureFamily) -> tuple[float, ...]:
    """Correlations of the noisy family: each ideal sign scaled by purity."""
    return tuple(s * family.purity for s in family.signs)


@dataclass(frozen=True)
class TruncatedGaussianPrior:
    """Gaussian prior over the pure-state weight, truncated to [p_min, 1]."""

    mean: float
    std: float
    p_min: float

    def __post_init__(self):
        if self.std <= 0.0:
            raise DomainError(f"std must be positive, got {self.std}")
        if not (0.0 <= self.p_min <= 1.0):
            raise DomainError(f"p_min must lie in [0, 1], got {self.p_min}")

    def density(self, p: float) -> float:
        """Unnormalized density; zero outside [p_min, 1]."""
        if not (self.p_min <= p <= 1.0):
            return 0.0
        z = (p - self.mean) / self.std
        return math.exp(-0.5 * z * z)

    def discretize(self, grid_step: float) -> tuple[list[float], list[float]]:
        """Cell-midpoint grid on [p_min, 1] with renormalized weights."""
        if grid_step <= 0.0:
            raise DomainError(f"grid_step must be positive, got {grid_step}")
        cells = max(1, round((1.0 - self.p_min) / grid_step))
        width = (1.0 - self.p_min) / cells
        points = [self.p_min + (i + 0.5) * width for i in range(cells)]
        weights = [self.density(p) for p in points]
        total = math.fsum(weights)
        if total <= 0.0:
            raise DomainError("prior has no mass on [p_min, 1]")
        return points, [w / total for w in weights]


def mixture_witness_pmf(
    prior: TruncatedGaussianPrior,
    signs: Sequence[int],
    copies: Sequence[int],
    witness: Witness,
    grid_step: float = 0.01,
) -> OutcomePmf:
    """Outcome distribution averaged over the purity prior.

    The prior is discretized on a midpoint grid of the given step; the
    per-purity exact pmfs are mixed with the renormalized weights.
    """
    if len(signs) != len(copies):
        raise DomainError("signs and copies must have equal length")
    points, weights = prior.discretize(grid_step)
    pmfs = []
    for p in points:
        settings = [CorrelationSetting(s * p, n) for s, n in zip(signs, copies)]
        pmfs.append(witness_pmf(settings, witness))
    return mix_pmfs(pmfs, weights)


def white_noise_success_probability(purity: float, copies: int, num_settings: int) -> float:
    """Probability that every squared correlation estimate is exactly 1.

    Equals [((1+p)/2)^n + ((1-p)/2)^n]^M: each setting needs all n products
    to agree in sign.  This is the chance of observing the maximal value of
    the sum-of-squares witness for the white-noise family.
    """
    if not (0.0 <= purity <= 1.0):
        raise DomainError(f"purity must lie in [0, 1], got {purity}")
    if copies < 1 or num_settings < 1:
        raise DomainError("copies and num_settings must be >= 1")
    agree = ((1.0 + purity) / 2.0) ** copies + ((1.0 - purity) / 2.0) ** copies
    return agree**num_settings


def natural_prior(num_qubits: int) -> tuple[float, float]:
    """(P_ent, P_sep) for a uniformly distributed pure-state weight.

    The family is entangled above the threshold 1 / (2^(N-1) + 1), so the
    entangled fraction is 2^(N-1) / (2^(N-1) + 1).
    """
    threshold = entanglement_threshold(num_qubits)
    return 1.0 - threshold, threshold


@dataclass(frozen=True)
class EntangledStateModel:
    """Entangled hypothesis: a fixed family member or a purity prior.

    Exactly one of ``purity`` (fixed p) and ``prior`` (averaged over the
    truncated Gaussian) must be given.
    """

    purity: float | None = None
    prior: TruncatedGaussianPrior | None = None
    grid_step: float = 0.01

    def __post_init__(self):
        if (self.purity is None) == (self.prior is None):
            raise DomainError("give exactly one of purity and prior")
        if self.purity is not None and not (0.0 <= self.purity <= 1.0):
            raise DomainError(f"purity must lie in [0, 1], got {self.purity}")

    def outcome_pmf(
        self,
        witness: Witness,
        copies: Sequence[int],
        signs: Sequence[int],
    ) -> OutcomePmf:
        if self.purity is not None:
            settings = [
                CorrelationSetting(s * self.purity, n) for s, n in zip(signs, copies)
            ]
            return witness_pmf(settings, witness)
        return mixture_witness_pmf(self.prior, signs, copies, witness, self.grid_step)
