"""Frequentist and Bayesian evaluation of certification tests.

Separable states are summarized by worst-case bounds from the search in
``worst_case``: an interval bound (the maximal probability of the whole
acceptance set) for confidence and loss estimates, and pointwise bounds (the
maximal probability of each single outcome) for certified posterior lower
bounds.  The entangled hypothesis is an explicit outcome distribution.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Literal, Mapping, Sequence

import numpy as np

from .acceptance import AcceptanceSet
from .errors import DomainError, UndefinedOutcomeError
from .pmf import OutcomePmf
from .witnesses import Witness
from .worst_case import SearchOptions, WorstCaseProblem, WorstCaseResult

#: Largest grid for which the acceptance-set search enumerates all subsets.
MAX_EXHAUSTIVE_OUTCOMES = 24

#: Heap-pop budget of the exhaustive search before falling back to greedy.
MAX_SEARCH_POPS = 200_000


@dataclass(frozen=True)
class PriorPair:
    """Prior probabilities of the two hypotheses."""

    p_ent: float

    def __post_init__(self):
        if not (0.0 <= self.p_ent <= 1.0):
            raise DomainError(f"P(ent) must lie in [0, 1], got {self.p_ent}")

    @property
    def p_sep(self) -> float:
        return 1.0 - self.p_ent


@dataclass(frozen=True)
class TestReport:
    """Evaluation of one acceptance set under both inference frameworks."""

    confidence: float
    power: float
    posterior_by_outcome: dict[Fraction, float]
    acceptance_level: float | None
    expected_loss: float
    acceptance: AcceptanceSet | None = None
    q_bayes: float | None = None


def confidence(acc: AcceptanceSet, worst_case_mass: float) -> float:
    """1 minus the worst-case false-positive probability.

    ``worst_case_mass`` is the (gamma-weighted) worst-case probability of the
    acceptance set given separability-compatible correlations.
    """
    if not (0.0 <= worst_case_mass <= 1.0 + 1e-12):
        raise DomainError(f"worst-case mass must lie in [0, 1], got {worst_case_mass}")
    return 1.0 - min(worst_case_mass, 1.0)


def power(acc: AcceptanceSet, ent_pmf: OutcomePmf) -> float:
    """Probability of accepting given the entangled hypothesis."""
    return acc.weighted_mass(ent_pmf)


def posterior_lower_bound(
    outcome: Fraction,
    ent_pmf: OutcomePmf,
    pointwise_mass: float,
    priors: PriorPair,
) -> float:
    """Certified lower bound on P(ent | outcome).

    ``pointwise_mass`` is the worst case of P(outcome | sep); plugging it into
    Bayes' rule can only decrease the posterior, so the bound is safe.
    """
    p_ent_outcome = ent_pmf.probability(outcome)
    numerator = p_ent_outcome * priors.p_ent
    denominator = pointwise_mass * priors.p_sep + numerator
    if denominator <= 0.0:
        raise UndefinedOutcomeError(
            f"outcome {outcome} has zero probability under both hypotheses"
        )
    return numerator / denominator


def posterior_map(
    ent_pmf: OutcomePmf,
    pointwise: Mapping[Fraction, float],
    priors: PriorPair,
) -> dict[Fraction, float]:
    """Posterior lower bounds for every grid outcome where one is defined."""
    out: dict[Fraction, float] = {}
    for outcome in ent_pmf.outcomes:
        mass = pointwise.get(outcome, 0.0)
        if ent_pmf.probability(outcome) <= 0.0 and mass <= 0.0:
            continue
        out[outcome] = posterior_lower_bound(outcome, ent_pmf, mass, priors)
    return out


def bayes_acceptance_set(q_bayes: float, posteriors: Mapping[Fraction, float]) -> AcceptanceSet:
    """Accept exactly the outcomes whose posterior bound reaches ``q_bayes``."""
    if not (0.0 <= q_bayes <= 1.0):
        raise DomainError(f"q_bayes must lie in [0, 1], got {q_bayes}")
    return AcceptanceSet.explicit(o for o, p in posteriors.items() if p >= q_bayes)


def expected_loss_bound(
    acc: AcceptanceSet,
    q_bayes: float,
    priors: PriorPair,
    worst_case_mass: float,
    ent_pmf: OutcomePmf,
) -> float:
    """Worst-case bound on the prior expected loss.

    False positives are weighted by ``q_bayes`` and bounded through the
    worst-case acceptance mass; false negatives are weighted by 1 - q_bayes
    and use the entangled model directly.
    """
    reject_mass = 1.0 - acc.weighted_mass(ent_pmf)
    return q_bayes * worst_case_mass * priors.p_sep + (1.0 - q_bayes) * reject_mass * priors.p_ent


def np_power_upper_bound(alpha: float, sep_pmf: OutcomePmf, ent_pmf: OutcomePmf) -> float:
    """Power of the most powerful alpha-level test against ``sep_pmf``.

    By the fundamental lemma this bounds the power of every acceptance set
    whose worst-case separable mass stays within alpha, because such a set is
    an alpha-level test against any single separability-compatible point.
    """
    acc = neyman_pearson_test(alpha, sep_pmf, ent_pmf)
    return acc.weighted_mass(ent_pmf)


def neyman_pearson_test(alpha: float, sep_pmf: OutcomePmf, ent_pmf: OutcomePmf) -> AcceptanceSet:
    """Most powerful randomized test at exact significance ``alpha``.

    Outcomes are ranked by likelihood ratio ent/sep (infinite ratios first,
    ties toward larger outcomes) and accepted greedily; the first outcome
    that would overflow the significance budget is accepted with the
    probability gamma that lands the separable mass exactly on alpha.
    Outcomes with zero probability under both hypotheses are left out.
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if sep_pmf.outcomes != ent_pmf.outcomes:
        raise DomainError("both hypotheses must share one outcome grid")

    ranked = []
    for outcome in sep_pmf.outcomes:
        ps = sep_pmf.probability(outcome)
        pe = ent_pmf.probability(outcome)
        if ps <= 0.0 and pe <= 0.0:
            continue
        if ps <= 0.0:
            key = (0, 0.0, -outcome)
        else:
            key = (1, -pe / ps, -outcome)
        ranked.append((key, outcome, ps))
    ranked.sort(key=lambda item: item[0])

    accepted: list[Fraction] = []
    used = 0.0
    for _, outcome, ps in ranked:
        if used + ps <= alpha + 1e-12 or ps <= 0.0:
            accepted.append(outcome)
            used += ps
            continue
        gamma = (alpha - used) / ps
        if gamma <= 0.0:  # budget already consumed up to float noise
            return AcceptanceSet.explicit(accepted)
        return AcceptanceSet.explicit(accepted, gamma=gamma, boundary=outcome)
    # Budget never exhausted: every informative outcome is already accepted.
    return AcceptanceSet.explicit(accepted)


# -- acceptance-set construction -------------------------------------------


@dataclass
class SetSearchOutcome:
    """Result of the max-power acceptance-set search."""

    acceptance: AcceptanceSet
    worst_case: WorstCaseResult
    power: float
    search_path: Literal["exhaustive", "greedy"]


class _FeasibilityChecker:
    """Shared machinery to decide feasibility of candidate subsets.

    Feasibility means the worst-case acceptance mass stays within budget.
    Cheap bounds come first: the sum of pointwise worst cases (an upper bound
    on the interval worst case) certifies feasibility, and any already-found
    feasible correlation vector whose mass overshoots certifies
    infeasibility.  Undecided candidates get a short search seeded from the
    most threatening pool points; only survivors pay for the full search.
    """

    #: Safety margin of the pointwise-sum shortcut (the pointwise values are
    #: themselves numeric optima, so a thin slack could be optimizer noise).
    SUM_MARGIN = 0.01

    def __init__(
        self,
        problem: WorstCaseProblem,
        budget: float,
        pointwise: Mapping[Fraction, WorstCaseResult],
        options: SearchOptions,
    ):
        self.problem = problem
        self.budget = budget
        self.options = options
        self._probe_options = replace(
            options, restarts=1, anneal_steps=0, max_iterations=250, xatol=1e-4, fatol=1e-10
        )
        self.pointwise_mass = {o: r.objective for o, r in pointwise.items()}
        self._index = {o: i for i, o in enumerate(problem.grid)}
        self._points: list[tuple[float, ...]] = []
        self._columns: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None
        seen = set()
        for result in pointwise.values():
            if result.correlations not in seen:
                seen.add(result.correlations)
                self._add_pool(result.correlations, result.dist)

    def _add_pool(self, point: tuple[float, ...], dist: OutcomePmf) -> None:
        self._points.append(point)
        self._columns.append(np.array(dist.probabilities))
        self._matrix = None

    def _mask(self, outcomes: frozenset[Fraction]) -> np.ndarray:
        mask = np.zeros(len(self._index))
        for o in outcomes:
            mask[self._index[o]] = 1.0
        return mask

    def pool_masses(self, outcomes: frozenset[Fraction]) -> np.ndarray:
        """Acceptance mass of the candidate set at every pool point."""
        if self._matrix is None:
            self._matrix = np.column_stack(self._columns)
        return self._mask(outcomes) @ self._matrix

    def check(self, outcomes: frozenset[Fraction]) -> tuple[bool, WorstCaseResult | None]:
        """(feasible, worst-case result if a full search ran)."""
        if (
            sum(self.pointwise_mass.get(o, 0.0) for o in outcomes)
            <= self.budget - self.SUM_MARGIN
        ):
            return True, None
        masses = self.pool_masses(outcomes)
        if float(np.max(masses)) > self.budget:
            return False, None
        order = np.argsort(masses)[::-1][:2]
        acc = AcceptanceSet.explicit(outcomes)
        probe = self.problem.maximize_set(
            acc, self._probe_options, seed_points=[self._points[i] for i in order]
        )
        self._add_pool(probe.correlations, probe.dist)
        if probe.objective > self.budget:
            return False, None
        result = self.problem.maximize_set(
            acc, self.options, seed_points=[probe.correlations]
        )
        self._add_pool(result.correlations, result.dist)
        return result.objective <= self.budget, result

    def resolve(self, outcomes: frozenset[Fraction]) -> WorstCaseResult:
        return self.problem.maximize_set(AcceptanceSet.explicit(outcomes), self.options)


def max_power_acceptance_set(
    witness: Witness,
    copies: Sequence[int],
    ent_pmf: OutcomePmf,
    max_sep_mass: float,
    options: SearchOptions | None = None,
    problem: WorstCaseProblem | None = None,
    pointwise: Mapping[Fraction, WorstCaseResult] | None = None,
    max_exhaustive: int = MAX_EXHAUSTIVE_OUTCOMES,
    max_pops: int = MAX_SEARCH_POPS,
) -> SetSearchOutcome | None:
    """Power-maximizing explicit acceptance set with worst-case mass in budget.

    Grids with at most ``max_exhaustive`` outcomes are searched exactly: all
    subsets are enumerated best-power-first and the first feasible one wins.
    Larger grids (or an exhausted pop budget) fall back to likelihood-ratio
    prefixes.  Returns None when not even a single outcome is feasible.
    """
    opts = options or SearchOptions()
    problem = problem or WorstCaseProblem(witness, tuple(copies))
    if ent_pmf.outcomes != problem.grid:
        raise DomainError("entangled pmf must live on the witness outcome grid")
    if pointwise is None:
        pointwise = problem.maximize_all_points(opts)
    if set(pointwise) != set(problem.grid):
        raise DomainError("pointwise bounds must cover the whole outcome grid")
    checker = _FeasibilityChecker(problem, max_sep_mass, pointwise, opts)

    # Outcomes whose single-point worst case already overshoots the budget
    # poison every superset; keeping only outcomes that help power keeps the
    # search exact.
    universe = [
        o
        for o in problem.grid
        if ent_pmf.probability(o) > 0.0 and pointwise[o].objective <= max_sep_mass
    ]
    masses = {o: ent_pmf.probability(o) for o in universe}
    # Ascending mass makes both heap successors weakly lower-power.
    universe.sort(key=lambda o: (masses[o], o))
    total_power = sum(masses.values())

    if len(universe) <= max_exhaustive:
        found = _best_first_search(universe, masses, total_power, checker, max_pops)
        if found is not None:
            outcomes, result = found
            if not outcomes:
                return None
            acc = AcceptanceSet.explicit(outcomes)
            if result is None:
                result = checker.resolve(outcomes)
            return SetSearchOutcome(acc, result, power(acc, ent_pmf), "exhaustive")

    outcome = _greedy_prefix_search(universe, masses, checker)
    if outcome is None:
        return None
    outcomes, result = outcome
    acc = AcceptanceSet.explicit(outcomes)
    if result is None:
        result = checker.resolve(outcomes)
    return SetSearchOutcome(acc, result, power(acc, ent_pmf), "greedy")


def _best_first_search(
    universe: list[Fraction],
    masses: Mapping[Fraction, float],
    total_power: float,
    checker: _FeasibilityChecker,
    max_pops: int,
) -> tuple[frozenset[Fraction], WorstCaseResult | None] | None:
    """Enumerate subsets in non-increasing power order; first feasible wins.

    Subsets are identified by the strictly increasing tuple of removed
    outcome indices.  With the universe sorted by ascending mass, the two
    successors of a node (bump the last removed index, or additionally
    remove the next index) both have weakly lower power, so a max-heap pops
    subsets in exact non-increasing power order and every subset appears
    once.  Returns the winner, an empty-set marker when the whole space is
    infeasible, or None when the pop budget runs out.
    """
    n = len(universe)
    heap: list[tuple[float, tuple[int, ...]]] = [(-total_power, ())]
    pops = 0
    while heap and pops < max_pops:
        neg_power, removed = heapq.heappop(heap)
        pops += 1
        removed_set = set(removed)
        outcomes = frozenset(o for i, o in enumerate(universe) if i not in removed_set)
        if outcomes:
            feasible, result = checker.check(outcomes)
            if feasible:
                return outcomes, result
        if not removed:
            if n:
                heapq.heappush(heap, (-total_power + masses[universe[0]], (0,)))
            continue
        last = removed[-1]
        if last + 1 < n:
            step = masses[universe[last + 1]] - masses[universe[last]]
            heapq.heappush(heap, (-(-neg_power - step), removed[:-1] + (last + 1,)))
            heapq.heappush(
                heap, (-(-neg_power - masses[universe[last + 1]]), removed + (last + 1,))
            )
    if not heap:
        return frozenset(), None
    return None


def _greedy_prefix_search(
    universe: list[Fraction],
    masses: Mapping[Fraction, float],
    checker: _FeasibilityChecker,
) -> tuple[frozenset[Fraction], WorstCaseResult | None] | None:
    """Longest feasible prefix of the likelihood-ratio ordering."""

    def ratio_key(outcome: Fraction):
        sep = checker.pointwise_mass.get(outcome, 0.0)
        if sep <= 0.0:
            return (0, 0.0, -outcome)
        return (1, -masses[outcome] / sep, -outcome)

    ordered = sorted(universe, key=ratio_key)
    best: tuple[frozenset[Fraction], WorstCaseResult | None] | None = None
    for size in range(1, len(ordered) + 1):
        outcomes = frozenset(ordered[:size])
        feasible, result = checker.check(outcomes)
        if not feasible:
            break
        best = (outcomes, result)
    return best


def build_test_report(
    acc: AcceptanceSet,
    ent_pmf: OutcomePmf,
    worst_case_mass: float,
    pointwise: Mapping[Fraction, float],
    priors: PriorPair,
    q_bayes: float,
    loss_mass: float | None = None,
) -> TestReport:
    """Assemble the full two-framework evaluation of one acceptance set.

    ``loss_mass`` overrides the worst-case mass used in the loss bound (the
    loss may be scored with a weaker, pointwise-sum estimate than the
    confidence); it defaults to ``worst_case_mass``.
    """
    posteriors = posterior_map(ent_pmf, pointwise, priors)
    accepted_levels = [p for o, p in posteriors.items() if acc.weight(o) > 0.0]
    return TestReport(
        confidence=confidence(acc, worst_case_mass),
        power=power(acc, ent_pmf),
        posterior_by_outcome=posteriors,
        acceptance_level=min(accepted_levels) if accepted_levels else None,
        expected_loss=expected_loss_bound(
            acc, q_bayes, priors, loss_mass if loss_mass is not None else worst_case_mass, ent_pmf
        ),
        acceptance=acc,
        q_bayes=q_bayes,
    )
