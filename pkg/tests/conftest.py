"""Shared fixtures: the heavyweight scenario objects are built once."""

import pytest

from entcert.inference import PriorPair
from entcert.planner import PlanEvaluator
from entcert.states import EntangledStateModel, TruncatedGaussianPrior
from entcert.worst_case import SearchOptions


@pytest.fixture(scope="session")
def generalised_evaluator():
    """Planning evaluator for the 13-copy, 3-setting scenario."""
    model = EntangledStateModel(prior=TruncatedGaussianPrior(0.8, 0.1, 0.2))
    return PlanEvaluator(
        "quadratic",
        model,
        PriorPair(2 / 3),
        0.70,
        options=SearchOptions(restarts=12, seed=17),
    )
