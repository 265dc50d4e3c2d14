import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conealign.cones import Provenance, SubconeGenerators
from conealign.problems import DenseBlp, GridSpProblem, TspProblem


@pytest.fixture(scope="session")
def sp2():
    return GridSpProblem(2, 2)


@pytest.fixture(scope="session")
def sp5():
    return GridSpProblem(5, 5)


@pytest.fixture(scope="session")
def tsp5():
    return TspProblem(5)


@pytest.fixture(scope="session")
def tsp8():
    return TspProblem(8)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)


def make_gen(rows) -> SubconeGenerators:
    """SubconeGenerators from raw rows, with dummy provenance for each."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    tags = tuple(Provenance("inequality", i) for i in range(rows.shape[0]))
    return SubconeGenerators(rows=rows, provenance=tags)


def single_box_problem() -> DenseBlp:
    """One binary variable with no linear constraints."""
    return DenseBlp(1)


def knapsack_problem() -> DenseBlp:
    """min c'w subject to 2 w1 + 3 w2 <= 3 over binary w."""
    return DenseBlp(2, A=[[2.0, 3.0]], b=[3.0])
