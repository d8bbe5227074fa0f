"""Shared fixtures: reference instances and a random-instance generator.

The "canon" instance (symmetric rates, five steps) exercises every regime at
once: a linear stretch around p* = 0.5, one interior pasting cutoff, and a
slide-only top interval.  The smaller instances isolate corner regimes
(stationary belief pinned to a cut, a single interval above p*, a flat payoff).
"""

from __future__ import annotations

import numpy as np
import pytest

from persuade.model import Problem, parse_problem
from persuade.solver import Solution, solve

CANON_RAW = {
    "lambda0": 1.0,
    "lambda1": 1.0,
    "r": 1.0,
    "cuts": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
    "levels": [0.0, 0.5, 0.8, 0.95, 1.0],
}

# p* = 0.5 sits exactly on a cut here, so the pinned branch of the solver runs.
PINNED_RAW = {
    "lambda0": 1.0,
    "lambda1": 1.0,
    "r": 1.0,
    "cuts": [0.0, 0.5, 0.8, 1.0],
    "levels": [0.0, 0.7, 1.0],
}

# Asymmetric rates put p* = 0.75 inside the single interval above the only
# interior cut: no pasting cutoffs at all, value constant at the top level.
ONE_ABOVE_RAW = {
    "lambda0": 3.0,
    "lambda1": 1.0,
    "r": 1.0,
    "cuts": [0.0, 0.3, 1.0],
    "levels": [0.0, 1.0],
}

# One interior cut above p* = 0.5: the smallest instance with an "above" side.
SINGLE_DISC_RAW = {
    "lambda0": 1.0,
    "lambda1": 1.0,
    "r": 1.0,
    "cuts": [0.0, 0.7, 1.0],
    "levels": [0.0, 1.0],
}

FLAT_RAW = {
    "lambda0": 1.0,
    "lambda1": 1.0,
    "r": 1.0,
    "cuts": [0.0, 1.0],
    "levels": [0.6],
}


@pytest.fixture(scope="session")
def canon_problem() -> Problem:
    return parse_problem(CANON_RAW)


@pytest.fixture(scope="session")
def canon_solution(canon_problem) -> Solution:
    return solve(canon_problem)


@pytest.fixture(scope="session")
def pinned_problem() -> Problem:
    return parse_problem(PINNED_RAW)


@pytest.fixture(scope="session")
def one_above_problem() -> Problem:
    return parse_problem(ONE_ABOVE_RAW)


@pytest.fixture(scope="session")
def single_disc_problem() -> Problem:
    return parse_problem(SINGLE_DISC_RAW)


@pytest.fixture(scope="session")
def flat_problem() -> Problem:
    return parse_problem(FLAT_RAW)


def random_instance(rng: np.random.Generator) -> Problem:
    """Draw a valid instance with healthy margins.

    Cuts are at least 0.06 apart and the stationary belief keeps 0.03 away
    from every cut, so solver and verifier never operate within float noise
    of a boundary.  Level gaps follow geometrically decaying chord slopes,
    which keeps the piecewise envelope strictly concave by a wide margin.
    """
    while True:
        lambda0 = rng.uniform(0.4, 2.5)
        lambda1 = rng.uniform(0.4, 2.5)
        r = rng.uniform(0.15, 1.5)
        p_star = lambda0 / (lambda0 + lambda1)
        n_steps = int(rng.integers(2, 6))
        interior = np.sort(rng.uniform(0.05, 0.95, size=n_steps - 1))
        cuts = np.concatenate(([0.0], interior, [1.0]))
        if np.min(np.diff(cuts)) < 0.06:
            continue
        if np.min(np.abs(cuts - p_star)) < 0.03:
            continue
        break
    # Slopes between consecutive left endpoints decay geometrically, so each
    # interior (cut, level) point sits strictly above its neighbours' chord.
    ratio = rng.uniform(0.35, 0.8)
    slopes = ratio ** np.arange(n_steps - 1)
    levels = np.concatenate(([0.0], np.cumsum(slopes * np.diff(cuts[:-1]))))
    top = rng.uniform(0.7, 1.0)
    levels = levels * (top / levels[-1]) + rng.uniform(0.0, 1.0 - top)
    return parse_problem({
        "lambda0": lambda0,
        "lambda1": lambda1,
        "r": r,
        "cuts": cuts.tolist(),
        "levels": levels.tolist(),
    })
