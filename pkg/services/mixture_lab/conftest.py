# services/mixture_lab/conftest.py

import logging
import sys

import pytest

from app.models.agents import ConstantAgent, UniformAgent
from app.models.environments import FiniteHorizonTableEnv
from app.models.primitives import Fraction, Percept, Spaces, parse_history, point_mass

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler(sys.stderr)],
)


@pytest.fixture
def spaces() -> Spaces:
    return Spaces(("a", "b"), ("o",), (Fraction(-1), Fraction(0), Fraction(1)))


@pytest.fixture
def e1(spaces) -> FiniteHorizonTableEnv:
    """One decision: b earns +1 on the second percept, a earns -1."""
    percept = lambda r: point_mass(spaces.percepts, Percept("o", Fraction(r)))  # noqa: E731
    return FiniteHorizonTableEnv(
        spaces,
        2,
        {
            spaces.empty: percept(0),
            parse_history("(o,0) a", spaces): percept(-1),
            parse_history("(o,0) b", spaces): percept(1),
        },
    )


@pytest.fixture
def da(spaces) -> ConstantAgent:
    return ConstantAgent(spaces, "a")


@pytest.fixture
def db(spaces) -> ConstantAgent:
    return ConstantAgent(spaces, "b")


@pytest.fixture
def uniform_agent(spaces) -> UniformAgent:
    return UniformAgent(spaces)
