# services/mixture_lab/app/services/generators.py
"""
Seeded random desks. Every mass and weight is a multiple of 1/D for the
configured denominator D, so random instances stay exactly rational and
are reproducible from their seed.
"""
from dataclasses import dataclass
from random import Random
from typing import List, Optional, Tuple

from app.core.config import settings
from app.core.errors import BadParams
from app.models.agents import Agent, RandomTableAgent
from app.models.environments import Environment, RandomTableEnv
from app.models.primitives import Fraction, Spaces, parse_rational
from app.services.mixtures import WeightVector

DESK_REWARDS = tuple(parse_rational(r) for r in ("-1", "0", "1"))


def desk_spaces(observations: int = 1) -> Spaces:
    """|A| = 2, |O| = observations, R = {-1, 0, 1}."""
    return Spaces(("a", "b"), tuple(f"o{i}" if observations > 1 else "o" for i in range(observations)), DESK_REWARDS)


def random_weights(rng: Random, n: int, denominator: Optional[int] = None) -> WeightVector:
    """n positive weights k/D summing to 1, from n-1 distinct cuts of 1..D-1."""
    denominator = denominator or settings.RANDOM_DENOMINATOR
    if not 1 <= n <= denominator:
        raise BadParams(f"Cannot draw {n} positive weights with denominator {denominator}")
    cuts = sorted(rng.sample(range(1, denominator), n - 1))
    bounds = [0, *cuts, denominator]
    return WeightVector(tuple(Fraction(high - low, denominator) for low, high in zip(bounds, bounds[1:])))


def random_agent(spaces: Spaces, rng: Random, denominator: Optional[int] = None) -> RandomTableAgent:
    return RandomTableAgent(spaces, rng.randrange(2**31), denominator or settings.RANDOM_DENOMINATOR)


def random_deterministic_agent(spaces: Spaces, rng: Random) -> RandomTableAgent:
    return RandomTableAgent(spaces, rng.randrange(2**31), 1)


def random_battery(spaces: Spaces, n: int, seed: int, denominator: Optional[int] = None) -> List[Agent]:
    rng = Random(f"battery|{seed}")
    return [random_agent(spaces, rng, denominator) for _ in range(n)]


def random_env(
    spaces: Spaces, rng: Random, horizon: int, sparse: bool = False, denominator: Optional[int] = None
) -> RandomTableEnv:
    return RandomTableEnv(
        spaces, horizon, rng.randrange(2**31), denominator or settings.RANDOM_DENOMINATOR, sparse
    )


@dataclass(frozen=True)
class Desk:
    """One randomized instance of the mixture laws."""
    seed: int
    spaces: Spaces
    weights: WeightVector
    agents: Tuple[Agent, ...]
    env: Environment
    depth: int


def random_desk(seed: int, depth: int, max_observations: int = 2, max_components: int = 3) -> Desk:
    rng = Random(f"desk|{seed}")
    spaces = desk_spaces(rng.randint(1, max_observations))
    n = rng.randint(2, max_components)
    agents = tuple(
        random_deterministic_agent(spaces, rng) if rng.random() < 0.25 else random_agent(spaces, rng)
        for _ in range(n)
    )
    return Desk(seed, spaces, random_weights(rng, n), agents, random_env(spaces, rng, depth), depth)
