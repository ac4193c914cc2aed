# services/mixture_lab/app/services/valuation.py
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

from app.core.errors import (
    InvalidWeights,
    NoTailBound,
    NotFiniteHorizon,
    NotNormalized,
    SpacesMismatch,
)
from app.core.logging import setup_logger
from app.models.agents import Agent
from app.models.environments import Environment, certify_strongly_well_behaved
from app.models.primitives import ZERO, Fraction, History, NodeBudget, format_rational, require_steps

logger = setup_logger("valuation")


@dataclass(frozen=True)
class ValueResult:
    """V_t together with the certified tail; the interval is exact V when tail is 0."""
    value_at_t: Fraction
    t: int
    tail: Fraction

    @property
    def interval(self) -> Tuple[Fraction, Fraction]:
        return self.value_at_t - self.tail, self.value_at_t + self.tail

    @property
    def exact(self) -> bool:
        return self.tail == 0

    def __str__(self) -> str:
        return f"V_{self.t}={format_rational(self.value_at_t)} +/- {format_rational(self.tail)}"


def value_at(agent: Agent, env: Environment, t: int, budget: Optional[NodeBudget] = None) -> Fraction:
    """
    Exact V^pi_{mu,t}: the sum of expected per-step rewards over t steps,
    walking the interaction tree depth-first and skipping every subtree
    whose prefix has joint probability 0.
    """
    require_steps(t)
    if agent.spaces != env.spaces:
        raise SpacesMismatch("Agent and environment are declared over different spaces")
    budget = budget or NodeBudget()
    total = ZERO
    stack: List[Tuple[History, Fraction]] = [(env.spaces.empty, Fraction(1))]
    while stack:
        h, p = stack.pop()
        if h.completed_steps >= t:
            continue
        for x, mass in env.perceive(h).support():
            budget.tick()
            px = p * mass
            total += px * x.reward
            if h.completed_steps + 1 >= t:
                continue
            hx = h.extend(x)
            for y, act_mass in agent.act(hx).support():
                stack.append((hx.extend(y), px * act_mass))
    return total


def value_interval(agent: Agent, env: Environment, t: int, budget: Optional[NodeBudget] = None) -> ValueResult:
    require_steps(t)
    tail = env.tail_bound(t)
    if tail is None:
        raise NoTailBound(f"{env!r} does not advertise a tail bound")
    return ValueResult(value_at(agent, env, t, budget), t, tail)


def value_vector(
    agents: Sequence[Agent], env: Environment, t: int, budget: Optional[NodeBudget] = None
) -> List[Fraction]:
    """V^{pi-vector}_{mu,t}, componentwise and in order."""
    budget = budget or NodeBudget()
    return [value_at(agent, env, t, budget) for agent in agents]


class WeightedMeasure:
    """
    Finite-support weighted intelligence measure: (environment, weight) pairs
    with positive rational weights, every environment carrying a tail bound.
    """

    def __init__(self, components: Sequence[Tuple[Environment, Fraction]]):
        if not components:
            raise InvalidWeights("A measure needs at least one component")
        spaces = components[0][0].spaces
        for env, weight in components:
            if weight <= 0:
                raise InvalidWeights(f"Weight {format_rational(weight)} is not positive")
            if not env.has_tail_bound:
                raise NoTailBound(f"{env!r} does not advertise a tail bound")
            if env.spaces != spaces:
                raise SpacesMismatch("Measure components are declared over different spaces")
        self.spaces = spaces
        self.components: Tuple[Tuple[Environment, Fraction], ...] = tuple(components)

    @property
    def environments(self) -> Tuple[Environment, ...]:
        return tuple(env for env, _ in self.components)

    @property
    def weights(self) -> Tuple[Fraction, ...]:
        return tuple(weight for _, weight in self.components)

    @property
    def total_weight(self) -> Fraction:
        return sum(self.weights, ZERO)

    @property
    def normalized(self) -> bool:
        return self.total_weight == 1

    @property
    def horizon(self) -> Optional[int]:
        horizons = [env.horizon for env in self.environments]
        if any(h is None for h in horizons):
            return None
        return max(horizons)

    @cached_property
    def strongly_well_behaved(self) -> bool:
        """Every component certified by expectimax; components without a finite horizon never certify."""
        for env in self.environments:
            if env.horizon is None:
                return False
            if not certify_strongly_well_behaved(env, env.horizon):
                return False
        return True

    def tail_bound(self, t: int) -> Fraction:
        return sum((w * env.tail_bound(t) for env, w in self.components), ZERO)

    def require_normalized(self) -> None:
        if not self.normalized:
            raise NotNormalized(f"Measure weights sum to {format_rational(self.total_weight)}, not 1")

    def require_finite_horizon(self, t: int) -> None:
        if self.tail_bound(t) != 0:
            raise NotFiniteHorizon(f"Measure tail at t={t} is {format_rational(self.tail_bound(t))}, not 0")

    def scaled(self, factor: Fraction) -> "WeightedMeasure":
        return WeightedMeasure([(env, w * factor) for env, w in self.components])

    def __add__(self, other: "WeightedMeasure") -> "WeightedMeasure":
        return WeightedMeasure([*self.components, *other.components])

    def __repr__(self) -> str:
        parts = ", ".join(f"({env!r}, {format_rational(w)})" for env, w in self.components)
        return f"WeightedMeasure([{parts}])"


def upsilon(measure: WeightedMeasure, agent: Agent, t: int, budget: Optional[NodeBudget] = None) -> ValueResult:
    """Upsilon(pi) at depth t: weighted sum of values plus weighted sum of tails."""
    require_steps(t)
    budget = budget or NodeBudget()
    value = ZERO
    for env, weight in measure.components:
        value += weight * value_at(agent, env, t, budget)
    result = ValueResult(value, t, measure.tail_bound(t))
    logger.debug(f"Upsilon over {len(measure.components)} environments: {result}")
    return result


def upsilon_vector(
    measure: WeightedMeasure, agents: Sequence[Agent], t: int, budget: Optional[NodeBudget] = None
) -> List[ValueResult]:
    budget = budget or NodeBudget()
    return [upsilon(measure, agent, t, budget) for agent in agents]
