# services/mixture_lab/app/services/mutations.py
"""
Catalog of seeded defects. A Mutation is the set of factories the scenario
builder uses for the combinators; the base class builds the correct
objects and each catalogued defect overrides exactly one factory.
"""
from typing import Any, Dict, Optional, Sequence

from app.core.errors import UnknownName
from app.models.agents import Agent
from app.models.environments import Environment
from app.models.primitives import Dist, Fraction
from app.services.mixtures import DualAgent, MixtureAgent, WeightVector


class Mutation:
    name = "none"
    description = "Correct implementation"

    def weights(self, values: Sequence[Fraction]) -> WeightVector:
        return WeightVector(tuple(values))

    def mix_agents(self, weights: WeightVector, agents: Sequence[Agent]) -> Agent:
        return MixtureAgent(weights, agents)

    def dual_agent(self, agent: Agent) -> Agent:
        return DualAgent(agent)

    def wrap_env(self, env: Environment) -> Environment:
        return env

    def symmetrize(self, agent: Agent) -> Agent:
        half = Fraction(1, 2)
        return self.mix_agents(self.weights((half, half)), (agent, self.dual_agent(agent)))


class NonuniformFallback(Mutation):
    name = "nonuniform_fallback"
    description = "Mixture falls back to a point mass on the first action instead of uniform"

    def mix_agents(self, weights: WeightVector, agents: Sequence[Agent]) -> Agent:
        spaces = agents[0].spaces
        fallback = Dist(spaces.actions, tuple(Fraction(int(i == 0)) for i in range(len(spaces.actions))))
        return MixtureAgent(weights, agents, fallback=fallback)


class UnnormalizedWeights(Mutation):
    name = "unnormalized_weights"
    description = "Weight vectors are accepted without checking that they sum to 1"

    def weights(self, values: Sequence[Fraction]) -> WeightVector:
        return WeightVector.unchecked(values)


class MissingBayesDenominator(Mutation):
    name = "missing_bayes_denominator"
    description = "Mixture action probabilities are not divided by w . P(h)"

    def mix_agents(self, weights: WeightVector, agents: Sequence[Agent]) -> Agent:
        return MixtureAgent(weights, agents, bayes_denominator=False)


class DualSkipsNegation(Mutation):
    name = "dual_skips_negation"
    description = "Dual agent consults the original history instead of the reward-negated one"

    def dual_agent(self, agent: Agent) -> Agent:
        return DualAgent(agent, negate=False)


class HalvedTailEnv(Environment):
    """Delegates everything to the wrapped environment but advertises half its tail bound."""
    family = "halved"

    def __init__(self, base: Environment):
        super().__init__(base.spaces)
        self.base = base

    def respond(self, h):
        return self.base.respond(h)

    def tail_bound(self, t: int) -> Optional[Fraction]:
        bound = self.base.tail_bound(t)
        return None if bound is None else bound / 2

    @property
    def horizon(self) -> Optional[int]:
        return self.base.horizon

    @property
    def descriptor(self) -> Dict[str, Any]:
        return self.base.descriptor


class HalvedTailBound(Mutation):
    name = "halved_tail_bound"
    description = "Environments advertise half of their certified tail bound"

    def wrap_env(self, env: Environment) -> Environment:
        return HalvedTailEnv(env)


CATALOG: Dict[str, Mutation] = {
    mutation.name: mutation
    for mutation in (
        Mutation(),
        NonuniformFallback(),
        UnnormalizedWeights(),
        MissingBayesDenominator(),
        DualSkipsNegation(),
        HalvedTailBound(),
    )
}

DEFECTS = tuple(name for name in CATALOG if name != "none")


def get_mutation(name: Optional[str]) -> Mutation:
    if name is None:
        return CATALOG["none"]
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownName(f"Unknown mutation {name!r}; expected one of {sorted(CATALOG)}")
