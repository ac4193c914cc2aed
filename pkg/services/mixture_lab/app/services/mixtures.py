# services/mixture_lab/app/services/mixtures.py
"""
Agent-side combinators: weighted mixtures, duals, single-history patches
and distribution mixing, plus the depth-T truncations of agent
equivalence, self-duality and the sup-distance between agents.
"""
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from app.core.errors import (
    CarrierMismatch,
    InvalidWeights,
    LengthMismatch,
    SpacesMismatch,
    SymbolOutOfSpace,
    WrongParity,
)
from app.core.logging import setup_logger
from app.models.agents import Agent
from app.models.primitives import (
    ZERO,
    Dist,
    Fraction,
    History,
    NodeBudget,
    Parity,
    children,
    dot,
    dual_history,
    format_rational,
    require_depth,
)

logger = setup_logger("mixtures")

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class WeightVector:
    """Positive rational weights summing to exactly 1."""
    weights: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(self.weights))
        if not self.weights:
            raise InvalidWeights("A weight vector needs at least one weight")
        for w in self.weights:
            if w <= 0:
                raise InvalidWeights(f"Weight {format_rational(w)} is not positive")
        total = sum(self.weights, ZERO)
        if total != 1:
            raise InvalidWeights(f"Weights sum to {format_rational(total)}, not 1")

    @classmethod
    def unchecked(cls, weights: Iterable[Fraction]) -> "WeightVector":
        """Build without validation. Only the mutation catalog uses this."""
        vector = object.__new__(cls)
        object.__setattr__(vector, "weights", tuple(weights))
        return vector

    @classmethod
    def equal(cls, n: int) -> "WeightVector":
        return cls((Fraction(1, n),) * n)

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def to_list(self) -> List[str]:
        return [format_rational(w) for w in self.weights]


@dataclass(frozen=True)
class PatchSpec:
    """h0 and the replacement distribution m of a single-history patch."""
    site: History
    replacement: Dist

    def __post_init__(self) -> None:
        if self.site.parity is not Parity.ENDS_IN_PERCEPT:
            raise WrongParity(f"Patch site {self.site} does not end in a percept")
        if self.replacement.carrier != self.site.spaces.actions:
            raise SymbolOutOfSpace("Patch replacement is not over the declared actions")


@dataclass(frozen=True)
class Witness:
    """First history where two agents disagree, with the two disagreeing rationals."""
    history: History
    left: Fraction
    right: Fraction
    detail: str

    def __str__(self) -> str:
        return f"{self.detail} at '{self.history}': {format_rational(self.left)} != {format_rational(self.right)}"


def _require_same_spaces(agents: Sequence[Agent]) -> None:
    spaces = agents[0].spaces
    if any(agent.spaces != spaces for agent in agents):
        raise SpacesMismatch("Mixture components are declared over different spaces")


class MixtureAgent(Agent):
    """
    w.pi: acts with (w . P^pi(hy)) / (w . P^pi(h)), or by the fallback
    (uniform) where every component has probability 0.

    The component probability vectors share one memo per mixture instance.
    """
    family = "mix"

    def __init__(
        self,
        weights: WeightVector,
        agents: Sequence[Agent],
        fallback: Optional[Dist] = None,
        bayes_denominator: bool = True,
    ):
        if len(weights) != len(agents):
            raise LengthMismatch(f"{len(weights)} weights for {len(agents)} agents")
        _require_same_spaces(agents)
        super().__init__(agents[0].spaces)
        self.weights = weights
        self.agents = tuple(agents)
        self.fallback = fallback if fallback is not None else self.spaces.uniform_actions
        self.bayes_denominator = bayes_denominator
        self._vectors: Dict[History, Tuple[Fraction, ...]] = {}

    def prob_vector(self, h: History) -> Tuple[Fraction, ...]:
        vector = self._vectors.get(h)
        if vector is None:
            vector = tuple(agent.prob(h) for agent in self.agents)
            self._vectors[h] = vector
        return vector

    def decide(self, h: History) -> Dist:
        probs = self.prob_vector(h)
        denominator = dot(self.weights, probs)
        if denominator == 0:
            return self.fallback
        component_acts = [agent.act(h) for agent in self.agents]
        numerators = tuple(
            sum((w * p * dist.masses[i] for w, p, dist in zip(self.weights, probs, component_acts)), ZERO)
            for i in range(len(self.spaces.actions))
        )
        if not self.bayes_denominator:
            return Dist.unchecked(self.spaces.actions, numerators)
        return Dist(self.spaces.actions, tuple(n / denominator for n in numerators))

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": "mix",
            "weights": self.weights.to_list(),
            "agents": [agent.descriptor for agent in self.agents],
        }


class DualAgent(Agent):
    """pi-bar: acts as pi would on the reward-negated history."""
    family = "dual"

    def __init__(self, base: Agent, negate: bool = True):
        base.spaces.require_negation_closed()
        super().__init__(base.spaces)
        self.base = base
        self.negate = negate

    def decide(self, h: History) -> Dist:
        return self.base.act(dual_history(h) if self.negate else h)

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {"kind": "dual", "agent": self.base.descriptor}


class PatchedAgent(Agent):
    """pi^{h0 -> m}: m decides the action at h0, pi everywhere else."""
    family = "patch"

    def __init__(self, base: Agent, patch: PatchSpec):
        super().__init__(base.spaces)
        self.base = base
        self.patch = patch

    def decide(self, h: History) -> Dist:
        if h == self.patch.site:
            return self.patch.replacement
        return self.base.act(h)

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": "patch",
            "agent": self.base.descriptor,
            "site": str(self.patch.site),
            "dist": self.patch.replacement.to_mapping(),
        }


def mix_agents(weights: WeightVector, agents: Sequence[Agent]) -> MixtureAgent:
    return MixtureAgent(weights, agents)


def dual_agent(agent: Agent) -> DualAgent:
    return DualAgent(agent)


def patch_agent(agent: Agent, patch: PatchSpec) -> PatchedAgent:
    return PatchedAgent(agent, patch)


def symmetrize(agent: Agent) -> MixtureAgent:
    """(1/2, 1/2) . (pi, pi-bar), which is self-dual."""
    return MixtureAgent(WeightVector((HALF, HALF)), (agent, DualAgent(agent)))


def mix_dists(weights: WeightVector, dists: Sequence[Dist]) -> Dist:
    """Pointwise convex combination w . m."""
    if len(weights) != len(dists):
        raise LengthMismatch(f"{len(weights)} weights for {len(dists)} distributions")
    carrier = dists[0].carrier
    if any(dist.carrier != carrier for dist in dists):
        raise CarrierMismatch("Distributions to mix are over different carriers")
    return Dist(
        carrier,
        tuple(dot(weights, column) for column in zip(*(dist.masses for dist in dists))),
    )


def equivalence_witness(p: Agent, q: Agent, depth: int, budget: Optional[NodeBudget] = None) -> Optional[Witness]:
    """
    First history of length <= 2*depth where p and q are told apart:
    one assigns it probability 0 and the other does not, or both reach a
    history ending in a percept and act differently there.
    """
    require_depth(depth)
    if p.spaces != q.spaces:
        raise SpacesMismatch("Agents are declared over different spaces")
    budget = budget or NodeBudget()
    stack = [p.spaces.empty]
    while stack:
        h = stack.pop()
        budget.tick()
        pp, pq = p.prob(h), q.prob(h)
        if (pp == 0) != (pq == 0):
            return Witness(h, pp, pq, "zero-probability sets differ")
        if pp == 0:
            continue
        if h.parity is Parity.ENDS_IN_PERCEPT:
            dp, dq = p.act(h), q.act(h)
            if dp != dq:
                y = next(y for y, a, b in zip(dp.carrier, dp.masses, dq.masses) if a != b)
                return Witness(h.extend(y), dp[y], dq[y], f"action {y} probabilities differ")
        if len(h) < 2 * depth:
            stack.extend(h.extend(item) for item in reversed(children(h)))
    return None


def equivalent_up_to(p: Agent, q: Agent, depth: int, budget: Optional[NodeBudget] = None) -> bool:
    """p == q (same impossible histories, same behaviour elsewhere), checked up to depth."""
    return equivalence_witness(p, q, depth, budget) is None


def self_dual_up_to(agent: Agent, depth: int, budget: Optional[NodeBudget] = None) -> bool:
    return equivalent_up_to(agent, DualAgent(agent), depth, budget)


def distance_witness(
    p: Agent, q: Agent, depth: int, budget: Optional[NodeBudget] = None
) -> Tuple[Fraction, Optional[History]]:
    """The truncated sup |p(y|h) - q(y|h)| and the history-plus-action attaining it."""
    require_depth(depth)
    budget = budget or NodeBudget()
    best, where = ZERO, None
    stack = [p.spaces.empty]
    while stack:
        h = stack.pop()
        budget.tick()
        if h.parity is Parity.ENDS_IN_PERCEPT:
            dp, dq = p.act(h), q.act(h)
            for y, a, b in zip(dp.carrier, dp.masses, dq.masses):
                if abs(a - b) > best:
                    best, where = abs(a - b), h.extend(y)
        if len(h) < 2 * depth - 1:
            stack.extend(h.extend(item) for item in reversed(children(h)))
    return best, where


def distance_up_to(p: Agent, q: Agent, depth: int, budget: Optional[NodeBudget] = None) -> Fraction:
    return distance_witness(p, q, depth, budget)[0]


def is_deterministic_in_possible_histories(agent: Agent, depth: int, budget: Optional[NodeBudget] = None) -> bool:
    """Every history ending in a percept with P^pi(h) != 0 gets a point mass, up to depth."""
    budget = budget or NodeBudget()
    stack = [agent.spaces.empty]
    while stack:
        h = stack.pop()
        budget.tick()
        if agent.prob(h) == 0:
            continue
        if h.parity is Parity.ENDS_IN_PERCEPT and not agent.act(h).is_point_mass():
            return False
        if len(h) < 2 * depth - 1:
            stack.extend(h.extend(item) for item in children(h))
    return True
