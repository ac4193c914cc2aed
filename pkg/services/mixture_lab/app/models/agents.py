# services/mixture_lab/app/models/agents.py
"""
Agents map every history ending in a percept to a distribution over
actions. Concrete families live here; combinators (mixture, dual, patch)
live in app.services.mixtures.
"""
from abc import ABC, abstractmethod
from random import Random
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from app.core.errors import AlgebraError, BadParams, SymbolOutOfSpace, UnknownFamily, WrongParity
from app.core.logging import setup_logger
from app.models.primitives import (
    ONE,
    Dist,
    Fraction,
    History,
    Parity,
    Spaces,
    dist_from_mapping,
    format_rational,
    lattice_dist,
    parse_history,
    parse_rational,
    point_mass,
)

logger = setup_logger("agents")


class Agent(ABC):
    """
    pi : (EA)*E -> Delta(A), total and pure.

    `prob` memoizes P^pi by history. Cache entries are write-once values of
    a pure function, so concurrent readers never observe a different result
    than the uncached recursion would give.
    """
    family = "agent"

    def __init__(self, spaces: Spaces):
        self.spaces = spaces
        self._probs: Dict[History, Fraction] = {}

    @abstractmethod
    def decide(self, h: History) -> Dist:
        """Action distribution at h; h is known to end in a percept."""

    @property
    @abstractmethod
    def descriptor(self) -> Dict[str, Any]:
        """Serializable provenance in the scenario descriptor language."""

    def act(self, h: History) -> Dist:
        if h.parity is not Parity.ENDS_IN_PERCEPT:
            raise WrongParity(f"Agents act on histories ending in a percept, got {h.parity.value}")
        return self.decide(h)

    def prob(self, h: History) -> Fraction:
        """P^pi(h): product of this agent's probabilities for the actions in h."""
        cached = self._probs.get(h)
        if cached is not None:
            return cached
        if not h.items:
            value = ONE
        elif h.parity is Parity.ENDS_IN_ACTION:
            parent = h.parent
            value = self.prob(parent)
            if value:
                value = value * self.decide(parent)[h.last]
        else:
            value = self.prob(h.parent)
        self._probs[h] = value
        return value

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.descriptor})"


class UniformAgent(Agent):
    family = "uniform"

    def decide(self, h: History) -> Dist:
        return self.spaces.uniform_actions

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {"kind": "uniform"}


class ConstantAgent(Agent):
    """Deterministic agent that always takes the same action."""
    family = "constant"

    def __init__(self, spaces: Spaces, action: str):
        super().__init__(spaces)
        self.action = action
        self._dist = point_mass(spaces.actions, action)

    def decide(self, h: History) -> Dist:
        return self._dist

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {"kind": "constant", "action": self.action}


class TableAgent(Agent):
    """Finite table of histories to distributions, with a default for the rest."""
    family = "table"

    def __init__(
        self,
        spaces: Spaces,
        entries: Mapping[History, Dist],
        default: Optional[Dist] = None,
    ):
        super().__init__(spaces)
        for h, dist in entries.items():
            if h.parity is not Parity.ENDS_IN_PERCEPT:
                raise WrongParity(f"Table key {h} does not end in a percept")
            if dist.carrier != spaces.actions:
                raise SymbolOutOfSpace(f"Table entry at {h} is not over the declared actions")
        self.entries = dict(entries)
        self.default = default if default is not None else spaces.uniform_actions

    def decide(self, h: History) -> Dist:
        return self.entries.get(h, self.default)

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": "table",
            "entries": {str(h): dist.to_mapping() for h, dist in self.entries.items()},
            "default": self.default.to_mapping(),
        }


class LastRewardGreedyAgent(Agent):
    """Takes `hi` when the most recent reward is at least `threshold`, `lo` otherwise."""
    family = "greedy"

    def __init__(self, spaces: Spaces, threshold: Fraction, hi: str, lo: str):
        super().__init__(spaces)
        self.threshold = threshold
        self.hi = hi
        self.lo = lo
        self._hi = point_mass(spaces.actions, hi)
        self._lo = point_mass(spaces.actions, lo)

    def decide(self, h: History) -> Dist:
        return self._hi if h.last.reward >= self.threshold else self._lo

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": "greedy",
            "threshold": format_rational(self.threshold),
            "hi": self.hi,
            "lo": self.lo,
        }


class RandomTableAgent(Agent):
    """
    Seeded random table agent. The distribution at each history is drawn
    lazily from a generator seeded by (seed, history), so it is a fixed
    function of the history with masses k/denominator.
    """
    family = "random"

    def __init__(self, spaces: Spaces, seed: int, denominator: int):
        super().__init__(spaces)
        if denominator <= 0:
            raise BadParams("denominator must be positive")
        self.seed = seed
        self.denominator = denominator
        self._decisions: Dict[History, Dist] = {}

    def decide(self, h: History) -> Dist:
        dist = self._decisions.get(h)
        if dist is None:
            rng = Random(f"agent|{self.seed}|{h.key}")
            dist = lattice_dist(self.spaces.actions, rng, self.denominator)
            self._decisions[h] = dist
        return dist

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {"kind": "random", "seed": self.seed, "denominator": self.denominator}


def act(agent: Agent, h: History) -> Dist:
    return agent.act(h)


def agent_prob(agent: Agent, h: History) -> Fraction:
    return agent.prob(h)


def agent_prob_vector(agents: Sequence[Agent], h: History) -> Tuple[Fraction, ...]:
    """P^{pi-vector}(h), componentwise."""
    return tuple(agent.prob(h) for agent in agents)


def _require(params: Mapping[str, Any], *names: str) -> List[Any]:
    missing = [name for name in names if name not in params]
    if missing:
        raise BadParams(f"Missing parameters {missing}")
    return [params[name] for name in names]


def _require_action(spaces: Spaces, action: Any) -> str:
    if action not in spaces.actions:
        raise BadParams(f"{action!r} is not a declared action")
    return action


FAMILY_ALIASES = {
    "deterministic-constant": "constant",
    "last-reward-greedy": "greedy",
}


def builtin_agent(family: str, params: Mapping[str, Any], spaces: Spaces) -> Agent:
    """
    Build one of the named agent families.

    uniform; constant(action); table(entries, default?);
    greedy(threshold, hi, lo); random(seed, denominator)
    """
    family = FAMILY_ALIASES.get(family, family)
    try:
        if family == "uniform":
            return UniformAgent(spaces)
        if family == "constant":
            (action,) = _require(params, "action")
            return ConstantAgent(spaces, _require_action(spaces, action))
        if family == "table":
            (entries,) = _require(params, "entries")
            default = params.get("default")
            return TableAgent(
                spaces,
                {_as_history(key, spaces): _as_action_dist(value, spaces) for key, value in entries.items()},
                _as_action_dist(default, spaces) if default is not None else None,
            )
        if family == "greedy":
            threshold, hi, lo = _require(params, "threshold", "hi", "lo")
            return LastRewardGreedyAgent(
                spaces, parse_rational(threshold), _require_action(spaces, hi), _require_action(spaces, lo)
            )
        if family == "random":
            (seed,) = _require(params, "seed")
            return RandomTableAgent(spaces, int(seed), int(params.get("denominator", 12)))
    except BadParams:
        raise
    except AlgebraError as e:
        raise BadParams(f"{family}: {e.detail}")
    logger.debug(f"Rejected unknown agent family {family}")
    raise UnknownFamily(f"Unknown agent family {family!r}")


def _as_history(key: Any, spaces: Spaces) -> History:
    return key if isinstance(key, History) else parse_history(key, spaces)


def _as_action_dist(value: Any, spaces: Spaces) -> Dist:
    return value if isinstance(value, Dist) else dist_from_mapping(spaces.actions, value)
