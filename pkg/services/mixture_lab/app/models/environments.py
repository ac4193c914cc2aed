# services/mixture_lab/app/models/environments.py
"""
Environments map every history that is empty or ends in an action to a
distribution over percepts. Each family may advertise a tail bound b(t)
with |V_mu - V_{mu,t}| <= b(t) for every agent; only environments with a
tail bound take part in measures and mixture environments.
"""
from abc import ABC, abstractmethod
from itertools import product
from random import Random
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from app.core.errors import (
    AlgebraError,
    BadParams,
    NoFiniteHorizon,
    SymbolOutOfSpace,
    UnknownFamily,
    WrongParity,
)
from app.core.logging import setup_logger
from app.models.agents import Agent, TableAgent
from app.models.primitives import (
    ONE,
    ZERO,
    Dist,
    Fraction,
    History,
    NodeBudget,
    Parity,
    Percept,
    Spaces,
    dist_from_mapping,
    format_rational,
    lattice_dist,
    parse_history,
    parse_rational,
    point_mass,
)

logger = setup_logger("environments")


class Environment(ABC):
    """mu : (EA)* -> Delta(E), total and pure, with P_mu memoized like P^pi."""
    family = "environment"

    def __init__(self, spaces: Spaces):
        self.spaces = spaces
        self._probs: Dict[History, Fraction] = {}

    @abstractmethod
    def respond(self, h: History) -> Dist:
        """Percept distribution at h; h is known to be empty or end in an action."""

    @property
    @abstractmethod
    def descriptor(self) -> Dict[str, Any]:
        """Serializable provenance in the scenario descriptor language."""

    def tail_bound(self, t: int) -> Optional[Fraction]:
        """b(t), or None when the family certifies nothing."""
        return None

    @property
    def horizon(self) -> Optional[int]:
        """Smallest H with b(t) = 0 for all t >= H, when one exists."""
        return None

    @property
    def has_tail_bound(self) -> bool:
        return self.tail_bound(0) is not None

    def perceive(self, h: History) -> Dist:
        if h.parity is Parity.ENDS_IN_PERCEPT:
            raise WrongParity("Environments respond to histories that are empty or end in an action")
        return self.respond(h)

    def prob(self, h: History) -> Fraction:
        """P_mu(h): product of this environment's probabilities for the percepts in h."""
        cached = self._probs.get(h)
        if cached is not None:
            return cached
        if not h.items:
            value = ONE
        elif h.parity is Parity.ENDS_IN_PERCEPT:
            parent = h.parent
            value = self.prob(parent)
            if value:
                value = value * self.respond(parent)[h.last]
        else:
            value = self.prob(h.parent)
        self._probs[h] = value
        return value

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.descriptor})"


def _zero_reward_padding(spaces: Spaces, padding: Optional[Dist]) -> Dist:
    if not spaces.contains_zero:
        raise BadParams("Finite-horizon environments need 0 among the rewards")
    if padding is None:
        return point_mass(spaces.percepts, Percept(spaces.observations[0], ZERO))
    for x, mass in padding.support():
        if x.reward != 0:
            raise BadParams(f"Padding percept {x} must carry reward 0")
    return padding


def _max_abs_reward(dist: Dist) -> Fraction:
    return max((abs(x.reward) for x, _ in dist.support()), default=ZERO)


class SilentEnv(Environment):
    """Always issues the same zero-reward percept."""
    family = "silent"

    def __init__(self, spaces: Spaces, observation: Optional[str] = None):
        super().__init__(spaces)
        if observation is not None and observation not in spaces.observations:
            raise SymbolOutOfSpace(f"{observation} is not a declared observation")
        self.observation = observation or spaces.observations[0]
        if not spaces.contains_zero:
            raise BadParams("The silent environment needs 0 among the rewards")
        self._dist = point_mass(spaces.percepts, Percept(self.observation, ZERO))

    def respond(self, h: History) -> Dist:
        return self._dist

    def tail_bound(self, t: int) -> Optional[Fraction]:
        return ZERO

    @property
    def horizon(self) -> Optional[int]:
        return 0

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {"kind": "silent", "observation": self.observation}


class FiniteHorizonTableEnv(Environment):
    """
    Table environment with H reward-carrying percepts.

    Entries are keyed by histories of length < 2H. Unmapped histories inside
    the horizon get `default`; every percept after the H-th comes from the
    zero-reward `padding`, so V_{mu,t} = V_mu exactly for t >= H.
    """
    family = "table"

    def __init__(
        self,
        spaces: Spaces,
        horizon: int,
        entries: Mapping[History, Dist],
        padding: Optional[Dist] = None,
        default: Optional[Dist] = None,
    ):
        super().__init__(spaces)
        if horizon <= 0:
            raise BadParams("horizon must be a positive integer")
        self.declared_horizon = horizon
        self.padding = _zero_reward_padding(spaces, padding)
        self.default = default if default is not None else self.padding
        for h, dist in entries.items():
            if h.parity is Parity.ENDS_IN_PERCEPT:
                raise WrongParity(f"Table key {h} ends in a percept")
            if len(h) >= 2 * horizon:
                raise BadParams(f"Table key {h} lies beyond horizon {horizon}")
            if dist.carrier != spaces.percepts:
                raise SymbolOutOfSpace(f"Table entry at {h} is not over the declared percepts")
        self.entries = dict(entries)

        # step_bounds[s-1] bounds |r| of the s-th percept
        step_bounds = [_max_abs_reward(self.default)] * horizon
        for h, dist in self.entries.items():
            step = h.completed_steps
            step_bounds[step] = max(step_bounds[step], _max_abs_reward(dist))
        self._step_bounds = step_bounds

    def respond(self, h: History) -> Dist:
        if h.completed_steps >= self.declared_horizon:
            return self.padding
        return self.entries.get(h, self.default)

    def tail_bound(self, t: int) -> Optional[Fraction]:
        return sum(self._step_bounds[t:], ZERO)

    @property
    def horizon(self) -> Optional[int]:
        return self.declared_horizon

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": "table",
            "horizon": self.declared_horizon,
            "entries": {str(h): dist.to_mapping() for h, dist in self.entries.items()},
            "padding": self.padding.to_mapping(),
            "default": self.default.to_mapping(),
        }


class TerminatingEnv(Environment):
    """
    Stochastically terminating environment.

    The first percept follows the start rule. After each action the
    environment continues with probability gamma, issuing a percept from the
    rule for that action, and otherwise issues the zero-reward halt percept,
    which then repeats forever. The s-th percept is live with probability
    gamma^(s-1), hence b(t) = gamma^t / (1 - gamma).
    """
    family = "terminating"

    def __init__(
        self,
        spaces: Spaces,
        gamma: Fraction,
        rules: Mapping[Optional[str], Dist],
        halt_observation: str,
    ):
        super().__init__(spaces)
        if not 0 < gamma < 1:
            raise BadParams("gamma must lie strictly between 0 and 1")
        if not spaces.contains_zero:
            raise BadParams("Terminating environments need 0 among the rewards")
        if halt_observation not in spaces.observations:
            raise SymbolOutOfSpace(f"{halt_observation} is not a declared observation")
        if None not in rules:
            raise BadParams("A start rule (key \"\") is required")
        for key, dist in rules.items():
            if key is not None and key not in spaces.actions:
                raise BadParams(f"Rule key {key!r} is not a declared action")
            if dist.carrier != spaces.percepts:
                raise SymbolOutOfSpace("Rules must be distributions over the declared percepts")
            if any(x.observation == halt_observation for x, _ in dist.support()):
                raise BadParams(f"Rules may not issue the halt observation {halt_observation}")
        self.gamma = gamma
        self.rules = dict(rules)
        self.halt_observation = halt_observation
        self._halt = point_mass(spaces.percepts, Percept(halt_observation, ZERO))

    def _halted(self, h: History) -> bool:
        return any(x.observation == self.halt_observation for x in h.percepts())

    def respond(self, h: History) -> Dist:
        if not h.items:
            return self.rules[None]
        if self._halted(h):
            return self._halt
        rule = self.rules.get(h.last, self.rules[None])
        halt_mass = 1 - self.gamma
        masses = tuple(
            self.gamma * live + (halt_mass if halt else ZERO)
            for live, halt in zip(rule.masses, self._halt.masses)
        )
        return Dist(self.spaces.percepts, masses)

    def tail_bound(self, t: int) -> Optional[Fraction]:
        return self.gamma ** t / (1 - self.gamma)

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": "terminating",
            "gamma": format_rational(self.gamma),
            "halt": self.halt_observation,
            "rules": {key or "": dist.to_mapping() for key, dist in self.rules.items()},
        }


class RandomTableEnv(Environment):
    """
    Seeded random finite-horizon environment with lattice masses k/denominator.

    When `sparse`, only the H-th percept may carry a nonzero reward, which
    keeps every partial value inside [-1, 1].
    """
    family = "random"

    def __init__(self, spaces: Spaces, horizon: int, seed: int, denominator: int, sparse: bool = False):
        super().__init__(spaces)
        if horizon <= 0 or denominator <= 0:
            raise BadParams("horizon and denominator must be positive")
        self.padding = _zero_reward_padding(spaces, None)
        self.declared_horizon = horizon
        self.seed = seed
        self.denominator = denominator
        self.sparse = sparse
        self._quiet = tuple(x for x in spaces.percepts if x.reward == 0)
        self._max_reward = max(abs(r) for r in spaces.rewards)
        self._responses: Dict[History, Dist] = {}

    def respond(self, h: History) -> Dist:
        step = h.completed_steps
        if step >= self.declared_horizon:
            return self.padding
        dist = self._responses.get(h)
        if dist is None:
            rng = Random(f"env|{self.seed}|{h.key}")
            allowed = self._quiet if self.sparse and step < self.declared_horizon - 1 else None
            dist = lattice_dist(self.spaces.percepts, rng, self.denominator, allowed)
            self._responses[h] = dist
        return dist

    def tail_bound(self, t: int) -> Optional[Fraction]:
        if t >= self.declared_horizon:
            return ZERO
        if self.sparse:
            return self._max_reward
        return (self.declared_horizon - t) * self._max_reward

    @property
    def horizon(self) -> Optional[int]:
        return self.declared_horizon

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": "random",
            "horizon": self.declared_horizon,
            "seed": self.seed,
            "denominator": self.denominator,
            "sparse": self.sparse,
        }


def perceive(env: Environment, h: History) -> Dist:
    return env.perceive(h)


def env_prob(env: Environment, h: History) -> Fraction:
    return env.prob(h)


def joint_prob(agent: Agent, env: Environment, h: History) -> Fraction:
    """P^pi_mu(h), by its own recursion rather than as a product of factors."""
    value = ONE
    g = h.spaces.empty
    for item in h.items:
        if g.expects_percept:
            value = value * env.perceive(g)[item]
        else:
            value = value * agent.act(g)[item]
        if not value:
            return ZERO
        g = g.extend(item)
    return value


def joint_prob_vector(agents: Sequence[Agent], env: Environment, h: History) -> Tuple[Fraction, ...]:
    """P^{pi-vector}_mu(h), componentwise."""
    return tuple(joint_prob(agent, env, h) for agent in agents)


def value_extrema(env: Environment, t: int, budget: Optional[NodeBudget] = None) -> Tuple[Fraction, Fraction]:
    """
    Exact (min, max) of V^pi_{mu,t} over all agents, by expectimax over the
    env-reachable tree. The extremes are attained by deterministic agents.
    """
    budget = budget or NodeBudget()

    def walk(h: History, steps_left: int) -> Tuple[Fraction, Fraction]:
        lo = hi = ZERO
        for x, mass in env.perceive(h).support():
            budget.tick()
            child_lo = child_hi = ZERO
            if steps_left > 1:
                hx = h.extend(x)
                bounds = [walk(hx.extend(y), steps_left - 1) for y in env.spaces.actions]
                child_lo = min(b[0] for b in bounds)
                child_hi = max(b[1] for b in bounds)
            lo += mass * (x.reward + child_lo)
            hi += mass * (x.reward + child_hi)
        return lo, hi

    if t <= 0:
        return ZERO, ZERO
    return walk(env.spaces.empty, t)


def strong_well_behavedness_witness(
    env: Environment, horizon: int, budget: Optional[NodeBudget] = None
) -> Optional[Tuple[int, Fraction, Fraction]]:
    """First (t, min V_t, max V_t) leaving [-1, 1], or None when there is none."""
    bound = env.tail_bound(horizon)
    if bound is None or bound != 0:
        raise NoFiniteHorizon(f"Tail bound at {horizon} is not 0, so the horizon is not finite")
    budget = budget or NodeBudget()
    for t in range(1, horizon + 1):
        lo, hi = value_extrema(env, t, budget)
        if lo < -1 or hi > 1:
            logger.debug(f"V_t leaves [-1,1] at t={t}: [{format_rational(lo)}, {format_rational(hi)}]")
            return t, lo, hi
    return None


def certify_strongly_well_behaved(env: Environment, horizon: int, budget: Optional[NodeBudget] = None) -> bool:
    """-1 <= V^pi_{mu,t} <= 1 for every agent and every t (t <= horizon suffices)."""
    return strong_well_behavedness_witness(env, horizon, budget) is None


def deterministic_policies(env: Environment, depth: int, budget: Optional[NodeBudget] = None) -> Iterator[TableAgent]:
    """
    Every deterministic policy over the env-reachable histories with fewer
    than `depth` completed steps, as table agents. Histories outside the
    reachable tree take the first action.
    """
    budget = budget or NodeBudget()
    spaces = env.spaces
    fallback = point_mass(spaces.actions, spaces.actions[0])
    choices = {y: point_mass(spaces.actions, y) for y in spaces.actions}

    def env_node(h: History) -> List[Dict[History, Dist]]:
        if h.completed_steps >= depth:
            return [{}]
        per_percept = [agent_node(h.extend(x)) for x, _ in env.perceive(h).support()]
        tables = []
        for combination in product(*per_percept):
            budget.tick()
            merged: Dict[History, Dist] = {}
            for part in combination:
                merged.update(part)
            tables.append(merged)
        return tables

    def agent_node(hx: History) -> List[Dict[History, Dist]]:
        tables = []
        for y in spaces.actions:
            for table in env_node(hx.extend(y)):
                budget.tick()
                tables.append({hx: choices[y], **table})
        return tables

    for table in env_node(spaces.empty):
        yield TableAgent(spaces, table, fallback)


def builtin_env(family: str, params: Mapping[str, Any], spaces: Spaces) -> Environment:
    """
    Build one of the named environment families.

    silent(observation?); table(horizon, entries, padding?, default?);
    terminating(gamma, halt, rules); random(horizon, seed, denominator?, sparse?)
    """
    try:
        if family == "silent":
            return SilentEnv(spaces, params.get("observation"))
        if family == "table":
            if "horizon" not in params or "entries" not in params:
                raise BadParams("table environments need horizon and entries")
            padding = params.get("padding")
            default = params.get("default")
            return FiniteHorizonTableEnv(
                spaces,
                int(params["horizon"]),
                {_as_history(key, spaces): _as_percept_dist(value, spaces) for key, value in params["entries"].items()},
                _as_percept_dist(padding, spaces) if padding is not None else None,
                _as_percept_dist(default, spaces) if default is not None else None,
            )
        if family == "terminating":
            if not {"gamma", "halt", "rules"} <= set(params):
                raise BadParams("terminating environments need gamma, halt and rules")
            rules = {
                (key or None): _as_percept_dist(value, spaces) for key, value in params["rules"].items()
            }
            return TerminatingEnv(spaces, parse_rational(params["gamma"]), rules, params["halt"])
        if family == "random":
            if not {"horizon", "seed"} <= set(params):
                raise BadParams("random environments need horizon and seed")
            return RandomTableEnv(
                spaces,
                int(params["horizon"]),
                int(params["seed"]),
                int(params.get("denominator", 12)),
                bool(params.get("sparse", False)),
            )
    except BadParams:
        raise
    except AlgebraError as e:
        raise BadParams(f"{family}: {e.detail}")
    raise UnknownFamily(f"Unknown environment family {family!r}")


def _as_history(key: Any, spaces: Spaces) -> History:
    return key if isinstance(key, History) else parse_history(key, spaces)


def _as_percept_dist(value: Any, spaces: Spaces) -> Dist:
    return value if isinstance(value, Dist) else dist_from_mapping(spaces.percepts, value)
