# services/mixture_lab/app/services/envmix.py
"""
Environment-side combinators: Bayes mixtures of environments, the
reward-negating dual environment, and the universal environment whose
value for every agent is the measure's Upsilon.
"""
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from app.core.errors import (
    InvalidWeights,
    LengthMismatch,
    NoTailBound,
    NotStronglyWellBehaved,
    SpacesMismatch,
)
from app.core.logging import setup_logger
from app.models.environments import Environment, SilentEnv
from app.models.primitives import ZERO, Dist, Fraction, History, dot, dual_history, format_rational
from app.services.valuation import WeightedMeasure

logger = setup_logger("envmix")


@dataclass(frozen=True)
class EnvWeightVector:
    """Positive weights for the listed environments plus residual mass on the silent one."""
    weights: Tuple[Fraction, ...]
    silent_tail: Fraction = ZERO

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(self.weights))
        if not self.weights:
            raise InvalidWeights("An environment mixture needs at least one weight")
        for w in self.weights:
            if w <= 0:
                raise InvalidWeights(f"Weight {format_rational(w)} is not positive")
        if self.silent_tail < 0:
            raise InvalidWeights("silent_tail must be non-negative")
        total = sum(self.weights, ZERO) + self.silent_tail
        if total != 1:
            raise InvalidWeights(f"Weights plus silent tail sum to {format_rational(total)}, not 1")

    def __len__(self) -> int:
        return len(self.weights)


def env_prob_vector(envs: Sequence[Environment], h: History) -> Tuple[Fraction, ...]:
    return tuple(env.prob(h) for env in envs)


class MixtureEnvironment(Environment):
    """
    w.mu: issues x with (w . P_mu(hx)) / (w . P_mu(h)), or uniformly over
    the percepts where every component has probability 0.
    """
    family = "envmix"

    def __init__(self, weights: EnvWeightVector, envs: Sequence[Environment]):
        if len(weights) != len(envs):
            raise LengthMismatch(f"{len(weights)} weights for {len(envs)} environments")
        spaces = envs[0].spaces
        for env in envs:
            if env.spaces != spaces:
                raise SpacesMismatch("Mixture components are declared over different spaces")
            if not env.has_tail_bound:
                raise NoTailBound(f"{env!r} does not advertise a tail bound")
        super().__init__(spaces)
        self.mixture_weights = weights
        self.declared = tuple(envs)
        components: List[Tuple[Environment, Fraction]] = list(zip(envs, weights.weights))
        if weights.silent_tail > 0:
            components.append((SilentEnv(spaces), weights.silent_tail))
        self.envs = tuple(env for env, _ in components)
        self.weights = tuple(w for _, w in components)
        self._vectors: Dict[History, Tuple[Fraction, ...]] = {}

    def prob_vector(self, h: History) -> Tuple[Fraction, ...]:
        vector = self._vectors.get(h)
        if vector is None:
            vector = env_prob_vector(self.envs, h)
            self._vectors[h] = vector
        return vector

    def respond(self, h: History) -> Dist:
        probs = self.prob_vector(h)
        denominator = dot(self.weights, probs)
        if denominator == 0:
            return self.spaces.uniform_percepts
        component_dists = [env.respond(h) for env in self.envs]
        return Dist(
            self.spaces.percepts,
            tuple(
                sum((w * p * dist.masses[i] for w, p, dist in zip(self.weights, probs, component_dists)), ZERO)
                / denominator
                for i in range(len(self.spaces.percepts))
            ),
        )

    def tail_bound(self, t: int) -> Optional[Fraction]:
        return sum((w * env.tail_bound(t) for env, w in zip(self.envs, self.weights)), ZERO)

    @property
    def horizon(self) -> Optional[int]:
        horizons = [env.horizon for env in self.envs]
        if any(h is None for h in horizons):
            return None
        return max(horizons)

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {
            "kind": "envmix",
            "weights": [format_rational(w) for w in self.mixture_weights.weights],
            "envs": [env.descriptor for env in self.declared],
            "silent_tail": format_rational(self.mixture_weights.silent_tail),
        }


class DualEnvironment(Environment):
    """Issues (o,r) after h with the probability mu gives (o,-r) after the dual of h."""
    family = "envdual"

    def __init__(self, base: Environment, negate: bool = True):
        base.spaces.require_negation_closed()
        super().__init__(base.spaces)
        self.base = base
        self.negate = negate

    def respond(self, h: History) -> Dist:
        if not self.negate:
            return self.base.respond(h)
        source = self.base.respond(dual_history(h))
        return Dist(self.spaces.percepts, tuple(source[x.negated()] for x in self.spaces.percepts))

    def tail_bound(self, t: int) -> Optional[Fraction]:
        return self.base.tail_bound(t)

    @property
    def horizon(self) -> Optional[int]:
        return self.base.horizon

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {"kind": "envdual", "env": self.base.descriptor}


def mix_envs(weights: EnvWeightVector, envs: Sequence[Environment]) -> MixtureEnvironment:
    return MixtureEnvironment(weights, envs)


def env_dual(env: Environment) -> DualEnvironment:
    return DualEnvironment(env)


def universal_env(measure: WeightedMeasure) -> MixtureEnvironment:
    """mu_Upsilon: the mixture over a normalized, strongly well-behaved measure."""
    measure.require_normalized()
    if not measure.strongly_well_behaved:
        raise NotStronglyWellBehaved("Every component must keep V_t inside [-1,1] for every agent")
    logger.info(f"Building universal environment over {len(measure.components)} components")
    return MixtureEnvironment(EnvWeightVector(measure.weights, ZERO), measure.environments)


def paired_measure(envs: Iterable[Environment]) -> WeightedMeasure:
    """Equal weights on each environment and its dual, which makes the measure strongly symmetric."""
    envs = list(envs)
    share = Fraction(1, 2 * len(envs))
    components: List[Tuple[Environment, Fraction]] = []
    for env in envs:
        components.extend([(env, share), (DualEnvironment(env), share)])
    return WeightedMeasure(components)
