# test_envmix.py

import logging

import pytest

from app.core.errors import InvalidWeights, LengthMismatch, NotNormalized, NotStronglyWellBehaved
from app.models.agents import RandomTableAgent
from app.models.environments import RandomTableEnv, builtin_env
from app.models.primitives import Fraction, Percept, parse_history
from app.services.envmix import EnvWeightVector, env_dual, mix_envs, paired_measure, universal_env
from app.services.valuation import WeightedMeasure, upsilon, value_at

logger = logging.getLogger(__name__)

HALVES = EnvWeightVector((Fraction(1, 2), Fraction(1, 2)))


def test_env_weight_vector_validation():
    logger.info("Testing environment weight validation")
    with pytest.raises(InvalidWeights):
        EnvWeightVector((Fraction(1, 2),))
    with pytest.raises(InvalidWeights):
        EnvWeightVector((Fraction(1),), Fraction(-1, 2))
    with pytest.raises(InvalidWeights):
        EnvWeightVector(())
    assert len(EnvWeightVector((Fraction(1, 2),), Fraction(1, 2))) == 1


def test_dual_environment_negates_values(spaces, e1, db, da):
    logger.info("Testing dual environments")
    dual = env_dual(e1)
    assert value_at(db, dual, 2) == -1
    assert value_at(da, dual, 2) == 1
    assert dual.horizon == 2
    assert dual.perceive(parse_history("(o,0) b", spaces))[Percept("o", Fraction(-1))] == 1


def test_mixture_environment_posterior(spaces, e1, db):
    logger.info("Testing mixture environment percepts")
    mixture = mix_envs(HALVES, (e1, env_dual(e1)))
    dist = mixture.perceive(parse_history("(o,0) b", spaces))
    assert dist[Percept("o", Fraction(1))] == Fraction(1, 2)
    assert dist[Percept("o", Fraction(-1))] == Fraction(1, 2)
    assert value_at(db, mixture, 2) == 0
    assert mixture.horizon == 2
    with pytest.raises(LengthMismatch):
        mix_envs(HALVES, (e1,))


def test_mixture_environment_falls_back_to_uniform(spaces, e1):
    logger.info("Testing mixture environment fallback")
    mixture = mix_envs(HALVES, (e1, env_dual(e1)))
    impossible = parse_history("(o,1) a", spaces)
    assert mixture.prob(impossible) == 0
    assert mixture.perceive(impossible) == spaces.uniform_percepts


def test_silent_tail_mass(e1, db):
    logger.info("Testing residual weight on the silent environment")
    partial = mix_envs(EnvWeightVector((Fraction(1, 2),), Fraction(1, 2)), (e1,))
    assert value_at(db, partial, 2) == Fraction(1, 2)
    assert partial.tail_bound(1) == Fraction(1, 2)
    assert partial.tail_bound(2) == 0
    assert partial.descriptor["silent_tail"] == "1/2"


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_universal_environment_matches_upsilon(spaces, e1, seed):
    logger.info(f"Testing V in the universal environment for seed {seed}")
    measure = WeightedMeasure(
        [(e1, Fraction(1, 3)), (RandomTableEnv(spaces, 2, seed, 6, sparse=True), Fraction(2, 3))]
    )
    universal = universal_env(measure)
    agent = RandomTableAgent(spaces, seed + 10, 6)
    for t in (1, 2):
        assert value_at(agent, universal, t) == upsilon(measure, agent, t).value_at_t


def test_universal_environment_preconditions(spaces, e1):
    logger.info("Testing universal environment preconditions")
    with pytest.raises(NotNormalized):
        universal_env(WeightedMeasure([(e1, Fraction(1, 2))]))
    generous = builtin_env(
        "table",
        {"horizon": 2, "entries": {"": {"(o,1)": "1"}, "(o,1) a": {"(o,1)": "1"}}},
        spaces,
    )
    with pytest.raises(NotStronglyWellBehaved):
        universal_env(WeightedMeasure([(generous, Fraction(1))]))


def test_paired_measure_is_symmetric(e1, da, db, uniform_agent):
    logger.info("Testing paired measures")
    measure = paired_measure([e1])
    assert measure.normalized
    assert measure.weights == (Fraction(1, 2), Fraction(1, 2))
    for agent in (da, db, uniform_agent):
        assert upsilon(measure, agent, 2).value_at_t == 0
