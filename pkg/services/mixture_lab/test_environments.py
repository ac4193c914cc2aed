# test_environments.py

import logging

import pytest

from app.core.errors import BadParams, NoFiniteHorizon, SymbolOutOfSpace, UnknownFamily, WrongParity
from app.models.agents import ConstantAgent, RandomTableAgent
from app.models.environments import (
    RandomTableEnv,
    SilentEnv,
    TerminatingEnv,
    builtin_env,
    certify_strongly_well_behaved,
    deterministic_policies,
    env_prob,
    joint_prob,
    joint_prob_vector,
    perceive,
    strong_well_behavedness_witness,
    value_extrema,
)
from app.models.primitives import Fraction, Percept, Spaces, iter_histories, parse_history
from app.services.envmix import EnvWeightVector, mix_envs
from app.services.valuation import value_at

logger = logging.getLogger(__name__)


@pytest.fixture
def halting_spaces() -> Spaces:
    return Spaces(("a", "b"), ("o", "h"), (Fraction(-1), Fraction(0), Fraction(1)))


@pytest.fixture
def terminating(halting_spaces) -> TerminatingEnv:
    return builtin_env(
        "terminating",
        {
            "gamma": "1/2",
            "halt": "h",
            "rules": {"": {"(o,1)": "1"}, "a": {"(o,1)": "1"}, "b": {"(o,-1)": "1"}},
        },
        halting_spaces,
    )


def test_table_env_responds_by_history(spaces, e1):
    logger.info("Testing table environment responses")
    assert perceive(e1, spaces.empty)[Percept("o", Fraction(0))] == 1
    assert perceive(e1, parse_history("(o,0) b", spaces))[Percept("o", Fraction(1))] == 1
    assert perceive(e1, parse_history("(o,0) a", spaces))[Percept("o", Fraction(-1))] == 1
    # past the horizon only the zero-reward padding is issued
    assert perceive(e1, parse_history("(o,0) b (o,1) a", spaces))[Percept("o", Fraction(0))] == 1


def test_environments_reject_histories_ending_in_percepts(spaces, e1):
    logger.info("Testing environment parity check")
    with pytest.raises(WrongParity):
        perceive(e1, parse_history("(o,0)", spaces))


def test_env_prob_and_factorization(spaces, e1, db):
    logger.info("Testing P_mu and P^pi_mu")
    h = parse_history("(o,0) b (o,1)", spaces)
    assert env_prob(e1, h) == 1
    assert env_prob(e1, parse_history("(o,0) b (o,-1)", spaces)) == 0
    assert joint_prob(db, e1, h) == 1
    assert joint_prob(db, e1, parse_history("(o,0) a", spaces)) == 0


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_joint_prob_factorizes_on_random_pairs(spaces, seed):
    logger.info(f"Testing factorization for seed {seed}")
    agent = RandomTableAgent(spaces, seed, 6)
    env = RandomTableEnv(spaces, 3, seed, 6)
    totals = {}
    for h in iter_histories(spaces, 5):
        joint = joint_prob(agent, env, h)
        assert joint == agent.prob(h) * env.prob(h)
        totals[len(h)] = totals.get(len(h), 0) + joint
    assert all(total == 1 for total in totals.values())


def test_table_env_tail_bound(e1):
    logger.info("Testing table environment tail bound")
    assert e1.horizon == 2
    assert e1.tail_bound(0) == 1
    assert e1.tail_bound(1) == 1
    assert e1.tail_bound(2) == 0
    assert e1.tail_bound(5) == 0


def test_terminating_env_tail_is_geometric(halting_spaces, terminating):
    logger.info("Testing terminating environment tail")
    deterministic = RandomTableAgent(halting_spaces, 0, 1)
    assert terminating.tail_bound(3) == Fraction(1, 4)
    assert terminating.horizon is None
    near, far = value_at(deterministic, terminating, 3), value_at(deterministic, terminating, 12)
    assert abs(far - near) <= terminating.tail_bound(3)


def test_terminating_env_values(halting_spaces, terminating):
    logger.info("Testing terminating environment values")
    always_a = ConstantAgent(halting_spaces, "a")
    # rewards 1, 1/2, 1/4 on the live branch
    assert value_at(always_a, terminating, 3) == Fraction(7, 4)
    assert perceive(terminating, parse_history("(h,0) a", halting_spaces))[Percept("h", Fraction(0))] == 1


def test_terminating_env_validation(halting_spaces):
    logger.info("Testing terminating environment validation")
    with pytest.raises(BadParams):
        builtin_env("terminating", {"gamma": "1", "halt": "h", "rules": {"": {"(o,0)": "1"}}}, halting_spaces)
    with pytest.raises(BadParams):
        builtin_env("terminating", {"gamma": "1/2", "halt": "h", "rules": {"a": {"(o,0)": "1"}}}, halting_spaces)
    with pytest.raises(BadParams):
        builtin_env("terminating", {"gamma": "1/2", "halt": "h", "rules": {"": {"(h,1)": "1"}}}, halting_spaces)


def test_silent_env_needs_zero_reward():
    logger.info("Testing silent environment")
    no_zero = Spaces(("a",), ("o",), (Fraction(-1), Fraction(1)))
    with pytest.raises(BadParams):
        SilentEnv(no_zero)
    spaces = Spaces(("a",), ("o", "q"), (Fraction(0),))
    with pytest.raises(SymbolOutOfSpace):
        SilentEnv(spaces, "z")
    assert SilentEnv(spaces, "q").descriptor == {"kind": "silent", "observation": "q"}


def test_value_extrema_and_strong_well_behavedness(e1):
    logger.info("Testing expectimax value extrema")
    assert value_extrema(e1, 1) == (0, 0)
    assert value_extrema(e1, 2) == (-1, 1)
    assert certify_strongly_well_behaved(e1, 2)


def test_strong_well_behavedness_witness(spaces):
    logger.info("Testing a table environment leaving [-1,1]")
    generous = builtin_env(
        "table",
        {"horizon": 2, "entries": {"": {"(o,1)": "1"}, "(o,1) a": {"(o,1)": "1"}, "(o,1) b": {"(o,0)": "1"}}},
        spaces,
    )
    assert strong_well_behavedness_witness(generous, 2) == (2, 1, 2)
    with pytest.raises(NoFiniteHorizon):
        strong_well_behavedness_witness(generous, 1)


def test_sparse_random_env_is_strongly_well_behaved(spaces):
    logger.info("Testing sparse random environments")
    for seed in range(5):
        env = RandomTableEnv(spaces, 3, seed, 12, sparse=True)
        assert certify_strongly_well_behaved(env, 3)


def test_silent_environments_are_strongly_well_behaved(spaces, e1, db):
    logger.info("Testing certification of the silent environment and a silent tail")
    silent = SilentEnv(spaces)
    assert certify_strongly_well_behaved(silent, 0)
    assert certify_strongly_well_behaved(silent, 3)
    assert value_extrema(silent, 3) == (0, 0)
    half_silent = mix_envs(EnvWeightVector((Fraction(1, 2),), Fraction(1, 2)), [e1])
    assert half_silent.tail_bound(2) == 0
    assert certify_strongly_well_behaved(half_silent, 2)
    assert value_extrema(half_silent, 2) == (Fraction(-1, 2), Fraction(1, 2))
    assert value_at(db, half_silent, 2) == Fraction(1, 2)


def test_joint_prob_vector(spaces, e1, da, db):
    logger.info("Testing componentwise joint probabilities")
    h = parse_history("(o,0) b (o,1)", spaces)
    assert joint_prob_vector([da, db], e1, h) == (0, 1)
    assert joint_prob_vector([db], e1, spaces.empty) == (1,)


def test_deterministic_policies_attain_the_extrema(e1):
    logger.info("Testing vertex enumeration against expectimax")
    policies = list(deterministic_policies(e1, 2))
    assert len(policies) == 4
    values = [value_at(policy, e1, 2) for policy in policies]
    assert (min(values), max(values)) == value_extrema(e1, 2)


def test_builtin_env_errors(spaces):
    logger.info("Testing builtin environment construction")
    with pytest.raises(UnknownFamily):
        builtin_env("casino", {}, spaces)
    with pytest.raises(BadParams):
        builtin_env("table", {"horizon": 1, "entries": {"(o,0) a": {"(o,1)": "1"}}}, spaces)
    with pytest.raises(BadParams):
        builtin_env("random", {"seed": 1}, spaces)
