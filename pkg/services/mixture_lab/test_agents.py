# test_agents.py

import logging

import pytest

from app.core.errors import BadParams, UnknownFamily, WrongParity
from app.models.agents import (
    ConstantAgent,
    LastRewardGreedyAgent,
    RandomTableAgent,
    TableAgent,
    agent_prob,
    agent_prob_vector,
    builtin_agent,
)
from app.models.primitives import Fraction, iter_histories, parse_history

logger = logging.getLogger(__name__)


def test_constant_agent_acts_deterministically(spaces, db):
    logger.info("Testing constant agent")
    h = parse_history("(o,0)", spaces)
    assert db.act(h)["b"] == 1
    assert agent_prob(db, parse_history("(o,0) b (o,1) b", spaces)) == 1
    assert agent_prob(db, parse_history("(o,0) a", spaces)) == 0


def test_agents_reject_histories_ending_in_actions(spaces, uniform_agent):
    logger.info("Testing agent parity check")
    with pytest.raises(WrongParity):
        uniform_agent.act(spaces.empty)
    with pytest.raises(WrongParity):
        uniform_agent.act(parse_history("(o,0) a", spaces))


def test_prob_ignores_percepts(spaces, uniform_agent):
    logger.info("Testing P^pi on percept-ending histories")
    assert agent_prob(uniform_agent, spaces.empty) == 1
    assert agent_prob(uniform_agent, parse_history("(o,1) a", spaces)) == Fraction(1, 2)
    assert agent_prob(uniform_agent, parse_history("(o,1) a (o,-1)", spaces)) == Fraction(1, 2)
    assert agent_prob(uniform_agent, parse_history("(o,1) a (o,-1) b", spaces)) == Fraction(1, 4)


def test_prob_sums_to_one_over_action_choices(spaces):
    logger.info("Testing that P^pi sums to 1 over each step's actions")
    agent = RandomTableAgent(spaces, seed=7, denominator=12)
    for h in iter_histories(spaces, 3):
        if len(h) % 2 == 1:
            total = sum(agent_prob(agent, h.extend(y)) for y in spaces.actions)
            assert total == agent_prob(agent, h)


def test_table_agent_uses_default_off_table(spaces):
    logger.info("Testing table agent defaults")
    agent = builtin_agent("table", {"entries": {"(o,0)": {"a": "9/10", "b": "1/10"}}}, spaces)
    assert isinstance(agent, TableAgent)
    assert agent.act(parse_history("(o,0)", spaces))["a"] == Fraction(9, 10)
    assert agent.act(parse_history("(o,1)", spaces))["a"] == Fraction(1, 2)


def test_greedy_agent_follows_last_reward(spaces):
    logger.info("Testing last-reward greedy agent")
    agent = builtin_agent("last-reward-greedy", {"threshold": "0", "hi": "b", "lo": "a"}, spaces)
    assert isinstance(agent, LastRewardGreedyAgent)
    assert agent.act(parse_history("(o,1)", spaces))["b"] == 1
    assert agent.act(parse_history("(o,-1)", spaces))["a"] == 1
    assert agent.descriptor == {"kind": "greedy", "threshold": "0", "hi": "b", "lo": "a"}


def test_random_agent_is_a_fixed_function_of_its_seed(spaces):
    logger.info("Testing random agent determinism")
    first = RandomTableAgent(spaces, seed=3, denominator=12)
    second = RandomTableAgent(spaces, seed=3, denominator=12)
    for h in iter_histories(spaces, 3):
        if len(h) % 2 == 1:
            dist = first.act(h)
            assert dist == second.act(h)
            assert all((mass * 12).denominator == 1 for mass in dist.masses)


def test_builtin_agent_aliases_and_errors(spaces):
    logger.info("Testing builtin agent construction")
    assert isinstance(builtin_agent("deterministic-constant", {"action": "a"}, spaces), ConstantAgent)
    with pytest.raises(UnknownFamily):
        builtin_agent("oracle", {}, spaces)
    with pytest.raises(BadParams):
        builtin_agent("constant", {}, spaces)
    with pytest.raises(BadParams):
        builtin_agent("constant", {"action": "z"}, spaces)
    with pytest.raises(BadParams):
        builtin_agent("table", {"entries": {"(o,0) a": {"a": "1"}}}, spaces)


def test_agent_prob_vector(spaces, da, db, uniform_agent):
    logger.info("Testing probability vectors")
    h = parse_history("(o,0) b", spaces)
    assert agent_prob_vector((da, db, uniform_agent), h) == (0, 1, Fraction(1, 2))
