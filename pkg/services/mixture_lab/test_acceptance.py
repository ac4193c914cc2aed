# test_acceptance.py

import logging
from random import Random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from app.core.errors import SiteDeterministic
from app.models.agents import agent_prob
from app.models.environments import RandomTableEnv, env_prob, joint_prob
from app.models.primitives import ZERO, Dist, Fraction, Parity, dot, iter_histories, parse_history
from app.services.analysis import (
    check_duality_laws,
    check_env_duality,
    check_mixture_laws,
    check_patch_lemmas,
    check_symmetry,
    check_universal,
    extrema_probe,
    janus_probe,
)
from app.services.envmix import env_dual, paired_measure
from app.services.generators import (
    desk_spaces,
    random_agent,
    random_battery,
    random_desk,
    random_env,
    random_weights,
)
from app.services.mixtures import PatchSpec, mix_agents, symmetrize
from app.services.valuation import WeightedMeasure, upsilon, value_at

logger = logging.getLogger(__name__)

pytestmark = pytest.mark.slow

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def suite(examples: int):
    return settings(max_examples=examples, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def brute_force_value(agent, env, t):
    """V_t as a sum over every history of length 2t-1 weighted by its joint probability."""
    if t == 0:
        return ZERO
    total = ZERO
    for h in iter_histories(env.spaces, 2 * t - 1):
        if len(h) == 2 * t - 1:
            total += joint_prob(agent, env, h) * h.reward_sum()
    return total


def random_measure(rng: Random, spaces, horizon: int, sparse: bool = False) -> WeightedMeasure:
    envs = [random_env(spaces, rng, horizon, sparse=sparse) for _ in range(rng.randint(1, 3))]
    weights = random_weights(rng, len(envs))
    return WeightedMeasure(list(zip(envs, weights)))


@suite(100)
@given(seed=seeds)
def test_random_desks_satisfy_the_mixture_laws(seed):
    logger.info(f"Testing the mixture laws on desk {seed} at T=5")
    desk = random_desk(seed, depth=5)
    report = check_mixture_laws(desk.weights, desk.agents, desk.env, desk.depth, name=f"desk-{seed}")
    assert report.passed, report.counterexample


@suite(100)
@given(seed=seeds, t=st.integers(min_value=0, max_value=3))
def test_value_matches_brute_force(seed, t):
    logger.info("Testing V_t against brute-force enumeration")
    desk = random_desk(seed, depth=3)
    mixture = mix_agents(desk.weights, desk.agents)
    assert value_at(mixture, desk.env, t) == brute_force_value(mixture, desk.env, t)
    expected = sum((w * brute_force_value(a, desk.env, t) for w, a in zip(desk.weights, desk.agents)), ZERO)
    assert value_at(mixture, desk.env, t) == expected


@suite(100)
@given(seed=seeds)
def test_upsilon_is_linear_in_the_mixture(seed):
    logger.info("Testing Upsilon(w.pi) = w . Upsilon(pi) on a finite-horizon measure")
    rng = Random(f"linear|{seed}")
    spaces = desk_spaces(rng.randint(1, 2))
    measure = random_measure(rng, spaces, 2)
    n = rng.randint(2, 3)
    weights = random_weights(rng, n)
    agents = [random_agent(spaces, rng) for _ in range(n)]
    mixed = upsilon(measure, mix_agents(weights, agents), 2)
    assert mixed.exact
    assert mixed.value_at_t == dot(weights, [upsilon(measure, agent, 2).value_at_t for agent in agents])


@suite(50)
@given(seed=seeds)
def test_joint_probability_factorizes(seed):
    logger.info("Testing P^pi_mu = P^pi P_mu and sum_X_t P^pi_mu = 1 up to depth 5")
    rng = Random(f"factor|{seed}")
    spaces = desk_spaces(1)
    agent, env = random_agent(spaces, rng), random_env(spaces, rng, 5)
    totals = [ZERO] * 11
    for h in iter_histories(spaces, 10):
        joint = joint_prob(agent, env, h)
        assert joint == agent_prob(agent, h) * env_prob(env, h)
        totals[len(h)] += joint
    assert totals == [1] * 11


@suite(3)
@given(seed=seeds)
def test_universal_environment_on_random_measures(seed):
    logger.info("Testing the universal environment against Upsilon for 50 agents")
    rng = Random(f"measure|{seed}")
    spaces = desk_spaces(rng.randint(1, 2))
    measure = random_measure(rng, spaces, 2, sparse=True)
    assert measure.strongly_well_behaved
    report = check_universal(measure, random_battery(spaces, 50, seed), 2)
    assert report.passed, report.counterexample


@suite(5)
@given(seed=seeds)
def test_duality_suite_on_a_battery(seed):
    logger.info("Testing the duality laws over a 20-agent battery at T=3")
    for agent in random_battery(desk_spaces(1), 20, seed):
        assert check_duality_laws(agent, 3).passed
        assert janus_probe(agent, 3).passed


@suite(20)
@given(seed=seeds)
def test_patch_lemmas_on_random_triples(seed):
    logger.info("Testing the patch lemmas on a random triple")
    rng = Random(f"patch|{seed}")
    spaces = desk_spaces(1)
    agent = random_agent(spaces, rng)
    site = rng.choice([h for h in iter_histories(spaces, 3) if h.parity is Parity.ENDS_IN_PERCEPT])
    replacement = random_weights(rng, len(spaces.actions))
    patch = PatchSpec(site, Dist(spaces.actions, replacement.weights))
    assert check_patch_lemmas(agent, patch, 4).passed


@suite(20)
@given(seed=seeds)
def test_extrema_construction_on_random_agents(seed):
    logger.info("Testing the extrema construction on a random agent")
    rng = Random(f"extrema|{seed}")
    spaces = desk_spaces(1)
    measure = paired_measure([random_env(spaces, rng, 2, sparse=True)])
    agent = random_agent(spaces, rng)
    site = parse_history("(o,0)", spaces)
    try:
        report = extrema_probe(measure, agent, site, Fraction(1, 4), 2)
    except SiteDeterministic:
        assert agent.act(site).is_point_mass()
        return
    assert report.passed, report.counterexample
    assert report.values["distance_plus"] == report.values["epsilon_prime"]


@suite(20)
@given(seed=seeds)
def test_weak_and_strong_symmetry_agree_on_lopsided_measures(seed):
    logger.info("Testing symmetry verdicts and witnesses on a one-sided measure")
    rng = Random(f"lopsided|{seed}")
    spaces = desk_spaces(1)
    env = RandomTableEnv(spaces, 2, rng.randrange(2**31), 12)
    battery = random_battery(spaces, 4, seed)
    report = check_symmetry(WeightedMeasure([(env, Fraction(1))]), battery, 2)
    assert report.verdict in ("pass", "fail")
    if report.verdict == "pass":
        assert report.witnesses == {}
        return
    weak, strong = report.witnesses["weak"], report.witnesses["strong"]
    assert weak.agent is not None and weak.left != "0"
    assert strong.agent is not None and strong.left != strong.right
    assert report.values["weak_upsilon"] == weak.left
    assert report.values["strong_dual_upsilon"] == strong.left


@suite(20)
@given(seed=seeds)
def test_paired_measures_are_symmetric(seed):
    logger.info("Testing symmetry on an env_dual-paired measure")
    rng = Random(f"paired|{seed}")
    spaces = desk_spaces(1)
    envs = [random_env(spaces, rng, 2) for _ in range(2)]
    battery = random_battery(spaces, 3, seed)
    measure = paired_measure(envs)
    assert check_symmetry(measure, battery, 2).passed
    for agent in battery:
        assert upsilon(measure, symmetrize(agent), 2).value_at_t == 0
    assert check_env_duality(battery, envs[0], env_dual(envs[0]), 2).passed
