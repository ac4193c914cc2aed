# services/mixture_lab/app/services/analysis.py
"""
Executable checks over agents, environments and measures. Every check
returns a CheckReport; a failing report carries the first witness found,
with the two unequal rationals written exactly.

Checks quantified over all histories are run up to a depth T. Checks
quantified over all agents (separability, closure, extrema) can only
refute or construct witnesses, and their notes say "consistent with"
rather than claim a proof.
"""
from dataclasses import dataclass
from random import Random
from typing import Dict, List, Optional, Sequence, Tuple

from app.core.errors import BadParams, NotFiniteHorizon, SiteDeterministic, SiteUnreachable
from app.core.logging import setup_logger
from app.models.agents import Agent
from app.models.environments import (
    Environment,
    strong_well_behavedness_witness,
)
from app.models.primitives import (
    ONE,
    ZERO,
    Dist,
    Fraction,
    History,
    NodeBudget,
    Parity,
    dot,
    dual_history,
    format_history,
    format_rational,
    iter_histories,
    require_depth,
)
from app.schemas.reports import CheckReport, Counterexample
from app.services.envmix import universal_env
from app.services.generators import random_weights
from app.services.mixtures import (
    HALF,
    PatchSpec,
    PatchedAgent,
    WeightVector,
    distance_up_to,
    equivalence_witness,
    is_deterministic_in_possible_histories,
    mix_dists,
)
from app.services.mutations import CATALOG, Mutation
from app.services.valuation import WeightedMeasure, upsilon, value_at

logger = setup_logger("analysis")

CORRECT = CATALOG["none"]


@dataclass(frozen=True)
class ValueRange:
    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError("lo must not exceed hi")

    def contains(self, value: Fraction) -> bool:
        return self.lo <= value <= self.hi

    def disjoint_from(self, other: "ValueRange") -> bool:
        return self.hi < other.lo or other.hi < self.lo

    def __str__(self) -> str:
        return f"[{format_rational(self.lo)}, {format_rational(self.hi)}]"


def convex_hull_range(values: Sequence[Fraction]) -> ValueRange:
    """Smallest interval holding every value; mixtures of the agents stay inside it."""
    return ValueRange(min(values), max(values))


def _mismatch(detail: str, h: Optional[History], left: Fraction, right: Fraction, agent=None) -> Counterexample:
    return Counterexample(
        detail=detail,
        history=None if h is None else format_history(h),
        agent=agent,
        left=format_rational(left),
        right=format_rational(right),
    )


def _passed(name: str, op: str, depth: Optional[int], values=None, notes=None) -> CheckReport:
    return CheckReport.build(name, op, "pass", depth, values, notes=notes)


def _failed(
    name: str, op: str, depth: Optional[int], witness: Counterexample, values=None, notes=None, witnesses=None
) -> CheckReport:
    logger.warning(f"{name}: {witness.detail} at '{witness.history}'")
    return CheckReport.build(name, op, "fail", depth, values, witness, notes, witnesses)


def _mixture_formula(weights: WeightVector, agents: Sequence[Agent], probs: Sequence[Fraction], h: History) -> Dist:
    """The defining action distribution of w.pi at h, computed from the components alone."""
    denominator = dot(weights, probs)
    spaces = agents[0].spaces
    if denominator == 0:
        return spaces.uniform_actions
    acts = [agent.act(h) for agent in agents]
    return Dist.unchecked(
        spaces.actions,
        tuple(
            sum((w * p * act.masses[i] for w, p, act in zip(weights, probs, acts)), ZERO) / denominator
            for i in range(len(spaces.actions))
        ),
    )


def _probability_mismatch(
    weights: WeightVector,
    mix_p: Fraction,
    probs: Sequence[Fraction],
    env_p: Fraction,
    mix_joint: Fraction,
    joints: Sequence[Fraction],
) -> Optional[Tuple[str, Fraction, Fraction]]:
    mixed = dot(weights, probs)
    if mix_p != mixed:
        return "P^{w.pi}(h) != w . P^pi(h)", mix_p, mixed
    mixed_joint = dot(weights, joints)
    if mix_joint != mixed_joint:
        return "P^{w.pi}_mu(h) != w . P^pi_mu(h)", mix_joint, mixed_joint
    if mix_joint != mix_p * env_p:
        return "P^{w.pi}_mu(h) != P^{w.pi}(h) P_mu(h)", mix_joint, mix_p * env_p
    return None


def check_mixture_laws(
    weights: WeightVector,
    agents: Sequence[Agent],
    env: Environment,
    depth: int,
    name: str = "mixture_laws",
    mutation: Mutation = CORRECT,
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """
    P^{w.pi}(h) = w . P^pi(h) and P^{w.pi}_mu(h) = w . P^pi_mu(h) on every
    history of length <= 2T, the mixture acting by its defining formula
    (uniform where w . P^pi(h) = 0), and V^{w.pi}_{mu,t} = w . V^pi_{mu,t}
    for every t <= T.

    One depth-first pass carries P^{w.pi}, P^pi, P_mu and the joint
    probabilities down the tree, so each node costs one multiplication per
    carried quantity. Histories of full length are checked from their parent
    without being materialized. Expected rewards are summed per step on the way.
    """
    op = "mixture_laws"
    require_depth(depth)
    budget = budget or NodeBudget()
    mixture = mutation.mix_agents(weights, agents)
    spaces = env.spaces
    actions, percepts = spaces.actions, spaces.percepts
    n = len(agents)
    # expected reward of each step: the mixture's first, then each component's
    step_rewards = [[ZERO] * (n + 1) for _ in range(depth)]

    def fail(detail: str, h: History, left: Fraction, right: Fraction) -> CheckReport:
        return _failed(name, op, depth, _mismatch(detail, h, left, right))

    # (h, P^{w.pi}(h), P^pi(h), P_mu(h), P^{w.pi}_mu(h), P^pi_mu(h), parent live)
    stack: List[Tuple[History, Fraction, Tuple[Fraction, ...], Fraction, Fraction, Tuple[Fraction, ...], bool]] = [
        (spaces.empty, ONE, (ONE,) * n, ONE, ONE, (ONE,) * n, True)
    ]
    while stack:
        h, mix_p, probs, env_p, mix_joint, joints, parent_live = stack.pop()
        budget.tick()
        mismatch = _probability_mismatch(weights, mix_p, probs, env_p, mix_joint, joints)
        if mismatch:
            return fail(mismatch[0], h, *mismatch[1:])
        live = any(p != 0 for p in probs)
        expand = len(h) < 2 * depth and (live or parent_live)

        if h.parity is Parity.ENDS_IN_PERCEPT:
            reward = h.last.reward
            if reward and (mix_joint or any(joints)):
                row = step_rewards[h.completed_steps]
                row[0] += mix_joint * reward
                for i, joint in enumerate(joints, 1):
                    row[i] += joint * reward
            acted, formula = mixture.act(h), _mixture_formula(weights, agents, probs, h)
            if acted != formula:
                y = next(y for y, a, b in zip(acted.carrier, acted.masses, formula.masses) if a != b)
                return fail(f"w.pi({y}|h) differs from its defining formula", h, acted[y], formula[y])
            if expand:
                acts = [agent.act(h).masses for agent in agents]
                last = len(h) + 1 == 2 * depth
                for i in reversed(range(len(actions))):
                    mass = acted.masses[i]
                    child = (
                        mix_p * mass,
                        tuple(p * a[i] for p, a in zip(probs, acts)),
                        env_p,
                        mix_joint * mass,
                        tuple(j * a[i] for j, a in zip(joints, acts)),
                    )
                    if not last:
                        stack.append((h.extend(actions[i]), *child, live))
                        continue
                    budget.tick()
                    mismatch = _probability_mismatch(weights, *child)
                    if mismatch:
                        return fail(mismatch[0], h.extend(actions[i]), *mismatch[1:])
        elif expand:
            response = env.perceive(h).masses
            for i in reversed(range(len(percepts))):
                mass = response[i]
                stack.append((
                    h.extend(percepts[i]),
                    mix_p,
                    probs,
                    env_p * mass,
                    mix_joint * mass,
                    tuple(j * mass for j in joints),
                    live,
                ))

    values: Dict[str, Fraction] = {}
    totals = [ZERO] * (n + 1)
    for t, row in enumerate(step_rewards, 1):
        totals = [total + r for total, r in zip(totals, row)]
        left, right = totals[0], dot(weights, totals[1:])
        if left != right:
            return _failed(name, op, depth, _mismatch(f"V^{{w.pi}}_{{mu,{t}}} != w . V^pi_{{mu,{t}}}", None, left, right))
        values = {"value": left}
    logger.debug(f"{name}: mixture laws hold up to depth {depth}")
    return _passed(name, op, depth, values, [f"checked up to depth {depth}"])


def check_duality_laws(
    agent: Agent,
    depth: int,
    name: str = "duality",
    mutation: Mutation = CORRECT,
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """
    Involution of the dual history, P^pi(dual h) = P^{dual pi}(h), the
    symmetrization being self-dual, and pi == (1/2,1/2).(pi,pi), up to depth.
    """
    op = "duality"
    budget = budget or NodeBudget()
    dual = mutation.dual_agent(agent)
    for h in iter_histories(agent.spaces, 2 * depth, budget):
        if dual_history(dual_history(h)) != h:
            return _failed(name, op, depth, Counterexample(detail="dual of dual differs from h", history=format_history(h)))
        left, right = agent.prob(dual_history(h)), dual.prob(h)
        if left != right:
            return _failed(name, op, depth, _mismatch("P^pi(dual h) != P^{dual pi}(h)", h, left, right))

    symmetric = mutation.symmetrize(agent)
    witness = equivalence_witness(symmetric, mutation.dual_agent(symmetric), depth, budget)
    if witness is not None:
        return _failed(name, op, depth, _mismatch(f"symmetrization is not self-dual: {witness.detail}", witness.history, witness.left, witness.right))
    doubled = mutation.mix_agents(mutation.weights((HALF, HALF)), (agent, agent))
    witness = equivalence_witness(agent, doubled, depth, budget)
    if witness is not None:
        return _failed(name, op, depth, _mismatch(f"pi is not equivalent to (1/2,1/2).(pi,pi): {witness.detail}", witness.history, witness.left, witness.right))
    return _passed(name, op, depth, notes=[f"checked up to depth {depth}"])


def check_patch_lemmas(
    agent: Agent,
    patch: PatchSpec,
    depth: int,
    name: str = "patch_lemmas",
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """
    For pi' = pi^{h0 -> m}: histories not extending h0 y keep P^pi;
    P^{pi'}(h0 y) = P^pi(h0) m(y); and histories extending h0 y0 get
    P^pi(h) m(y0) / pi(y0|h0) when pi(y0|h0) != 0.
    """
    op = "patch_lemmas"
    budget = budget or NodeBudget()
    patched = PatchedAgent(agent, patch)
    site, m = patch.site, patch.replacement
    base_site = agent.act(site)
    for h in iter_histories(agent.spaces, 2 * depth, budget):
        left = patched.prob(h)
        if len(h) > len(site) and site.is_prefix_of(h):
            y0 = h.items[len(site)]
            if len(h) == len(site) + 1:
                right, detail = agent.prob(site) * m[y0], "P^{pi'}(h0 y) != P^pi(h0) m(y)"
            elif base_site[y0] != 0:
                right, detail = agent.prob(h) * m[y0] / base_site[y0], "P^{pi'}(h) != P^pi(h) m(y0) / pi(y0|h0)"
            else:
                continue
        else:
            right, detail = agent.prob(h), "P^{pi'}(h) != P^pi(h) away from h0"
        if left != right:
            return _failed(name, op, depth, _mismatch(detail, h, left, right))
    return _passed(name, op, depth, notes=[f"checked up to depth {depth}"])


def _upsilon_exact(measure: WeightedMeasure, agent: Agent, t: int, budget: NodeBudget) -> Fraction:
    return upsilon(measure, agent, t, budget).value_at_t


def check_symmetry(
    measure: WeightedMeasure,
    battery: Sequence[Agent],
    depth: int,
    name: str = "symmetry",
    mutation: Mutation = CORRECT,
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """
    Weak symmetry (Upsilon = 0 on self-dual agents) and strong symmetry
    (Upsilon(dual pi) = -Upsilon(pi)), both evaluated exactly at t = T.
    The two verdicts must agree; disagreement is reported as an error.
    """
    op = "symmetry"
    if not battery:
        raise BadParams("The battery must be nonempty")
    measure.spaces.require_negation_closed()
    measure.require_finite_horizon(depth)
    budget = budget or NodeBudget()

    self_dual = [
        agent for agent in battery
        if equivalence_witness(agent, mutation.dual_agent(agent), depth, budget) is None
    ]
    candidates = self_dual + [mutation.symmetrize(agent) for agent in battery]
    values: Dict[str, Fraction] = {}
    witnesses: Dict[str, Counterexample] = {}
    for agent in candidates:
        value = _upsilon_exact(measure, agent, depth, budget)
        if value != 0:
            witnesses["weak"] = _mismatch("self-dual agent with nonzero Upsilon", None, value, ZERO, agent.descriptor)
            values["weak_upsilon"] = value
            break

    for agent in battery:
        value = _upsilon_exact(measure, agent, depth, budget)
        dual_value = _upsilon_exact(measure, mutation.dual_agent(agent), depth, budget)
        if dual_value != -value:
            witnesses["strong"] = _mismatch("Upsilon(dual pi) != -Upsilon(pi)", None, dual_value, -value, agent.descriptor)
            values["strong_upsilon"] = value
            values["strong_dual_upsilon"] = dual_value
            break

    weak, strong = "weak" not in witnesses, "strong" not in witnesses
    notes = [
        f"weak symmetry: {'holds' if weak else 'fails'} on {len(candidates)} self-dual agents",
        f"strong symmetry: {'holds' if strong else 'fails'} on {len(battery)} agents",
        f"checked up to depth {depth}",
    ]
    if weak and strong:
        return _passed(name, op, depth, notes=notes)
    if weak != strong:
        logger.error(f"{name}: weak and strong symmetry verdicts diverge")
        return CheckReport.build(
            name, op, "error", depth, values, witnesses.get("weak") or witnesses.get("strong"),
            notes + ["weak and strong verdicts diverge"], witnesses,
        )
    return _failed(name, op, depth, witnesses["strong"], values, notes, witnesses)


def _require_exact_at(env: Environment, depth: int) -> None:
    tail = env.tail_bound(depth)
    if tail is None or tail != 0:
        raise NotFiniteHorizon(f"{env!r} is not finite-horizon within depth {depth}")


def separability_probe(
    env: Environment,
    inside: Sequence[Agent],
    outside: Sequence[Agent],
    depth: int,
    name: str = "separability",
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """Refutation-only: disjoint value ranges are consistent with separability, meeting ranges refute it for env."""
    op = "separability"
    if not inside or not outside:
        raise BadParams("Both agent sets must be nonempty")
    _require_exact_at(env, depth)
    budget = budget or NodeBudget()
    inside_values = [value_at(agent, env, depth, budget) for agent in inside]
    outside_values = [value_at(agent, env, depth, budget) for agent in outside]
    i_range, o_range = convex_hull_range(inside_values), convex_hull_range(outside_values)
    values = {"inside_lo": i_range.lo, "inside_hi": i_range.hi, "outside_lo": o_range.lo, "outside_hi": o_range.hi}
    if i_range.disjoint_from(o_range):
        return _passed(name, op, depth, values, [f"inside {i_range} and outside {o_range} are disjoint: consistent with separability"])

    witness = None
    for agent, value in zip(inside, inside_values):
        if o_range.contains(value):
            witness = _mismatch(f"inside agent value lies in outside range {o_range}", None, value, o_range.lo, agent.descriptor)
            break
    if witness is None:
        agent, value = next((a, v) for a, v in zip(outside, outside_values) if i_range.contains(v))
        witness = _mismatch(f"outside agent value lies in inside range {i_range}", None, value, i_range.lo, agent.descriptor)
    return _failed(name, op, depth, witness, values, ["ranges meet: separability refuted for this environment"])


@dataclass(frozen=True)
class ValueThreshold:
    """Membership by value: V^pi_{mu,t} compared against a threshold."""
    env: Environment
    t: int
    op: str
    threshold: Fraction

    COMPARISONS = {
        ">=": lambda v, c: v >= c,
        ">": lambda v, c: v > c,
        "<=": lambda v, c: v <= c,
        "<": lambda v, c: v < c,
    }

    def __post_init__(self) -> None:
        if self.op not in self.COMPARISONS:
            raise BadParams(f"Unknown comparison {self.op!r}")

    def evaluate(self, agent: Agent, budget: Optional[NodeBudget] = None) -> Tuple[bool, Fraction]:
        value = value_at(agent, self.env, self.t, budget)
        return self.COMPARISONS[self.op](value, self.threshold), value

    def __str__(self) -> str:
        return f"V_{self.t} {self.op} {format_rational(self.threshold)}"


def closure_probe(
    members: Sequence[Agent],
    membership: ValueThreshold,
    trials: int,
    seed: int,
    name: str = "closure",
    mutation: Mutation = CORRECT,
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """
    Mixes random sub-multisets of members with random weights and reports
    the first mixture failing membership. The first trial is always the
    equal-weight mixture of all members.
    """
    op = "closure"
    if not members:
        raise BadParams("The member set must be nonempty")
    budget = budget or NodeBudget()
    notes = []
    outsiders = sum(not membership.evaluate(agent, budget)[0] for agent in members)
    if outsiders:
        notes.append(f"{outsiders} of {len(members)} members themselves fail {membership}")

    rng = Random(f"closure|{seed}")
    for trial in range(trials):
        if trial == 0:
            chosen = list(members)
            weights = mutation.weights([Fraction(1, len(chosen))] * len(chosen))
        else:
            k = rng.randint(1, min(3, 2 * len(members)))
            chosen = [rng.choice(members) for _ in range(k)]
            weights = mutation.weights(random_weights(rng, k).weights)
        mixture = mutation.mix_agents(weights, chosen)
        holds, value = membership.evaluate(mixture, budget)
        if not holds:
            detail = f"mixture with weights ({', '.join(format_rational(w) for w in weights)}) fails {membership}"
            return _failed(
                name, op, membership.t, _mismatch(detail, None, value, membership.threshold, mixture.descriptor),
                {"value": value}, notes,
            )
    return _passed(name, op, membership.t, notes=notes + [f"{trials} random mixtures stay inside {membership}: consistent with closure"])


def dominates(values: Sequence[Fraction], reference: Fraction) -> bool:
    """reference > values in the Upsilon order: >= every value and > some value."""
    return all(reference >= v for v in values) and any(reference > v for v in values)


def dominated(values: Sequence[Fraction], reference: Fraction) -> bool:
    return all(reference <= v for v in values) and any(reference < v for v in values)


def extrema_probe(
    measure: WeightedMeasure,
    agent: Agent,
    site: History,
    eps: Fraction,
    depth: int,
    name: str = "extrema",
    mutation: Mutation = CORRECT,
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """
    Shift mass eps' between two interior actions at the site in both
    directions; the two patched neighbours average back to pi, so
    Upsilon(pi) is their mean and neither neighbour is strictly worse (or
    better) than pi on both sides. pi is then neither a strict local maximum
    nor a strict local minimum at radius eps'.
    """
    op = "extrema"
    if eps <= 0:
        raise BadParams("eps must be positive")
    if site.parity is not Parity.ENDS_IN_PERCEPT:
        raise BadParams(f"Site {site} does not end in a percept")
    if len(site) > 2 * depth - 1:
        raise BadParams(f"Site {site} lies beyond depth {depth}")
    measure.require_finite_horizon(depth)
    budget = budget or NodeBudget()

    if agent.prob(site) == 0:
        raise SiteUnreachable(f"P^pi({site}) = 0")
    current = agent.act(site)
    interior = [(y, p) for y, p in current.items() if 0 < p < 1]
    if len(interior) < 2:
        raise SiteDeterministic(f"pi is deterministic at {site}")
    (y0, p0), (y1, p1) = interior[:2]
    eps_prime = min(eps, p0, 1 - p0, p1, 1 - p1)

    def shifted(sign: int) -> Dist:
        masses = list(current.masses)
        masses[current.carrier.index(y0)] += sign * eps_prime
        masses[current.carrier.index(y1)] -= sign * eps_prime
        return Dist(current.carrier, tuple(masses))

    m_plus, m_minus = shifted(1), shifted(-1)
    halves = WeightVector((HALF, HALF))
    if mix_dists(halves, (m_plus, m_minus)) != current:
        raise BadParams("Shifted distributions do not average back to the site distribution")
    plus = PatchedAgent(agent, PatchSpec(site, m_plus))
    minus = PatchedAgent(agent, PatchSpec(site, m_minus))

    value = _upsilon_exact(measure, agent, depth, budget)
    value_plus = _upsilon_exact(measure, plus, depth, budget)
    value_minus = _upsilon_exact(measure, minus, depth, budget)
    value_mixed = _upsilon_exact(measure, mutation.mix_agents(mutation.weights((HALF, HALF)), (plus, minus)), depth, budget)
    distances = (distance_up_to(agent, plus, depth, budget), distance_up_to(agent, minus, depth, budget))
    values = {
        "epsilon_prime": eps_prime,
        "upsilon": value,
        "upsilon_plus": value_plus,
        "upsilon_minus": value_minus,
        "upsilon_mixture": value_mixed,
        "distance_plus": distances[0],
        "distance_minus": distances[1],
    }

    if value_mixed != value:
        return _failed(name, op, depth, _mismatch("Upsilon(pi) != Upsilon((1/2,1/2).(pi+, pi-))", site, value, value_mixed), values)
    average = HALF * value_plus + HALF * value_minus
    if average != value:
        return _failed(name, op, depth, _mismatch("Upsilon(pi) != (Upsilon(pi+) + Upsilon(pi-)) / 2", site, value, average), values)
    for distance in distances:
        if distance != eps_prime:
            return _failed(name, op, depth, _mismatch("patched neighbour is not at distance eps'", site, distance, eps_prime), values)
    neighbours = (value_plus, value_minus)
    if dominates(neighbours, value) or dominated(neighbours, value):
        return _failed(name, op, depth, _mismatch("pi strictly dominates or is dominated by its neighbours", site, value, average), values)

    upper = "m+" if value_plus >= value else "m-"
    lower = "m+" if value_plus <= value else "m-"
    notes = [
        f"neighbour {upper} has Upsilon >= Upsilon(pi): not a strict local maximum at radius {format_rational(eps_prime)}",
        f"neighbour {lower} has Upsilon <= Upsilon(pi): not a strict local minimum at radius {format_rational(eps_prime)}",
    ]
    if is_deterministic_in_possible_histories(agent, depth, budget):
        notes.append("pi is deterministic in all possible histories up to depth")
    return _passed(name, op, depth, values, notes)


def janus_probe(
    agent: Agent,
    depth: int,
    name: str = "janus",
    mutation: Mutation = CORRECT,
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """
    The symmetrization of pi is self-dual, and a self-dual pi is
    equivalent to its own symmetrization, up to depth.
    """
    op = "janus"
    budget = budget or NodeBudget()
    symmetric = mutation.symmetrize(agent)
    witness = equivalence_witness(symmetric, mutation.dual_agent(symmetric), depth, budget)
    if witness is not None:
        return _failed(name, op, depth, _mismatch(f"symmetrization is not self-dual: {witness.detail}", witness.history, witness.left, witness.right))
    self_dual = equivalence_witness(agent, mutation.dual_agent(agent), depth, budget) is None
    if self_dual:
        witness = equivalence_witness(agent, symmetric, depth, budget)
        if witness is not None:
            return _failed(name, op, depth, _mismatch(f"self-dual pi differs from its symmetrization: {witness.detail}", witness.history, witness.left, witness.right))
    return _passed(name, op, depth, notes=[f"pi is {'self-dual' if self_dual else 'not self-dual'} up to depth {depth}"])


def equivalence_relation_probe(
    battery: Sequence[Agent],
    depth: int,
    name: str = "equivalence_relation",
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """Reflexivity, symmetry and transitivity of == on a finite battery."""
    op = "equivalence_relation"
    budget = budget or NodeBudget()
    n = len(battery)
    related = [[equivalence_witness(p, q, depth, budget) is None for q in battery] for p in battery]
    for i in range(n):
        if not related[i][i]:
            return _failed(name, op, depth, Counterexample(detail=f"agent {i} is not equivalent to itself", agent=battery[i].descriptor))
        for j in range(n):
            if related[i][j] != related[j][i]:
                return _failed(name, op, depth, Counterexample(detail=f"agents {i} and {j} are related in one direction only"))
            for k in range(n):
                if related[i][j] and related[j][k] and not related[i][k]:
                    return _failed(name, op, depth, Counterexample(detail=f"agents {i}, {j}, {k} break transitivity"))
    classes = len({tuple(row) for row in related})
    return _passed(name, op, depth, notes=[f"{classes} equivalence classes among {n} agents up to depth {depth}"])


def check_tail_bound(
    agents: Sequence[Agent],
    env: Environment,
    depth: int,
    big_t: int,
    name: str = "tail_bound",
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """|V_{big_t} - V_t| <= b(t) for every listed agent and every t <= depth < big_t."""
    op = "tail_bound"
    if big_t <= depth:
        raise BadParams("big_t must exceed depth")
    budget = budget or NodeBudget()
    for agent in agents:
        far = value_at(agent, env, big_t, budget)
        for t in range(depth + 1):
            bound = env.tail_bound(t)
            if bound is None:
                return CheckReport.build(name, op, "inconclusive", depth, notes=[f"{env!r} advertises no tail bound"])
            gap = abs(far - value_at(agent, env, t, budget))
            if gap > bound:
                return _failed(name, op, depth, _mismatch(f"|V_{big_t} - V_{t}| exceeds b({t})", None, gap, bound, agent.descriptor))
    return _passed(name, op, depth, notes=[f"compared against V_{big_t}"])


def check_env_duality(
    agents: Sequence[Agent],
    env: Environment,
    dual_env: Environment,
    depth: int,
    name: str = "env_duality",
    mutation: Mutation = CORRECT,
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """V^{dual pi}_{dual mu, t} = V^pi_{mu,t} for every listed agent and t <= depth."""
    op = "env_duality"
    budget = budget or NodeBudget()
    for agent in agents:
        dual = mutation.dual_agent(agent)
        for t in range(1, depth + 1):
            left, right = value_at(dual, dual_env, t, budget), value_at(agent, env, t, budget)
            if left != right:
                return _failed(name, op, depth, _mismatch(f"V^{{dual pi}}_{{dual mu,{t}}} != V^pi_{{mu,{t}}}", None, left, right, agent.descriptor))
    return _passed(name, op, depth, notes=[f"checked {len(agents)} agents up to depth {depth}"])


def check_universal(
    measure: WeightedMeasure,
    agents: Sequence[Agent],
    depth: int,
    name: str = "universal",
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    """V^pi_{mu_Upsilon,t} = Upsilon(pi) at t for every listed agent."""
    op = "universal"
    budget = budget or NodeBudget()
    env = universal_env(measure)
    for agent in agents:
        left = value_at(agent, env, depth, budget)
        right = _upsilon_exact(measure, agent, depth, budget)
        if left != right:
            return _failed(name, op, depth, _mismatch("V^pi_{mu_Upsilon} != Upsilon(pi)", None, left, right, agent.descriptor))
    return _passed(name, op, depth, notes=[f"checked {len(agents)} agents"])


def check_strongly_well_behaved(
    env: Environment,
    horizon: int,
    name: str = "strongly_well_behaved",
    budget: Optional[NodeBudget] = None,
) -> CheckReport:
    op = "strongly_well_behaved"
    witness = strong_well_behavedness_witness(env, horizon, budget)
    if witness is None:
        return _passed(name, op, horizon, notes=["-1 <= V_t <= 1 for every agent, certified by expectimax"])
    t, lo, hi = witness
    outside = hi if hi > 1 else lo
    return _failed(
        name, op, horizon,
        Counterexample(detail=f"some deterministic agent leaves [-1,1] at t={t}", left=format_rational(outside), right="1" if outside > 1 else "-1"),
        {"min": lo, "max": hi},
    )


def compare(
    name: str, op: str, depth: Optional[int], left: Fraction, right: Fraction, detail: str,
    history: Optional[History] = None,
) -> CheckReport:
    """Generic exact-equality report for scenario checks with an expected value."""
    values = {"actual": left, "expected": right}
    if left == right:
        return _passed(name, op, depth, values)
    return _failed(name, op, depth, _mismatch(detail, history, left, right), values)

