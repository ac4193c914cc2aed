# services/mixture_lab/app/services/scenarios.py
"""
Scenario files: parsing with located diagnostics, building the declared
objects, and running checks in declaration order.
"""
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from app.core.config import settings
from app.core.decorators import handle_check_errors
from app.core.errors import (
    EXIT_FAILED,
    EXIT_OK,
    AlgebraError,
    ScenarioParseError,
    ScenarioValidationError,
    SchemaError,
    UnknownName,
)
from app.core.logging import setup_logger
from app.models.agents import Agent, builtin_agent
from app.models.environments import Environment, builtin_env
from app.models.primitives import (
    Fraction,
    History,
    NodeBudget,
    Spaces,
    dist_from_mapping,
    format_history,
    format_rational,
    parse_history,
    parse_rational,
)
from app.schemas import scenario as schema
from app.schemas.reports import CheckReport, Counterexample
from app.services import analysis
from app.services.envmix import EnvWeightVector, MixtureEnvironment, env_dual, universal_env
from app.services.mixtures import (
    PatchSpec,
    PatchedAgent,
    distance_witness,
    equivalence_witness,
)
from app.services.mutations import Mutation, get_mutation
from app.services.valuation import WeightedMeasure, upsilon, value_at

logger = setup_logger("scenarios")

Ref = Union[str, Any]


def _location(loc: Tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def parse_scenario(text: str) -> schema.Scenario:
    """
    Parse and validate a scenario document. Malformed JSON raises
    ScenarioParseError with line:column, unknown fields SchemaError, any
    other schema or semantic failure ScenarioValidationError; each names
    the offending location.
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(e.msg, location=f"line {e.lineno}:{e.colno}")
    return validate_document(document)


def validate_document(document: Any) -> schema.Scenario:
    try:
        scenario = schema.Scenario.model_validate(document)
    except ValidationError as e:
        errors = e.errors()
        extra = [err for err in errors if err["type"] == "extra_forbidden"]
        if extra:
            raise SchemaError(f"Unknown field {extra[0]['loc'][-1]!r}", location=_location(extra[0]["loc"]))
        first = errors[0]
        raise ScenarioValidationError(first["msg"], location=_location(first["loc"]))
    ScenarioBuilder(scenario)
    return scenario


def serialize_scenario(scenario: schema.Scenario) -> str:
    return json.dumps(scenario.model_dump(mode="json", exclude_none=True), indent=2)


def load_scenario(path: Union[str, Path]) -> schema.Scenario:
    """Read a scenario file; a bare name such as `fix1` resolves inside FIXTURES_DIR."""
    path = Path(path)
    if not path.exists() and not path.suffix:
        candidate = Path(settings.FIXTURES_DIR) / f"{path}.json"
        if candidate.exists():
            path = candidate
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(f"Cannot read scenario: {e.strerror}", location=str(path))
    return parse_scenario(text)


class ScenarioBuilder:
    """
    Builds the named agents, environments and measures of a scenario with
    the factories of one mutation. Everything named is built eagerly, so
    a constructed builder is only ever read from.
    """

    def __init__(self, scenario: schema.Scenario, mutation: Optional[Mutation] = None):
        self.scenario = scenario
        self.mutation = mutation or get_mutation(None)
        self.spaces = self._located("spaces", lambda: Spaces(
            tuple(scenario.spaces.actions),
            tuple(scenario.spaces.observations),
            tuple(parse_rational(r) for r in scenario.spaces.rewards),
        ))
        self.agents: Dict[str, Agent] = {}
        self.environments: Dict[str, Environment] = {}
        self.measures: Dict[str, WeightedMeasure] = {}
        self._building: set = set()

        for name in scenario.measures:
            self.measure(name)
        for name in scenario.environments:
            self.env(name)
        for name in scenario.agents:
            self.agent(name)
        for index, check in enumerate(scenario.checks):
            self._located(f"checks.{index}", lambda: self._resolve_check(check))
        names = [check.name for check in scenario.checks]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ScenarioValidationError(f"Duplicate check names {duplicates}", location="checks")

    @staticmethod
    def _located(location: str, build: Callable[[], Any]) -> Any:
        try:
            return build()
        except (ScenarioValidationError, UnknownName):
            raise
        except AlgebraError as e:
            raise ScenarioValidationError(e.detail, location=location)

    def _enter(self, kind: str, name: str) -> None:
        if (kind, name) in self._building:
            raise ScenarioValidationError(f"Cyclic reference to {name!r}", location=f"{kind}.{name}")
        self._building.add((kind, name))

    # Named declarations

    def agent(self, ref: Ref) -> Agent:
        if not isinstance(ref, str):
            return self.build_agent(ref)
        if ref not in self.agents:
            if ref not in self.scenario.agents:
                raise UnknownName(f"Unknown agent {ref!r}", location=f"agents.{ref}")
            self._enter("agents", ref)
            self.agents[ref] = self._located(f"agents.{ref}", lambda: self.build_agent(self.scenario.agents[ref]))
        return self.agents[ref]

    def env(self, ref: Ref) -> Environment:
        if not isinstance(ref, str):
            return self.build_env(ref)
        if ref not in self.environments:
            if ref not in self.scenario.environments:
                raise UnknownName(f"Unknown environment {ref!r}", location=f"environments.{ref}")
            self._enter("environments", ref)
            self.environments[ref] = self._located(
                f"environments.{ref}", lambda: self.build_env(self.scenario.environments[ref])
            )
        return self.environments[ref]

    def measure(self, name: str) -> WeightedMeasure:
        if name not in self.measures:
            if name not in self.scenario.measures:
                raise UnknownName(f"Unknown measure {name!r}", location=f"measures.{name}")
            self._enter("measures", name)
            self.measures[name] = self._located(f"measures.{name}", lambda: self._build_measure(self.scenario.measures[name]))
        return self.measures[name]

    def _build_measure(self, spec: schema.MeasureSpec) -> WeightedMeasure:
        measure = WeightedMeasure([(self.env(c.env), parse_rational(c.weight)) for c in spec.components])
        if spec.normalized:
            measure.require_normalized()
        return measure

    # Descriptor trees

    def history(self, text: str) -> History:
        return parse_history(text, self.spaces)

    def action_dist(self, mapping: Dict[str, str]):
        return dist_from_mapping(self.spaces.actions, mapping)

    def build_agent(self, spec: Any) -> Agent:
        m = self.mutation
        if isinstance(spec, schema.MixAgentSpec):
            return m.mix_agents(m.weights([parse_rational(w) for w in spec.weights]), [self.agent(a) for a in spec.agents])
        if isinstance(spec, schema.DualAgentSpec):
            return m.dual_agent(self.agent(spec.agent))
        if isinstance(spec, schema.SymmetrizeAgentSpec):
            return m.symmetrize(self.agent(spec.agent))
        if isinstance(spec, schema.PatchAgentSpec):
            return PatchedAgent(self.agent(spec.agent), PatchSpec(self.history(spec.site), self.action_dist(spec.dist)))
        return builtin_agent(spec.kind, self._family_params(spec), self.spaces)

    @staticmethod
    def _family_params(spec: Any) -> Dict[str, Any]:
        params = spec.model_dump(exclude={"kind"}, exclude_none=True)
        if spec.kind == "random":
            params.setdefault("denominator", settings.RANDOM_DENOMINATOR)
        return params

    def build_env(self, spec: Any) -> Environment:
        if isinstance(spec, schema.EnvMixSpec):
            weights = EnvWeightVector(tuple(parse_rational(w) for w in spec.weights), parse_rational(spec.silent_tail))
            return self.mutation.wrap_env(MixtureEnvironment(weights, [self.env(e) for e in spec.envs]))
        if isinstance(spec, schema.EnvDualSpec):
            return self.mutation.wrap_env(env_dual(self.env(spec.env)))
        if isinstance(spec, schema.UniversalEnvSpec):
            return self.mutation.wrap_env(universal_env(self.measure(spec.measure)))
        return self.mutation.wrap_env(builtin_env(spec.kind, self._family_params(spec), self.spaces))

    def agents_of(self, refs: Sequence[Ref]) -> List[Agent]:
        return [self.agent(ref) for ref in refs]

    def _resolve_check(self, check: Any) -> None:
        """Resolve every reference a check makes so that unknown names fail validation."""
        get_mutation(check.mutation)
        for key in ("agent", "left", "right"):
            if hasattr(check, key):
                self.agent(getattr(check, key))
        for key in ("agents", "battery", "inside", "outside", "members"):
            if hasattr(check, key):
                self.agents_of(getattr(check, key))
        if hasattr(check, "env"):
            self.env(check.env)
        if hasattr(check, "measure"):
            self.measure(check.measure)
        if hasattr(check, "site"):
            self.history(check.site)


@dataclass
class RunResult:
    exit_code: int
    reports: List[CheckReport] = field(default_factory=list)


def _apply_expectation(check: Any, report: CheckReport) -> CheckReport:
    if check.expect or report.verdict not in ("pass", "fail"):
        return report
    if report.verdict == "fail":
        return report.model_copy(update={
            "verdict": "pass",
            "notes": report.notes + [f"failed as expected: {report.counterexample.detail}"],
        })
    return report.model_copy(update={
        "verdict": "fail",
        "counterexample": Counterexample(detail="property was expected to fail but held"),
    })


class ScenarioRunner:
    """Runs the checks of one parsed scenario; builders are shared per mutation."""

    def __init__(self, scenario: schema.Scenario, seed: Optional[int] = None, max_nodes: Optional[int] = None):
        self.scenario = scenario
        self.seed = settings.DEFAULT_SEED if seed is None else seed
        self.max_nodes = max_nodes or settings.MAX_NODES
        self._builders: Dict[str, ScenarioBuilder] = {"none": ScenarioBuilder(scenario)}
        for check in scenario.checks:
            mutation = get_mutation(check.mutation)
            if mutation.name not in self._builders:
                self._builders[mutation.name] = ScenarioBuilder(scenario, mutation)

    def builder(self, check: Any) -> ScenarioBuilder:
        return self._builders[get_mutation(check.mutation).name]

    def budget(self) -> NodeBudget:
        return NodeBudget(self.max_nodes)

    def run_check(self, check: Any) -> CheckReport:
        report = _run_check(check, self)
        return _apply_expectation(check, report)

    def run(self, only: Optional[str] = None) -> RunResult:
        checks = [c for c in self.scenario.checks if only is None or c.name == only]
        if only is not None and not checks:
            raise UnknownName(f"Unknown check {only!r}", location="checks")
        logger.info(f"Running {len(checks)} checks with {settings.CHECK_WORKERS} workers")
        with ThreadPoolExecutor(max_workers=settings.CHECK_WORKERS) as pool:
            reports = list(pool.map(self.run_check, checks))
        exit_code = EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED
        logger.info(f"{sum(r.passed for r in reports)}/{len(reports)} checks passed")
        return RunResult(exit_code, reports)


def run(scenario: schema.Scenario, seed: Optional[int] = None, max_nodes: Optional[int] = None,
        only: Optional[str] = None) -> RunResult:
    return ScenarioRunner(scenario, seed, max_nodes).run(only)


@handle_check_errors
def _run_check(check: Any, runner: ScenarioRunner) -> CheckReport:
    logger.debug(f"Running check {check.name} ({check.op})")
    b = runner.builder(check)
    m = b.mutation
    budget = runner.budget()
    op = check.op

    if op == "value":
        env = b.env(check.env)
        value = value_at(b.agent(check.agent), env, check.t, budget)
        tail = env.tail_bound(check.t)
        return _valued(check, value, tail, f"V_{check.t} differs from the expected value")
    if op == "upsilon":
        result = upsilon(b.measure(check.measure), b.agent(check.agent), check.t, budget)
        return _valued(check, result.value_at_t, result.tail, f"Upsilon at t={check.t} differs from the expected value")
    if op == "mixture_laws":
        weights = m.weights([parse_rational(w) for w in check.weights])
        return analysis.check_mixture_laws(weights, b.agents_of(check.agents), b.env(check.env), check.depth, check.name, m, budget)
    if op == "duality":
        return analysis.check_duality_laws(b.agent(check.agent), check.depth, check.name, m, budget)
    if op == "patch_lemmas":
        patch = PatchSpec(b.history(check.site), b.action_dist(check.dist))
        return analysis.check_patch_lemmas(b.agent(check.agent), patch, check.depth, check.name, budget)
    if op == "symmetry":
        return analysis.check_symmetry(b.measure(check.measure), b.agents_of(check.battery), check.depth, check.name, m, budget)
    if op == "separability":
        return analysis.separability_probe(b.env(check.env), b.agents_of(check.inside), b.agents_of(check.outside), check.depth, check.name, budget)
    if op == "closure":
        membership = analysis.ValueThreshold(b.env(check.env), check.t, check.comparison, parse_rational(check.threshold))
        seed = runner.seed if check.seed is None else check.seed
        return analysis.closure_probe(b.agents_of(check.members), membership, check.trials, seed, check.name, m, budget)
    if op == "extrema":
        return analysis.extrema_probe(
            b.measure(check.measure), b.agent(check.agent), b.history(check.site), parse_rational(check.eps),
            check.depth, check.name, m, budget,
        )
    if op == "strongly_well_behaved":
        return analysis.check_strongly_well_behaved(b.env(check.env), check.horizon, check.name, budget)
    if op == "equivalent":
        witness = equivalence_witness(b.agent(check.left), b.agent(check.right), check.depth, budget)
        return _witnessed(check, witness, "agents are equivalent")
    if op == "self_dual":
        agent = b.agent(check.agent)
        witness = equivalence_witness(agent, m.dual_agent(agent), check.depth, budget)
        return _witnessed(check, witness, "agent is self-dual")
    if op == "distance":
        distance, where = distance_witness(b.agent(check.left), b.agent(check.right), check.depth, budget)
        if check.expected is None:
            return CheckReport.build(check.name, op, "pass", check.depth, {"distance": distance})
        return analysis.compare(check.name, op, check.depth, distance, parse_rational(check.expected),
                                "distance differs from the expected value", where)
    if op == "universal":
        return analysis.check_universal(b.measure(check.measure), b.agents_of(check.agents), check.depth, check.name, budget)
    if op == "tail_bound":
        return analysis.check_tail_bound(b.agents_of(check.agents), b.env(check.env), check.depth, check.big_t, check.name, budget)
    if op == "env_duality":
        env = b.env(check.env)
        return analysis.check_env_duality(b.agents_of(check.agents), env, env_dual(env), check.depth, check.name, m, budget)
    if op == "janus":
        return analysis.janus_probe(b.agent(check.agent), check.depth, check.name, m, budget)
    if op == "equivalence_relation":
        return analysis.equivalence_relation_probe(b.agents_of(check.agents), check.depth, check.name, budget)
    raise UnknownName(f"Unknown check op {op!r}")


def _valued(check: Any, value: Fraction, tail: Optional[Fraction], detail: str) -> CheckReport:
    reported = CheckReport.build(check.name, check.op, "pass", check.t, {"value": value, "tail": tail}
                                 if tail is not None else {"value": value})
    if check.expected is None:
        return reported
    report = analysis.compare(check.name, check.op, check.t, value, parse_rational(check.expected), detail)
    return report.model_copy(update={
        "values": {**report.values, **reported.values},
        "decimals": {**report.decimals, **reported.decimals},
    })


def _witnessed(check: Any, witness: Any, holds: str) -> CheckReport:
    if witness is None:
        return CheckReport.build(check.name, check.op, "pass", check.depth, notes=[f"{holds} up to depth {check.depth}"])
    return CheckReport.build(
        check.name, check.op, "fail", check.depth,
        counterexample=Counterexample(
            detail=witness.detail, history=format_history(witness.history),
            left=format_rational(witness.left), right=format_rational(witness.right),
        ),
    )
