# services/mixture_lab/app/schemas/scenario.py
"""
Scenario file schema. Agents and environments are descriptor trees,
discriminated on `kind`; checks are discriminated on `op`. Wherever a
descriptor is expected, a bare string refers to a named declaration.
Rationals are written "p/q" (or as integers) and kept in canonical form.
"""
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field

from app.core.errors import AlgebraError
from app.models.primitives import format_rational, parse_rational

SCENARIO_VERSION = "1"


def _canonical_rational(value: Any) -> str:
    try:
        return format_rational(parse_rational(value))
    except AlgebraError as e:
        raise ValueError(e.detail)


RationalStr = Annotated[str, BeforeValidator(_canonical_rational)]
DistSpec = Dict[str, RationalStr]
Steps = Annotated[int, Field(ge=0)]
Depth = Annotated[int, Field(ge=1)]
Positive = Annotated[int, Field(ge=1)]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpacesSpec(StrictModel):
    actions: List[str]
    observations: List[str]
    rewards: List[RationalStr]


# Agents

class UniformAgentSpec(StrictModel):
    kind: Literal["uniform"]


class ConstantAgentSpec(StrictModel):
    kind: Literal["constant", "deterministic-constant"]
    action: str


class TableAgentSpec(StrictModel):
    kind: Literal["table"]
    entries: Dict[str, DistSpec]
    default: Optional[DistSpec] = None


class GreedyAgentSpec(StrictModel):
    kind: Literal["greedy", "last-reward-greedy"]
    threshold: RationalStr
    hi: str
    lo: str


class RandomAgentSpec(StrictModel):
    kind: Literal["random"]
    seed: int
    denominator: Optional[Positive] = None


class MixAgentSpec(StrictModel):
    kind: Literal["mix"]
    weights: List[RationalStr]
    agents: List["AgentRef"]


class DualAgentSpec(StrictModel):
    kind: Literal["dual"]
    agent: "AgentRef"


class PatchAgentSpec(StrictModel):
    kind: Literal["patch"]
    agent: "AgentRef"
    site: str
    dist: DistSpec


class SymmetrizeAgentSpec(StrictModel):
    kind: Literal["symmetrize"]
    agent: "AgentRef"


AgentSpec = Annotated[
    Union[
        UniformAgentSpec,
        ConstantAgentSpec,
        TableAgentSpec,
        GreedyAgentSpec,
        RandomAgentSpec,
        MixAgentSpec,
        DualAgentSpec,
        PatchAgentSpec,
        SymmetrizeAgentSpec,
    ],
    Field(discriminator="kind"),
]
AgentRef = Union[str, AgentSpec]

for _model in (MixAgentSpec, DualAgentSpec, PatchAgentSpec, SymmetrizeAgentSpec):
    _model.model_rebuild()


# Environments

class SilentEnvSpec(StrictModel):
    kind: Literal["silent"]
    observation: Optional[str] = None


class TableEnvSpec(StrictModel):
    kind: Literal["table"]
    horizon: Steps
    entries: Dict[str, DistSpec]
    padding: Optional[DistSpec] = None
    default: Optional[DistSpec] = None


class TerminatingEnvSpec(StrictModel):
    kind: Literal["terminating"]
    gamma: RationalStr
    halt: str
    rules: Dict[str, DistSpec]


class RandomEnvSpec(StrictModel):
    kind: Literal["random"]
    horizon: Positive
    seed: int
    denominator: Optional[Positive] = None
    sparse: bool = False


class EnvMixSpec(StrictModel):
    kind: Literal["envmix"]
    weights: List[RationalStr]
    envs: List["EnvRef"]
    silent_tail: RationalStr = "0"


class EnvDualSpec(StrictModel):
    kind: Literal["envdual"]
    env: "EnvRef"


class UniversalEnvSpec(StrictModel):
    kind: Literal["universal"]
    measure: str


EnvSpec = Annotated[
    Union[
        SilentEnvSpec,
        TableEnvSpec,
        TerminatingEnvSpec,
        RandomEnvSpec,
        EnvMixSpec,
        EnvDualSpec,
        UniversalEnvSpec,
    ],
    Field(discriminator="kind"),
]
EnvRef = Union[str, EnvSpec]

for _model in (EnvMixSpec, EnvDualSpec):
    _model.model_rebuild()


class MeasureComponent(StrictModel):
    env: EnvRef
    weight: RationalStr


class MeasureSpec(StrictModel):
    components: List[MeasureComponent]
    normalized: bool = True


# Checks

class CheckBase(StrictModel):
    name: str
    expect: bool = True
    mutation: Optional[str] = None


class ValueCheck(CheckBase):
    op: Literal["value"]
    agent: AgentRef
    env: EnvRef
    t: Steps
    expected: Optional[RationalStr] = None


class UpsilonCheck(CheckBase):
    op: Literal["upsilon"]
    agent: AgentRef
    measure: str
    t: Steps
    expected: Optional[RationalStr] = None


class MixtureLawsCheck(CheckBase):
    op: Literal["mixture_laws"]
    weights: List[RationalStr]
    agents: List[AgentRef]
    env: EnvRef
    depth: Depth


class DualityCheck(CheckBase):
    op: Literal["duality"]
    agent: AgentRef
    depth: Depth


class PatchLemmasCheck(CheckBase):
    op: Literal["patch_lemmas"]
    agent: AgentRef
    site: str
    dist: DistSpec
    depth: Depth


class SymmetryCheck(CheckBase):
    op: Literal["symmetry"]
    measure: str
    battery: List[AgentRef]
    depth: Depth


class SeparabilityCheck(CheckBase):
    op: Literal["separability"]
    env: EnvRef
    inside: List[AgentRef]
    outside: List[AgentRef]
    depth: Depth


class ClosureCheck(CheckBase):
    op: Literal["closure"]
    members: List[AgentRef]
    env: EnvRef
    t: Steps
    comparison: Literal[">=", ">", "<=", "<"] = ">="
    threshold: RationalStr
    trials: Positive = 20
    seed: Optional[int] = None


class ExtremaCheck(CheckBase):
    op: Literal["extrema"]
    measure: str
    agent: AgentRef
    site: str
    eps: RationalStr
    depth: Depth


class StronglyWellBehavedCheck(CheckBase):
    op: Literal["strongly_well_behaved"]
    env: EnvRef
    horizon: Steps


class EquivalentCheck(CheckBase):
    op: Literal["equivalent"]
    left: AgentRef
    right: AgentRef
    depth: Depth


class SelfDualCheck(CheckBase):
    op: Literal["self_dual"]
    agent: AgentRef
    depth: Depth


class DistanceCheck(CheckBase):
    op: Literal["distance"]
    left: AgentRef
    right: AgentRef
    depth: Depth
    expected: Optional[RationalStr] = None


class UniversalCheck(CheckBase):
    op: Literal["universal"]
    measure: str
    agents: List[AgentRef]
    depth: Depth


class TailBoundCheck(CheckBase):
    op: Literal["tail_bound"]
    env: EnvRef
    agents: List[AgentRef]
    depth: Depth
    big_t: Positive


class EnvDualityCheck(CheckBase):
    op: Literal["env_duality"]
    env: EnvRef
    agents: List[AgentRef]
    depth: Depth


class JanusCheck(CheckBase):
    op: Literal["janus"]
    agent: AgentRef
    depth: Depth


class EquivalenceRelationCheck(CheckBase):
    op: Literal["equivalence_relation"]
    agents: List[AgentRef]
    depth: Depth


CheckSpec = Annotated[
    Union[
        ValueCheck,
        UpsilonCheck,
        MixtureLawsCheck,
        DualityCheck,
        PatchLemmasCheck,
        SymmetryCheck,
        SeparabilityCheck,
        ClosureCheck,
        ExtremaCheck,
        StronglyWellBehavedCheck,
        EquivalentCheck,
        SelfDualCheck,
        DistanceCheck,
        UniversalCheck,
        TailBoundCheck,
        EnvDualityCheck,
        JanusCheck,
        EquivalenceRelationCheck,
    ],
    Field(discriminator="op"),
]


class OutputSpec(StrictModel):
    format: Literal["json", "csv"] = "json"


class Scenario(StrictModel):
    version: Literal["1"]
    spaces: SpacesSpec
    agents: Dict[str, AgentSpec] = {}
    environments: Dict[str, EnvSpec] = {}
    measures: Dict[str, MeasureSpec] = {}
    checks: List[CheckSpec] = []
    output: OutputSpec = OutputSpec()

