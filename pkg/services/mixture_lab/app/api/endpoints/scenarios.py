# services/mixture_lab/app/api/endpoints/scenarios.py

from typing import Any, Dict

from fastapi import APIRouter

from app.core.config import settings
from app.core.logging import logger
from app.models.primitives import NodeBudget
from app.schemas.reports import RunSummary, ValueResultOut
from app.schemas.requests import RunRequest, ScenarioRequest, UpsilonRequest, ValueRequest
from app.services.scenarios import ScenarioBuilder, run, validate_document
from app.services.valuation import upsilon, value_interval

router = APIRouter()


@router.post("/validate")
def validate_scenario(request: ScenarioRequest) -> Dict[str, Any]:
    scenario = validate_document(request.scenario)
    return {
        "valid": True,
        "agents": sorted(scenario.agents),
        "environments": sorted(scenario.environments),
        "measures": sorted(scenario.measures),
        "checks": [check.name for check in scenario.checks],
    }


@router.post("/run", response_model=RunSummary)
def run_scenario(request: RunRequest):
    scenario = validate_document(request.scenario)
    result = run(scenario, seed=request.seed, max_nodes=request.max_nodes, only=request.only)
    logger.info(f"Scenario run finished with exit code {result.exit_code}")
    return RunSummary(exit_code=result.exit_code, reports=result.reports)


@router.post("/value", response_model=ValueResultOut)
def scenario_value(request: ValueRequest):
    builder = ScenarioBuilder(validate_document(request.scenario))
    budget = NodeBudget(request.max_nodes or settings.MAX_NODES)
    result = value_interval(builder.agent(request.agent), builder.env(request.env), request.t, budget)
    return ValueResultOut.from_result(result)


@router.post("/upsilon", response_model=ValueResultOut)
def scenario_upsilon(request: UpsilonRequest):
    builder = ScenarioBuilder(validate_document(request.scenario))
    budget = NodeBudget(request.max_nodes or settings.MAX_NODES)
    result = upsilon(builder.measure(request.measure), builder.agent(request.agent), request.t, budget)
    return ValueResultOut.from_result(result)
