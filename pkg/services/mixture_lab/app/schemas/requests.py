# services/mixture_lab/app/schemas/requests.py
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class ScenarioRequest(BaseModel):
    # Raw document: validated by the scenario service so that errors keep their locations
    scenario: Dict[str, Any]
    max_nodes: Optional[int] = Field(default=None, gt=0)


class RunRequest(ScenarioRequest):
    only: Optional[str] = None
    seed: Optional[int] = None


class ValueRequest(ScenarioRequest):
    agent: str
    env: str
    t: int = Field(ge=0)


class UpsilonRequest(ScenarioRequest):
    agent: str
    measure: str
    t: int = Field(ge=0)
