# services/mixture_lab/app/schemas/__init__.py
from .reports import CheckReport, Counterexample, RunSummary, ValueResultOut
from .scenario import SCENARIO_VERSION, Scenario

__all__ = [
    'CheckReport',
    'Counterexample',
    'RunSummary',
    'ValueResultOut',
    'SCENARIO_VERSION',
    'Scenario',
]
