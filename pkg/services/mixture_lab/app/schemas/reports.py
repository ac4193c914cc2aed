# services/mixture_lab/app/schemas/reports.py
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, model_validator

from app.core.config import settings
from app.models.primitives import Fraction, format_rational, to_decimal

Verdict = Literal["pass", "fail", "inconclusive", "error"]


class Counterexample(BaseModel):
    detail: str
    history: Optional[str] = None
    agent: Optional[Dict[str, Any]] = None
    left: Optional[str] = None
    right: Optional[str] = None
    model_config = ConfigDict(extra="forbid")


class CheckReport(BaseModel):
    check_name: str
    op: str
    verdict: Verdict
    depth: Optional[int] = None
    counterexample: Optional[Counterexample] = None
    # every witness a check found, by role; counterexample is the one that decides the verdict
    witnesses: Dict[str, Counterexample] = {}
    values: Dict[str, str] = {}
    decimals: Dict[str, float] = {}
    notes: List[str] = []
    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def fail_carries_counterexample(self) -> "CheckReport":
        if self.verdict == "fail" and self.counterexample is None:
            raise ValueError("A failing report must carry a counterexample")
        return self

    @classmethod
    def build(
        cls,
        name: str,
        op: str,
        verdict: Verdict,
        depth: Optional[int] = None,
        values: Optional[Dict[str, Fraction]] = None,
        counterexample: Optional[Counterexample] = None,
        notes: Optional[List[str]] = None,
        witnesses: Optional[Dict[str, Counterexample]] = None,
    ) -> "CheckReport":
        """Exact values become "p/q" strings with a rounded decimal alongside."""
        values = values or {}
        return cls(
            check_name=name,
            op=op,
            verdict=verdict,
            depth=depth,
            counterexample=counterexample,
            witnesses=witnesses or {},
            values={key: format_rational(v) for key, v in values.items()},
            decimals={key: to_decimal(v, settings.DECIMAL_DIGITS) for key, v in values.items()},
            notes=notes or [],
        )

    @classmethod
    def errored(cls, name: str, op: str, depth: Optional[int], error: Exception) -> "CheckReport":
        return cls(
            check_name=name,
            op=op,
            verdict="error",
            depth=depth,
            notes=[f"{type(error).__name__}: {error}"],
        )

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


class ValueResultOut(BaseModel):
    value: str
    decimal: float
    tail: str
    t: int

    @classmethod
    def from_result(cls, result: Any) -> "ValueResultOut":
        return cls(
            value=format_rational(result.value_at_t),
            decimal=to_decimal(result.value_at_t, settings.DECIMAL_DIGITS),
            tail=format_rational(result.tail),
            t=result.t,
        )


class RunSummary(BaseModel):
    exit_code: int
    reports: List[CheckReport]
