# services/mixture_lab/app/core/decorators.py
import functools
import traceback
from typing import Any, Callable

from app.core.errors import AlgebraError
from app.core.logging import logger
from app.schemas.reports import CheckReport


def handle_check_errors(func: Callable[..., CheckReport]) -> Callable[..., CheckReport]:
    """
    Decorator turning errors raised inside a scenario check into an
    "error" verdict, so later checks in the same run still execute.

    The wrapped callable must take the check declaration as its first
    argument; its `name`, `op` and `depth` label the error report.
    """
    @functools.wraps(func)
    def wrapper(check: Any, *args: Any, **kwargs: Any) -> CheckReport:
        try:
            return func(check, *args, **kwargs)
        except AlgebraError as e:
            logger.warning(f"Check {check.name} raised {type(e).__name__}: {e}")
            return CheckReport.errored(check.name, check.op, getattr(check, "depth", None), e)
        except Exception as e:
            logger.error(f"Unexpected error in check {check.name}: {str(e)}")
            logger.error(traceback.format_exc())
            return CheckReport.errored(check.name, check.op, getattr(check, "depth", None), e)
    return wrapper
