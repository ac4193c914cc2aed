# test_core.py

import logging
from types import SimpleNamespace

import pytest
from fastapi import status
from pydantic import ValidationError

from app.core.config import Settings
from app.core.decorators import handle_check_errors
from app.core.errors import EXIT_INVALID, AlgebraError, DepthOverflow, InvalidDepth, NotNormalized, UnknownName

logger = logging.getLogger(__name__)

CHECK = SimpleNamespace(name="sample", op="value", depth=2)


def test_settings_validation():
    logger.info("Testing settings validators")
    assert Settings(LOG_LEVEL="debug").LOG_LEVEL == "DEBUG"
    with pytest.raises(ValidationError):
        Settings(LOG_LEVEL="loud")
    with pytest.raises(ValidationError):
        Settings(MAX_NODES=0)
    assert Settings.model_config["env_file"] == ".env"
    assert Settings.model_config["case_sensitive"]


def test_error_metadata():
    logger.info("Testing error status and exit codes")
    assert NotNormalized().status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert UnknownName().status_code == status.HTTP_404_NOT_FOUND
    assert DepthOverflow().status_code == status.HTTP_413_REQUEST_ENTITY_TOO_LARGE
    assert InvalidDepth().status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert InvalidDepth().exit_code == EXIT_INVALID
    assert isinstance(InvalidDepth(), AlgebraError)
    assert AlgebraError().exit_code == EXIT_INVALID
    assert str(UnknownName("Unknown agent 'X'", location="agents.X")) == "agents.X: Unknown agent 'X'"


def test_handle_check_errors_turns_failures_into_error_reports():
    logger.info("Testing check error decorator")

    @handle_check_errors
    def domain_failure(check):
        raise NotNormalized("Masses sum to 1/2, not 1")

    @handle_check_errors
    def crash(check):
        raise RuntimeError("boom")

    report = domain_failure(CHECK)
    assert report.verdict == "error"
    assert report.notes == ["NotNormalized: Masses sum to 1/2, not 1"]
    assert crash(CHECK).notes == ["RuntimeError: boom"]
    assert crash(CHECK).depth == 2
