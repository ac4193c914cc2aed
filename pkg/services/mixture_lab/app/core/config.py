# services/mixture_lab/app/core/config.py
import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

SERVICE_ROOT = Path(__file__).resolve().parents[2]


class Settings(BaseSettings):
    # Service settings
    SERVICE_NAME: str = "mixture-lab"
    VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    # Evaluation limits
    MAX_NODES: int = 10_000_000
    CHECK_WORKERS: int = 4

    # Random desks
    RANDOM_DENOMINATOR: int = 12
    DEFAULT_SEED: int = 0

    # Reports
    DECIMAL_DIGITS: int = 6
    FIXTURES_DIR: Path = SERVICE_ROOT / "fixtures"

    @field_validator("MAX_NODES", "CHECK_WORKERS", "RANDOM_DENOMINATOR", "DECIMAL_DIGITS")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be a positive integer")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown log level {v}")
        return level

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", case_sensitive=True)


@lru_cache()
def get_settings() -> Settings:
    """
    Cached method to retrieve application settings
    Ensures settings are only loaded once and cached
    """
    return Settings()


settings = get_settings()
