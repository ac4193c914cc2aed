# services/mixture_lab/app/core/logging.py
import logging
import sys

from .config import settings

# stdout carries the report stream, so console logging goes to stderr
log_format = "%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s"
date_format = "%Y-%m-%d %H:%M:%S"

formatter = logging.Formatter(log_format, date_format)

console_handler = logging.StreamHandler(sys.stderr)
console_handler.setFormatter(formatter)

handlers = [console_handler]
if settings.LOG_FILE:
    file_handler = logging.FileHandler(settings.LOG_FILE)
    file_handler.setFormatter(formatter)
    handlers.append(file_handler)

logger = logging.getLogger("mixture_lab")
logger.setLevel(settings.LOG_LEVEL)
if not logger.handlers:
    for handler in handlers:
        logger.addHandler(handler)


def setup_logger(name: str) -> logging.Logger:
    """Create a logger instance for a specific module"""
    module_logger = logging.getLogger(f"mixture_lab.{name}")
    module_logger.setLevel(settings.LOG_LEVEL)
    return module_logger
