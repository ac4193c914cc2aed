# services/mixture_lab/app/core/__init__.py
from .config import settings, get_settings
