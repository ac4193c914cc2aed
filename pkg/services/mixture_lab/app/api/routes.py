# services/mixture_lab/app/api/routes.py

from fastapi import APIRouter

from app.api.endpoints import health, scenarios

router = APIRouter()

router.include_router(health.router, tags=["health"])
router.include_router(scenarios.router, prefix="/scenarios", tags=["scenarios"])
