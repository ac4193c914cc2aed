# services/mixture_lab/app/api/endpoints/health.py

from datetime import datetime, timezone

from fastapi import APIRouter

from app.core.config import settings
from app.services.mutations import DEFECTS

router = APIRouter()


@router.get("/health")
async def health_check():
    return {
        "status": "healthy",
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "service": settings.SERVICE_NAME,
        "version": settings.VERSION,
        "max_nodes": settings.MAX_NODES,
        "mutations": list(DEFECTS),
    }
