# services/mixture_lab/main.py
import signal
import traceback

from fastapi import FastAPI, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.api.routes import router
from app.core.config import settings
from app.core.errors import AlgebraError
from app.core.logging import logger


def signal_handler(signum, frame):
    logger.info(f"Received signal {signum}")
    raise SystemExit(0)


signal.signal(signal.SIGTERM, signal_handler)

app = FastAPI(
    title="Mixture Lab",
    description="Exact valuation and law checking for agent mixtures, dual agents and weighted intelligence measures",
    version=settings.VERSION,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(AlgebraError)
async def algebra_exception_handler(request: Request, exc: AlgebraError):
    logger.warning(f"{type(exc).__name__} on {request.url.path}: {exc}")
    return JSONResponse(
        status_code=exc.status_code,
        content={"detail": exc.detail, "error": type(exc).__name__, "location": exc.location},
    )


@app.exception_handler(Exception)
async def unhandled_exception_handler(request: Request, exc: Exception):
    logger.error(f"Unhandled Exception: {exc}")
    logger.error(traceback.format_exc())
    return JSONResponse(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, content={"detail": "Internal Server Error"})


app.include_router(router)

if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "main:app",
        host="0.0.0.0",
        port=8004,
        reload=True,
        log_level=settings.LOG_LEVEL.lower(),
    )
