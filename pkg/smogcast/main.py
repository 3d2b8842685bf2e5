import logging
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from smogcast.api.v1.router import router as v1_router
from smogcast.config import settings
from smogcast.core.exceptions import (
    DataError,
    FingerprintMismatchError,
    FormatError,
    NonFiniteError,
    NotFoundError,
    SmogcastError,
)
from smogcast.core.logging import configure_logging
from smogcast.core.runstore import RunStore

logger = logging.getLogger(__name__)


# Lifespan events
@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Startup and shutdown events
    """
    configure_logging(settings.LOG_LEVEL)
    logger.info("[STARTUP] %s %s (debug=%s)", settings.APP_NAME, settings.VERSION, settings.DEBUG)
    runs = await RunStore().get_all()
    logger.info("[STARTUP] serving %d run(s) from %s", len(runs), settings.RUNS_DIR)

    yield

    logger.info("[SHUTDOWN] %s", settings.APP_NAME)


app = FastAPI(
    title=settings.APP_NAME,
    version=settings.VERSION,
    description="Read-only access to smogcast training runs, metrics and architecture",
    lifespan=lifespan,
    docs_url="/docs",
    redoc_url="/redoc",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["GET"],
    allow_headers=["*"],
)


# Request timing middleware
@app.middleware("http")
async def add_process_time_header(request: Request, call_next):
    start_time = time.time()
    response = await call_next(request)
    response.headers["X-Process-Time"] = str(time.time() - start_time)
    return response


# Exception handlers
@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content={"detail": "Validation error", "errors": exc.errors()},
    )


@app.exception_handler(NotFoundError)
async def not_found_exception_handler(request: Request, exc: NotFoundError):
    return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})


@app.exception_handler(FormatError)
async def format_exception_handler(request: Request, exc: FormatError):
    logger.warning("[RUNS] unreadable artifact: %s", exc.detail)
    return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})


@app.exception_handler(FingerprintMismatchError)
async def fingerprint_exception_handler(request: Request, exc: FingerprintMismatchError):
    return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})


@app.exception_handler(DataError)
async def data_exception_handler(request: Request, exc: DataError):
    return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})


@app.exception_handler(NonFiniteError)
async def non_finite_exception_handler(request: Request, exc: NonFiniteError):
    return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})


@app.exception_handler(SmogcastError)
async def smogcast_exception_handler(request: Request, exc: SmogcastError):
    return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})


@app.get("/", tags=["Root"])
async def root():
    """
    Welcome endpoint
    """
    return {
        "message": f"Welcome to {settings.APP_NAME}",
        "version": settings.VERSION,
        "docs": "/docs",
        "redoc": "/redoc",
        "api": {"v1": settings.API_V1_PREFIX},
    }


@app.get("/health", tags=["Root"])
async def health_check():
    """
    Health check endpoint
    """
    return {
        "status": "healthy",
        "version": settings.VERSION,
        "timestamp": time.time(),
    }


app.include_router(v1_router, prefix=settings.API_V1_PREFIX)
