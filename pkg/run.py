import uvicorn

from smogcast.config import settings

if __name__ == "__main__":
    uvicorn.run(
        "smogcast.main:app",
        host="0.0.0.0",
        port=8000,
        reload=settings.DEBUG,
        log_level=settings.LOG_LEVEL.lower(),
    )
