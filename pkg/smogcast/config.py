from pydantic_settings import BaseSettings, SettingsConfigDict

from smogcast import __version__


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # App
    APP_NAME: str = "Smogcast"
    VERSION: str = __version__
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Compute
    SMOGCAST_THREADS: int = 0  # 0 = one worker per CPU

    # Runs served by the API
    RUNS_DIR: str = "runs"

    # API
    API_V1_PREFIX: str = "/api/v1"

    def worker_count(self) -> int:
        """Worker pool size for read-only evaluation passes"""
        import os

        if self.SMOGCAST_THREADS > 0:
            return self.SMOGCAST_THREADS
        return os.cpu_count() or 1


settings = Settings()
