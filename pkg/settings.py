from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level knobs; experiment semantics live in ExperimentConfig"""
    model_config = SettingsConfigDict(env_prefix="LOSSYSYNC_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    output_root: str = "runs"
    jobs: int = 1
    progress: bool = True


@lru_cache
def get_settings() -> Settings:
    return Settings()
