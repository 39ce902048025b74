from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings read from the environment (prefix POVMIX_) or a .env file."""

    model_config = SettingsConfigDict(env_prefix="POVMIX_", env_file=".env", extra="ignore")

    threads: Optional[int] = Field(default=None, ge=1)
    log_level: str = "INFO"
    port: int = 10000


@lru_cache
def get_settings() -> Settings:
    return Settings()
