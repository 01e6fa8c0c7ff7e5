"""
Configuration management for the sparse-grid DG solver.
Process-level settings come from environment variables (prefix SPARSE_DG_) or a .env file.
"""
import logging
from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Output
    output_dir: str = "results"

    # Execution
    workers: int = 1
    max_grid_points: int = 20_000_000

    # Logging
    log_level: str = "INFO"

    # HTTP surface
    host: str = "127.0.0.1"
    port: int = 8000
    debug: bool = False

    class Config:
        env_prefix = "SPARSE_DG_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False
        extra = "ignore"


# Global settings instance
settings = Settings()


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once for CLI and server entry points."""
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
