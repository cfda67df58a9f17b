"""
Process-level settings.

Centralizes configuration read from environment variables (and a .env
file loaded by the entry point).
"""
import os
from typing import Optional
from pathlib import Path


def _env_bool(name: str, default: bool) -> bool:
    return os.getenv(name, "true" if default else "false").strip().lower() in ("1", "true", "yes", "on")


class Settings:
    """Application settings loaded from environment variables."""

    def __init__(self):
        # Output
        output_dir = os.getenv("SSSTA_OUTPUT_DIR")
        self.OUTPUT_DIR: Optional[Path] = Path(output_dir) if output_dir else None

        # Logging
        self.LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
        log_dir = os.getenv("LOG_DIR")
        self.LOG_DIR: Optional[Path] = Path(log_dir) if log_dir else None
        self.LOG_JSON: bool = _env_bool("LOG_JSON", True)

    @property
    def log_file(self) -> Optional[Path]:
        """Rotating log file under LOG_DIR, if one is configured."""
        return self.LOG_DIR / "sssta.log" if self.LOG_DIR else None

    def resolve_output_dir(self, configured: str | Path) -> Path:
        """SSSTA_OUTPUT_DIR wins over the config file's output_dir."""
        return self.OUTPUT_DIR if self.OUTPUT_DIR is not None else Path(configured)


def get_settings() -> Settings:
    """
    Get settings from the current environment.

    Returns:
        Fresh Settings instance
    """
    return Settings()
