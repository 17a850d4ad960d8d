import os
from typing import Optional
from pathlib import Path
from dotenv import dotenv_values

# Load environment variables from .env file if it exists
env_path = Path(__file__).parent.parent / '.env'
config = dotenv_values(env_path) if env_path.exists() else {}

def get_env_var(key: str, default: str = None) -> str:
    """Get environment variable with fallback to .env file"""
    return os.getenv(key, config.get(key, default))

def get_env_flag(key: str, default: str = "false") -> bool:
    """Get a boolean environment variable (1/true/yes/on)"""
    return str(get_env_var(key, default)).strip().lower() in ("1", "true", "yes", "on")

class Settings:
    """Application settings"""

    PROJECT_NAME: str = "edgchain-vault"
    PROJECT_VERSION: str = "0.1.0"

    # Workspace
    REPO_PATH: str = get_env_var("EDG_REPO", ".")
    IDENTITY: Optional[str] = get_env_var("EDG_IDENTITY")
    WORKSPACE_DIR: str = ".edg"
    DATA_FILE: str = "data"

    # Ledger
    DEFAULT_CHECKPOINT_INTERVAL: int = int(get_env_var("EDG_CHECKPOINT_INTERVAL", "16"))

    # Content-addressed store
    UNPIN_SUPERSEDED: bool = get_env_flag("EDG_UNPIN_SUPERSEDED")

    # Patch engine
    PATCH_MAX_INPUT: int = int(get_env_var("EDG_PATCH_MAX_INPUT", str(1 << 30)))
    CHUNK_MIN: int = int(get_env_var("EDG_CHUNK_MIN", "2048"))
    CHUNK_AVG: int = int(get_env_var("EDG_CHUNK_AVG", "8192"))
    CHUNK_MAX: int = int(get_env_var("EDG_CHUNK_MAX", "65536"))

    # Keystore
    KDF_N: int = int(get_env_var("EDG_KDF_N", "32768"))
    KDF_R: int = 8
    KDF_P: int = 1

    # Logging
    LOG_LEVEL: str = get_env_var("LOG_LEVEL", "WARNING")
    LOG_FORMAT: str = get_env_var("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    LOG_FILE: Optional[str] = get_env_var("LOG_FILE")
    LOG_DATE_FORMAT: str = "%Y-%m-%d %H:%M:%S"

    @classmethod
    def get_logging_config(cls) -> dict:
        """Get logging configuration"""
        return {
            "level": cls.LOG_LEVEL,
            "format": cls.LOG_FORMAT,
            "date_format": cls.LOG_DATE_FORMAT,
            "file": cls.LOG_FILE,
        }

    @classmethod
    def validate(cls) -> None:
        """Validate settings"""
        if cls.DEFAULT_CHECKPOINT_INTERVAL < 1:
            raise ValueError(f"EDG_CHECKPOINT_INTERVAL must be >= 1, got {cls.DEFAULT_CHECKPOINT_INTERVAL}")

        if cls.PATCH_MAX_INPUT < 1:
            raise ValueError("EDG_PATCH_MAX_INPUT must be positive")

        # The chunk mask is derived from the average size
        if cls.CHUNK_AVG & (cls.CHUNK_AVG - 1):
            raise ValueError(f"EDG_CHUNK_AVG must be a power of two, got {cls.CHUNK_AVG}")
        if not 0 < cls.CHUNK_MIN < cls.CHUNK_AVG < cls.CHUNK_MAX:
            raise ValueError("Chunk sizes must satisfy 0 < EDG_CHUNK_MIN < EDG_CHUNK_AVG < EDG_CHUNK_MAX")

        if cls.KDF_N < 2 or cls.KDF_N & (cls.KDF_N - 1):
            raise ValueError(f"EDG_KDF_N must be a power of two, got {cls.KDF_N}")

        # Validate log level
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if cls.LOG_LEVEL.upper() not in valid_levels:
            raise ValueError(f"Invalid LOG_LEVEL: {cls.LOG_LEVEL}. Must be one of {valid_levels}")

# Create settings instance
settings = Settings()

# Validate settings on import
try:
    settings.validate()
except ValueError as e:
    # Use print here since logging might not be configured yet
    print(f"Configuration error: {e}")
    raise
