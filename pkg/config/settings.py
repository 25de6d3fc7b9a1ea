"""
Process-level settings for the bandit library and experiment harness
"""

from pathlib import Path

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Get the project root directory
PROJECT_ROOT = Path(__file__).parent.parent  # config/settings.py -> config/ -> project_root/

# Values in config/.env never override variables already set in the environment
load_dotenv(PROJECT_ROOT / "config" / ".env", override=False)


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(env_prefix="UBM_", case_sensitive=False)

    # Logging Settings
    log_level: str = "INFO"
    log_dir: Path = PROJECT_ROOT / "logs"
    log_to_file: bool = True

    # Harness Settings
    output_dir: Path = Path("runs")
    threads: int = 1
    master_seed: int = 0
    default_seed_count: int = 10

    # Feature pipeline Settings
    svd_rank: int = 10
    svd_oversampling: int = 10
    svd_power_iterations: int = 2

    # Click model fitting Settings
    em_max_iterations: int = 200
    em_tolerance: float = 1e-6
    em_clamp: float = 1e-6

    # Ridge regression Settings
    ridge_refactor_every: int = 1000


# Global settings instance
settings = Settings()
