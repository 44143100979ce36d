from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application Configuration"""

    model_config = SettingsConfigDict(
        env_prefix="SPECFLOW_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    # App Settings
    APP_NAME: str = "specflow"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Tolerances
    TOL_BASE: float = 1e-9
    TOL_INEQUALITY: float = 1e-9
    TOL_ORACLE: float = 1e-10
    TOL_UNITARY: float = 1e-10
    TOL_NORMAL: float = 1e-8
    TOL_EIG_MODULUS: float = 1e-8
    WINDING_RESIDUAL_MAX: float = 0.05

    # Solver limits
    BRUTE_FORCE_MAX_RANK: int = 8
    CONTRACTION_STEP: float = 0.1

    # Reproducibility / CLI defaults
    DEFAULT_SEED: int = 20240917
    DEFAULT_STEPS: int = 128
    DEFAULT_THETA_GRID: str = "0.1:6.2:64"
    DEFAULT_NORM: str = "p2"
    SIG_DIGITS: int = 12

    # Execution
    MAX_WORKERS: int = 4
    OUTPUT_DIR: str = "./out"


# Create settings instance
settings = Settings()
