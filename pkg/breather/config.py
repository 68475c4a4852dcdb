from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Pydantic V2 Configuration for loading from .env
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding='utf-8',
        env_prefix="BREATHER_",
        extra="ignore"
    )

    # --- App Settings
    APP_NAME: str = "breather"
    SCHEMA_VERSION: int = 1

    # --- Solver defaults (desk scale: box [-20, 20], dx = 0.01, dt = 1e-4)
    DEFAULT_DT: float = 1e-4
    DEFAULT_DX: float = 0.01
    DEFAULT_BOX: float = 20.0
    SNAPSHOT_STRIDE: int = 10

    # --- Numerical guards
    DEGENERATE_NORM: float = 1e-12
    BLOWUP_GROWTH: float = 10.0
    BLOWUP_CHECK_EVERY: int = 100
    RESIDUAL_TOL: float = 5e-3
    QUADRATURE_STEP: float = 1e-4

    # --- Storage
    OUTPUT_DIR: str = "./runs"

    # --- Logging
    LOG_DIR: str = "logs"
    LOG_LEVEL: str = "INFO"
    LOG_TO_FILE: bool = True
    SHOW_PROGRESS: bool = False


settings = Settings()
