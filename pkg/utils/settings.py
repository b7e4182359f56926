from typing import Tuple

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


# settings.py

class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"

    # order-core
    EPS_PSD_SCALE: float = 1e-9

    # lqg-core
    TOL_RICCATI: float = 1e-9
    NEWTON_STEPS: int = 2
    MARE_NORM_BOUND: float = 1e12
    MARE_MAX_ITER: int = 100_000
    MARE_TOL: float = 1e-12

    # dpi-core
    MAX_ITER: int = 10_000
    MAX_BRUTE_FORCE: int = 1_000_000
    WORKERS: int = 1

    # lqg-dpi grid defaults
    ALPHA_MIN: float = 1e-4
    ALPHA_MAX: float = 1e4
    ALPHA_POINTS: int = 25
    FREQ_MIN: float = 0.2
    FREQ_MAX: float = 50.0
    FREQ_POINTS: int = 20

    # drone-codesign
    FEATURE_NOISE_K: float = 1.0
    BATTERY_SCALES: Tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    GRAVITY: float = 9.81

    model_config = SettingsConfigDict(
        env_prefix="CODESIGN_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


# Instantiate settings
settings = Settings()
