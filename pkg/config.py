import logging

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

# Propagation speed used for element spacing and spatial directions (m/s)
SPEED_OF_LIGHT = 3e8


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="TTD_", extra="ignore")

    LOG_LEVEL: str = "INFO"

    DEFAULT_SEED: int = 42
    DEFAULT_WORKERS: int = 1
    VERIFY_BATCH_SIZE: int = 100

    COORD_TOL: float = 1e-6
    OBJECTIVE_TOL: float = 1e-9
    GAIN_TOL: float = 1e-12
    KKT_TOL: float = 1e-8

    CSV_DIGITS: int = 12

    PGD_MAX_ITER: int = 10_000
    # Stop once the projected-gradient coordinate error bound is below this
    PGD_TOL: float = 1e-6

    API_HOST: str = "0.0.0.0"
    API_PORT: int = 8000


settings = Settings()


def configure_logging(level: str | None = None) -> None:
    """Install the root handler. Entry points call this, library modules don't."""
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(message)s",
    )
