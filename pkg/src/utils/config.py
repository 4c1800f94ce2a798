import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, Field

REPO_ROOT = Path(__file__).resolve().parents[2]


def load_config() -> None:
    load_dotenv()


def get_env(name: str, default: str | None = None) -> str | None:
    return os.getenv(name, default)


class Settings(BaseModel):
    threads: int = Field(1, ge=1)
    log_level: str = "WARNING"
    eq_tol: float = Field(1e-8, gt=0)
    inf_tol: float = Field(1e-12, gt=0)
    stab_tol: float = Field(1e-6, gt=0)
    data_dir: Path = REPO_ROOT / "data"

    @classmethod
    def from_env(cls) -> "Settings":
        values = {
            "threads": get_env("MLSTAB_THREADS"),
            "log_level": get_env("MLSTAB_LOG_LEVEL"),
            "eq_tol": get_env("MLSTAB_EQ_TOL"),
            "inf_tol": get_env("MLSTAB_INF_TOL"),
            "stab_tol": get_env("MLSTAB_STAB_TOL"),
            "data_dir": get_env("MLSTAB_DATA_DIR"),
        }
        return cls.model_validate({k: v for k, v in values.items() if v is not None})


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    load_config()
    return Settings.from_env()
