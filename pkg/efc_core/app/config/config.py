import os
from functools import lru_cache


class Settings:
    def __init__(self) -> None:
        self.log_level: str = os.getenv("EFC_LOG_LEVEL", "INFO").upper()
        self.bench_iterations: int = int(os.getenv("EFC_BENCH_ITERATIONS", "100000"))


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
