from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    APP_NAME: str = "Quadratic Escape Engine"
    VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    # Emit a progress line every LOG_EVERY processed segments
    LOG_EVERY: int = 10000

    # Worker pool: queue items handed to each worker per round
    BATCH_PER_WORKER: int = 64

    # Sentry DSN
    SENTRY_DSN: str = ""

    class Config:
        env_file = ".env"


settings = Settings()
