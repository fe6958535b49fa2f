from pydantic_settings import BaseSettings
from typing import Optional, List, ClassVar, Tuple
from pydantic import ConfigDict
from shared.config import settings as shared_settings


class Settings(BaseSettings):
    PROJECT_NAME: str = "Tetrolet RR Quality Service"

    # Transform settings from shared config
    TETROLET_LEVELS: int = shared_settings.transform.LEVELS
    BLOCK_CHUNK: int = shared_settings.transform.BLOCK_CHUNK

    # Estimator settings
    KURTOSIS_GUARD: float = shared_settings.estimator.KURTOSIS_GUARD
    ALPHA_MAX: float = shared_settings.estimator.ALPHA_MAX
    ALPHA_FLOOR: float = shared_settings.estimator.ALPHA_FLOOR

    # Quantizer settings
    ALPHA_LOG_RANGE: Tuple[float, float] = shared_settings.quantizer.ALPHA_LOG_RANGE
    BETA_LOG_RANGE: Tuple[float, float] = shared_settings.quantizer.BETA_LOG_RANGE
    CODE_MAX: int = shared_settings.quantizer.CODE_MAX

    # Container format
    CONTAINER_MAGIC: ClassVar[bytes] = b"TQRR"
    CONTAINER_VERSION: ClassVar[int] = 1

    # Quadrature settings
    QUAD_EPSABS: float = shared_settings.quadrature.EPSABS
    QUAD_EPSREL: float = shared_settings.quadrature.EPSREL
    QUAD_LIMIT: int = shared_settings.quadrature.LIMIT
    QUAD_TAIL_SCALES: float = shared_settings.quadrature.TAIL_SCALES

    # Evaluation settings
    MAX_PARALLEL_RECORDS: int = shared_settings.evaluation.MAX_PARALLEL_RECORDS
    MIN_RECORDS: int = shared_settings.evaluation.MIN_RECORDS
    FIT_MAXITER: int = shared_settings.evaluation.FIT_MAXITER
    FIT_TOLERANCE: float = shared_settings.evaluation.FIT_TOLERANCE

    # Export Settings
    VALID_EXPORT_TYPES: ClassVar[List[str]] = ["csv", "excel", "json", "feather"]
    DEFAULT_EXPORT_TYPE: str = "csv"
    DEFAULT_EXPORT_LOCATION: str = "./exports"

    # Logging
    LOG_LEVEL: str = shared_settings.log.LEVEL
    LOG_DIR: Optional[str] = shared_settings.log.DIR

    model_config = ConfigDict(
        case_sensitive=True,
        env_file=".env",
        extra="allow"
    )


settings = Settings()
