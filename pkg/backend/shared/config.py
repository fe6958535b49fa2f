from typing import Optional, Tuple
from pydantic_settings import BaseSettings
from pydantic import ConfigDict


class BaseSettingsModel(BaseSettings):
    model_config = ConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="allow"
    )


class TransformSettings(BaseSettingsModel):
    LEVELS: int = 3
    # Blocks analysed per vectorised batch; bounds the (blocks, 117, 16) work array
    BLOCK_CHUNK: int = 4096

    model_config = ConfigDict(
        env_prefix="TETROLET_",
        case_sensitive=True,
        extra="allow"
    )


class EstimatorSettings(BaseSettingsModel):
    KURTOSIS_GUARD: float = 3e-3
    ALPHA_MAX: float = 1e3
    # Keeps every L2 distance integrable (squared density needs alpha > 1/4)
    ALPHA_FLOOR: float = 0.26

    model_config = ConfigDict(
        env_prefix="BKF_",
        case_sensitive=True,
        extra="allow"
    )


class QuantizerSettings(BaseSettingsModel):
    ALPHA_LOG_RANGE: Tuple[float, float] = (-0.6, 3.0)
    BETA_LOG_RANGE: Tuple[float, float] = (-4.0, 6.0)
    CODE_MAX: int = 255

    model_config = ConfigDict(
        env_prefix="RR_",
        case_sensitive=True,
        extra="allow"
    )


class QuadratureSettings(BaseSettingsModel):
    EPSABS: float = 1e-10
    EPSREL: float = 1e-10
    LIMIT: int = 500
    # Tail length in units of sqrt(beta / 2), before the shape-dependent margin
    TAIL_SCALES: float = 60.0

    model_config = ConfigDict(
        env_prefix="QUAD_",
        case_sensitive=True,
        extra="allow"
    )


class EvaluationSettings(BaseSettingsModel):
    MAX_PARALLEL_RECORDS: int = 4
    MIN_RECORDS: int = 4
    FIT_MAXITER: int = 10000
    FIT_TOLERANCE: float = 1e-10

    model_config = ConfigDict(
        env_prefix="EVAL_",
        case_sensitive=True,
        extra="allow"
    )


class LogSettings(BaseSettingsModel):
    LEVEL: str = "INFO"
    DIR: Optional[str] = None

    model_config = ConfigDict(
        env_prefix="LOG_",
        case_sensitive=True,
        extra="allow"
    )


class Settings(BaseSettingsModel):
    transform: TransformSettings = TransformSettings()
    estimator: EstimatorSettings = EstimatorSettings()
    quantizer: QuantizerSettings = QuantizerSettings()
    quadrature: QuadratureSettings = QuadratureSettings()
    evaluation: EvaluationSettings = EvaluationSettings()
    log: LogSettings = LogSettings()


# Create singleton instances
settings = Settings()
