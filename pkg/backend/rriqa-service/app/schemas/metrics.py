import math
from typing import Tuple

from pydantic import BaseModel, ConfigDict, field_validator

from shared.models import MeasureId
from app.schemas.bkf import BkfParams

BandId = Tuple[int, int]


class BandPair(BaseModel):
    """Reference and distorted parameters of one subband, addressed by (level, detail_index)."""

    model_config = ConfigDict(frozen=True)

    ref: BkfParams
    dist: BkfParams
    band_id: BandId = (1, 1)

    @field_validator("band_id")
    @classmethod
    def _check_band(cls, value):
        level, detail = value
        if level < 1 or not 1 <= detail <= 3:
            raise ValueError(f"band id {value} out of range")
        return value


class QualityScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    measure_id: MeasureId

    @field_validator("value")
    @classmethod
    def _finite_non_negative(cls, value):
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"score must be finite and non-negative, got {value}")
        return value

    def __float__(self) -> float:
        return self.value
