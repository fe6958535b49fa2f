from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.schemas.bkf import BkfParams

BandId = Tuple[int, int]

BAND_COUNT = 9
PAYLOAD_BYTES = 2 * BAND_COUNT


class BandFeature(BaseModel):
    model_config = ConfigDict(frozen=True)

    band_id: BandId
    params: BkfParams


class FeatureVector(BaseModel):
    """Nine (band, BKF parameters) entries in (level, detail) lexicographic order."""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[BandFeature, ...]
    source_dims: Tuple[int, int]
    levels: int = 3

    @model_validator(mode="after")
    def _check_entries(self):
        expected = [(level, detail) for level in range(1, self.levels + 1) for detail in (1, 2, 3)]
        got = [entry.band_id for entry in self.entries]
        if got != expected:
            raise ValueError(f"band order {got} differs from {expected}")
        low, high = settings.ALPHA_FLOOR, settings.ALPHA_MAX
        outside = [a for a in self.alphas if not low <= a <= high]
        if outside:
            raise ValueError(f"shape parameters {outside} outside [{low}, {high}]")
        return self

    @property
    def alphas(self) -> List[float]:
        return [entry.params.alpha for entry in self.entries]

    @property
    def betas(self) -> List[float]:
        return [entry.params.beta for entry in self.entries]

    def scalars(self) -> List[float]:
        """The 18 transmitted numbers: nine shapes followed by nine scales."""
        return self.alphas + self.betas


class QuantizedFeatures(BaseModel):
    """Nine alpha codes then nine beta codes, one byte each."""

    model_config = ConfigDict(frozen=True)

    codes: Tuple[int, ...] = Field(min_length=PAYLOAD_BYTES, max_length=PAYLOAD_BYTES)
    source_dims: Tuple[int, int] = (0, 0)

    @field_validator("codes")
    @classmethod
    def _byte_range(cls, codes):
        if any(not 0 <= c <= 255 for c in codes):
            raise ValueError("codes must be unsigned 8-bit values")
        return codes

    @property
    def alpha_codes(self) -> Tuple[int, ...]:
        return self.codes[:BAND_COUNT]

    @property
    def beta_codes(self) -> Tuple[int, ...]:
        return self.codes[BAND_COUNT:]

    def payload(self) -> bytes:
        return bytes(self.codes)
