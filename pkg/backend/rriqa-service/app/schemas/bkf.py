import math

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.core.errors import InvalidParams

ALPHA_LIMIT = 1e3


class BkfParams(BaseModel):
    """Shape ``alpha`` and scale ``beta`` of a Bessel K Form density.

    The density has variance alpha * beta and kurtosis 3 + 3 / alpha.
    """

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0, le=ALPHA_LIMIT, allow_inf_nan=False)
    beta: float = Field(gt=0, allow_inf_nan=False)

    @classmethod
    def of(cls, alpha: float, beta: float) -> "BkfParams":
        try:
            return cls(alpha=alpha, beta=beta)
        except ValidationError as e:
            raise InvalidParams(f"invalid BKF parameters alpha={alpha}, beta={beta}: {e.errors()[0]['msg']}")

    @property
    def variance(self) -> float:
        return self.alpha * self.beta

    @property
    def scale(self) -> float:
        """sqrt(beta / 2), the exponential tail length of the density."""
        return math.sqrt(self.beta / 2.0)


class SampleStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=4)
    variance: float = Field(ge=0, allow_inf_nan=False)
    kurtosis: float

    @field_validator("kurtosis")
    @classmethod
    def _kurtosis_floor(cls, value, info):
        # m4 / m2^2 >= 1 for any non-degenerate sample; allow rounding slack
        if info.data.get("variance", 0) > 0 and value < 1 - 1e-9:
            raise ValueError(f"kurtosis {value} below 1")
        return value
