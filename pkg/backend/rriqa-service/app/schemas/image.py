import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


class GrayImage(BaseModel):
    """Luminance image; pixels is a read-only (height, width) float64 array, nominal range [0, 255]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pixels: np.ndarray

    @field_validator("pixels", mode="before")
    @classmethod
    def _as_readonly_float(cls, value):
        arr = np.array(value, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"pixels must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        return arr

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def samples(self) -> np.ndarray:
        """Row-major flat view of the pixels."""
        return self.pixels.reshape(-1)

    @classmethod
    def from_samples(cls, width: int, height: int, samples) -> "GrayImage":
        flat = np.asarray(samples, dtype=np.float64)
        if flat.size != width * height:
            raise ValueError(f"expected {width * height} samples, got {flat.size}")
        return cls(pixels=flat.reshape(height, width))
