import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, field_validator

from shared.models import MeasureId


class LogisticParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float

    @field_validator("gamma1", "gamma2", "gamma3", "gamma4")
    @classmethod
    def _finite(cls, value):
        if not math.isfinite(value):
            raise ValueError("logistic parameters must be finite")
        return value

    @field_validator("gamma4")
    @classmethod
    def _nonzero_width(cls, value):
        if value == 0:
            raise ValueError("gamma4 must be non-zero")
        return value

    def as_tuple(self):
        return self.gamma1, self.gamma2, self.gamma3, self.gamma4


class DatasetRecord(BaseModel):
    subset_label: str
    ref_path: str
    dist_path: str
    dmos: float

    @field_validator("dmos")
    @classmethod
    def _finite_dmos(cls, value):
        if not math.isfinite(value):
            raise ValueError("dmos must be finite")
        return value


class PairScore(BaseModel):
    subset_label: str
    ref_path: str
    dist_path: str
    dmos: float
    score: float
    predicted_dmos: Optional[float] = None


class RecordFailure(BaseModel):
    subset_label: str
    dist_path: str
    error: str


class SubsetReport(BaseModel):
    subset: str
    n: int
    pearson: Optional[float] = None
    spearman: Optional[float] = None
    gamma: Optional[LogisticParams] = None
    skipped_reason: Optional[str] = None

    @property
    def skipped(self) -> bool:
        return self.skipped_reason is not None


class CorrelationReport(BaseModel):
    measure_id: MeasureId
    quantized: bool = True
    subsets: List[SubsetReport] = []
    scores: List[PairScore] = []
    failures: List[RecordFailure] = []

    def subset(self, label: str) -> SubsetReport:
        for entry in self.subsets:
            if entry.subset == label:
                return entry
        raise KeyError(label)
