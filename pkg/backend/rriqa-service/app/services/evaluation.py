"""Metric evaluation against subjective scores.

Raw scores are mapped to predicted DMOS with a four-parameter logistic;
accuracy is the Pearson coefficient of the mapped scores, monotonicity the
Spearman coefficient of the raw ones. Fits are done per subset.
"""
import asyncio
from collections import OrderedDict
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy import optimize, special, stats

from shared.models import MeasureId, Q5Pooling
from app.core.config import settings
from app.core.errors import (
    ConstantInput,
    DegenerateScores,
    EvaluationError,
    InvalidParams,
    MalformedManifest,
    RRIQAError,
    TooFewPoints,
)
from app.core.logger import Logger
from app.schemas.evaluation import (
    CorrelationReport,
    DatasetRecord,
    LogisticParams,
    PairScore,
    RecordFailure,
    SubsetReport,
)
from app.schemas.features import FeatureVector
from app.services import rr_features
from app.services.image_core import load_image

logger = Logger("evaluation").get_logger()

GammaLike = Union[LogisticParams, Sequence[float]]

MANIFEST_COLUMNS = ["subset_label", "ref_path", "dist_path", "dmos"]
FIT_RESTARTS = 5


def logistic(gamma: GammaLike, q):
    """(g1 - g2) / (1 + exp(-(q - g3) / g4)) + g2, elementwise over ``q``."""
    g1, g2, g3, g4 = gamma.as_tuple() if isinstance(gamma, LogisticParams) else tuple(gamma)
    if g4 == 0:
        raise InvalidParams("logistic width gamma4 must be non-zero")
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        values = (g1 - g2) * special.expit((np.asarray(q, dtype=np.float64) - g3) / g4) + g2
    return float(values) if np.ndim(values) == 0 else values


def _sse(gamma: np.ndarray, q: np.ndarray, dmos: np.ndarray) -> float:
    if gamma[3] == 0 or not np.all(np.isfinite(gamma)):
        return np.inf
    residual = dmos - logistic(gamma, q)
    return float(residual @ residual)


def _descend(x0, q: np.ndarray, dmos: np.ndarray, chain: Optional[list]) -> Tuple[np.ndarray, float]:
    """Nelder-Mead from ``x0``, restarted from the best vertex until the residual stops improving."""
    x = np.asarray(x0, dtype=np.float64)
    f = _sse(x, q, dmos)
    callback = None
    if chain is not None:
        def callback(xk):
            chain.append(_sse(xk, q, dmos))

    for restart in range(FIT_RESTARTS):
        result = optimize.minimize(
            _sse,
            x,
            args=(q, dmos),
            method="Nelder-Mead",
            callback=callback,
            options={"maxiter": settings.FIT_MAXITER, "xatol": 1e-12, "fatol": 1e-14},
        )
        previous = f
        if result.fun <= f:
            x, f = np.asarray(result.x, dtype=np.float64), float(result.fun)
        logger.debug(f"Logistic fit restart {restart}: sse {previous:.6g} -> {f:.6g} ({result.nit} iterations)")
        if previous - f <= settings.FIT_TOLERANCE * max(previous, np.finfo(float).tiny):
            break
    return x, f


def fit_logistic(pairs: Sequence[Tuple[float, float]], trace: Optional[List[List[float]]] = None) -> LogisticParams:
    """Least-squares logistic fit of (q, dmos) pairs.

    Three deterministic starting points are descended independently and the
    lowest residual wins. When ``trace`` is given, one list per starting point
    receives the best-vertex residual after every simplex iteration.
    """
    data = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
    if len(data) < 4:
        raise TooFewPoints(f"logistic fit needs at least 4 pairs, got {len(data)}")
    q, dmos = data[:, 0], data[:, 1]
    span = float(np.ptp(q))
    if span == 0:
        raise DegenerateScores("all objective scores are equal")

    best_x, best_f = None, np.inf
    for width in (span / 4.0, -span / 4.0, span / 10.0):
        x0 = (dmos.max(), dmos.min(), float(np.median(q)), width)
        chain = None
        if trace is not None:
            chain = []
            trace.append(chain)
        x, f = _descend(x0, q, dmos, chain)
        if f < best_f:
            best_x, best_f = x, f

    if best_x is None:
        raise DegenerateScores("logistic fit did not reach a finite residual")
    gamma = LogisticParams(gamma1=best_x[0], gamma2=best_x[1], gamma3=best_x[2], gamma4=best_x[3])
    logger.info(f"Fitted logistic {gamma.as_tuple()} on {len(q)} points (rms residual {np.sqrt(best_f / len(q)):.3g})")
    return gamma


def _paired(x, y) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"correlation needs two equal-length sequences, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise TooFewPoints(f"correlation needs at least 2 points, got {len(x)}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ConstantInput("correlation is undefined for a constant sequence")
    return x, y


def pearson(x, y) -> float:
    r, _ = stats.pearsonr(*_paired(x, y))
    return float(r)


def spearman(x, y) -> float:
    """Rank correlation with midranks for ties."""
    rho, _ = stats.spearmanr(*_paired(x, y))
    return float(rho)


def read_manifest(path: Union[str, Path]) -> List[DatasetRecord]:
    """Tab-separated ``subset, ref, dist, dmos`` lines; ``#`` lines are comments.

    Relative image paths resolve against the manifest's directory.
    """
    path = Path(path)
    rows = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != len(MANIFEST_COLUMNS):
            raise MalformedManifest(f"{path}:{number}: expected 4 tab-separated fields, got {len(fields)}")
        rows.append(fields)

    frame = pd.DataFrame(rows, columns=MANIFEST_COLUMNS)
    try:
        frame["dmos"] = pd.to_numeric(frame["dmos"])
    except ValueError as e:
        raise MalformedManifest(f"{path}: non-numeric dmos ({e})")

    base = path.parent
    records = []
    for row in frame.itertuples(index=False):
        try:
            records.append(DatasetRecord(
                subset_label=row.subset_label.strip(),
                ref_path=str(base / row.ref_path.strip()),
                dist_path=str(base / row.dist_path.strip()),
                dmos=row.dmos,
            ))
        except ValidationError as e:
            raise MalformedManifest(f"{path}: invalid record for {row.dist_path}: {e.errors()[0]['msg']}")
    logger.info(f"Read {len(records)} records from {path}")
    return records


def correlate_subset(label: str, scores: Sequence[float], dmos: Sequence[float]) -> Tuple[SubsetReport, Optional[np.ndarray]]:
    """Fit the logistic on one subset and report accuracy and monotonicity.

    Returns the report and the predicted DMOS, or ``None`` when the subset is skipped.
    """
    n = len(scores)
    if n < settings.MIN_RECORDS:
        reason = f"{n} usable records, need {settings.MIN_RECORDS}"
        logger.warning(f"Skipping subset {label}: {reason}")
        return SubsetReport(subset=label, n=n, skipped_reason=reason), None
    try:
        gamma = fit_logistic(list(zip(scores, dmos)))
        predicted = logistic(gamma, np.asarray(scores, dtype=np.float64))
        report = SubsetReport(
            subset=label,
            n=n,
            pearson=pearson(predicted, dmos),
            spearman=spearman(scores, dmos),
            gamma=gamma,
        )
    except EvaluationError as e:
        logger.warning(f"Skipping subset {label}: {e.name}: {e}")
        return SubsetReport(subset=label, n=n, skipped_reason=f"{e.name}: {e}"), None
    return report, predicted


class DatasetEvaluator:
    """Scores every manifest record with bounded parallelism, then correlates per subset."""

    def __init__(
        self,
        measure_id,
        quantized: bool = True,
        pooling: Q5Pooling = Q5Pooling.rss,
        max_parallel: Optional[int] = None,
    ):
        self.logger = Logger("DatasetEvaluator").get_logger()
        self.measure_id = MeasureId(measure_id)
        self.quantized = quantized
        self.pooling = Q5Pooling(pooling)
        self.max_parallel = max_parallel or settings.MAX_PARALLEL_RECORDS
        self._semaphore: Optional[asyncio.Semaphore] = None
        self._start_time = datetime.now(timezone.utc)

        self.logger.info(
            f"Initialized DatasetEvaluator with:"
            f"\n - Measure: {self.measure_id.value}"
            f"\n - Quantized reference features: {self.quantized}"
            f"\n - Max parallel records: {self.max_parallel}"
        )

    def _features(self, path: str) -> FeatureVector:
        fv = rr_features.extract(load_image(path))
        return rr_features.receiver_view(fv) if self.quantized else fv

    def _score_record(self, record: DatasetRecord, ref_fv: FeatureVector) -> float:
        dist_fv = self._features(record.dist_path)
        return rr_features.compare(ref_fv, dist_fv, self.measure_id, pooling=self.pooling).value

    async def _bounded(self, fn, *args):
        async with self._semaphore:
            return await asyncio.to_thread(fn, *args)

    async def _load_references(self, records: Sequence[DatasetRecord]) -> Dict[str, object]:
        paths = list(OrderedDict.fromkeys(r.ref_path for r in records))
        results = await asyncio.gather(
            *(self._bounded(self._features, p) for p in paths),
            return_exceptions=True,
        )
        return dict(zip(paths, results))

    async def _score(self, record: DatasetRecord, references: Dict[str, object]) -> float:
        ref = references[record.ref_path]
        if isinstance(ref, BaseException):
            raise ref
        return await self._bounded(self._score_record, record, ref)

    async def run(self, records: Sequence[DatasetRecord]) -> CorrelationReport:
        self._semaphore = asyncio.Semaphore(self.max_parallel)
        references = await self._load_references(records)
        outcomes = await asyncio.gather(
            *(self._score(r, references) for r in records),
            return_exceptions=True,
        )

        report = CorrelationReport(measure_id=self.measure_id, quantized=self.quantized)
        groups: Dict[str, List[PairScore]] = OrderedDict()
        for record, outcome in zip(records, outcomes):
            if isinstance(outcome, (RRIQAError, OSError)):
                self.logger.error(f"Record {record.dist_path} failed: {type(outcome).__name__}: {outcome}")
                report.failures.append(RecordFailure(
                    subset_label=record.subset_label,
                    dist_path=record.dist_path,
                    error=f"{type(outcome).__name__}: {outcome}",
                ))
                continue
            if isinstance(outcome, BaseException):
                raise outcome
            groups.setdefault(record.subset_label, []).append(PairScore(
                subset_label=record.subset_label,
                ref_path=record.ref_path,
                dist_path=record.dist_path,
                dmos=record.dmos,
                score=outcome,
            ))

        for label in OrderedDict.fromkeys(r.subset_label for r in records):
            pairs = groups.get(label, [])
            subset, predicted = correlate_subset(label, [p.score for p in pairs], [p.dmos for p in pairs])
            report.subsets.append(subset)
            for i, pair in enumerate(pairs):
                report.scores.append(
                    pair.model_copy(update={"predicted_dmos": float(predicted[i])}) if predicted is not None else pair
                )

        elapsed = (datetime.now(timezone.utc) - self._start_time).total_seconds()
        self.logger.info(
            f"Evaluated {len(records)} records in {elapsed:.1f}s: "
            f"{len(report.subsets)} subsets, {len(report.failures)} failures"
        )
        return report


def evaluate_dataset(
    manifest: Sequence[DatasetRecord],
    measure_id,
    raw_params: bool = False,
    pooling: Q5Pooling = Q5Pooling.rss,
    max_parallel: Optional[int] = None,
) -> CorrelationReport:
    evaluator = DatasetEvaluator(measure_id, quantized=not raw_params, pooling=pooling, max_parallel=max_parallel)
    return asyncio.run(evaluator.run(list(manifest)))
