"""Reduced-reference feature codec.

Sender: crop, three-level tetrolet decomposition, one BKF fit per detail
subband, 8-bit log-domain quantisation of the 18 parameters. Receiver:
dequantise and compare against the distorted image's features.

Container layout (24 bytes): b"TQRR", version (1 byte), level count
(1 byte), 9 alpha codes, 9 beta codes.
"""
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from shared.models import MeasureId, Q5Pooling
from app.core.config import settings
from app.core.errors import (
    BadMagic,
    DegenerateSample,
    DegenerateSubband,
    MalformedPayload,
    UnsupportedVersion,
)
from app.core.logger import Logger
from app.schemas.bkf import BkfParams
from app.schemas.features import BAND_COUNT, PAYLOAD_BYTES, BandFeature, FeatureVector, QuantizedFeatures
from app.schemas.image import GrayImage
from app.schemas.metrics import BandPair, QualityScore
from app.services import bkf, metrics, tetrolet
from app.services.image_core import crop_to_multiple

logger = Logger("rr_features").get_logger()

HEADER_BYTES = 6
CONTAINER_LEVELS = 3
CONTAINER_BYTES = HEADER_BYTES + PAYLOAD_BYTES


def _fit_band(coeffs: np.ndarray, band_id: Tuple[int, int]) -> BkfParams:
    try:
        stats = bkf.sample_stats(coeffs)
    except DegenerateSample:
        raise DegenerateSubband(band_id)
    params = bkf.estimate(stats)
    alpha = min(max(params.alpha, settings.ALPHA_FLOOR), settings.ALPHA_MAX)
    if alpha != params.alpha:
        logger.debug(f"Band {band_id}: alpha {params.alpha:.4g} clamped to {alpha:.4g}")
    # beta follows the clamped shape so that alpha * beta stays the subband variance
    return BkfParams.of(alpha, stats.variance / alpha)


def extract(img: GrayImage, levels: Optional[int] = None) -> FeatureVector:
    levels = levels or settings.TETROLET_LEVELS
    cropped = crop_to_multiple(img, 2 ** (levels + 1))
    dec = tetrolet.forward(cropped, levels)
    entries = []
    for band_id in tetrolet.band_ids(levels):
        coeffs = tetrolet.subband(dec, *band_id)
        entries.append(BandFeature(band_id=band_id, params=_fit_band(coeffs, band_id)))
    fv = FeatureVector(entries=tuple(entries), source_dims=(cropped.width, cropped.height), levels=levels)
    logger.info(
        f"Extracted {len(entries)} subband models from {cropped.width}x{cropped.height} "
        f"(cropped from {img.width}x{img.height})"
    )
    return fv


def _encode(values: List[float], log_range: Tuple[float, float]) -> List[int]:
    lo, hi = log_range
    logv = np.clip(np.log10(np.asarray(values, dtype=np.float64)), lo, hi)
    codes = np.floor((logv - lo) / (hi - lo) * settings.CODE_MAX + 0.5)
    return [int(c) for c in codes]


def _decode(codes, log_range: Tuple[float, float]) -> np.ndarray:
    lo, hi = log_range
    return 10.0 ** (lo + np.asarray(codes, dtype=np.float64) / settings.CODE_MAX * (hi - lo))


def quantize(fv: FeatureVector) -> QuantizedFeatures:
    if len(fv.entries) != BAND_COUNT:
        raise MalformedPayload(f"quantised payload carries {BAND_COUNT} bands, got {len(fv.entries)}")
    codes = _encode(fv.alphas, settings.ALPHA_LOG_RANGE) + _encode(fv.betas, settings.BETA_LOG_RANGE)
    return QuantizedFeatures(codes=tuple(codes), source_dims=fv.source_dims)


def from_payload(payload: bytes) -> QuantizedFeatures:
    try:
        return QuantizedFeatures(codes=tuple(payload))
    except ValidationError:
        raise MalformedPayload(f"feature payload must be {PAYLOAD_BYTES} bytes, got {len(payload)}")


def dequantize(qf: Union[QuantizedFeatures, bytes]) -> FeatureVector:
    if isinstance(qf, (bytes, bytearray)):
        qf = from_payload(bytes(qf))
    # the code grid does not land on the extraction floor; decoded shapes keep its range
    alphas = np.clip(_decode(qf.alpha_codes, settings.ALPHA_LOG_RANGE), settings.ALPHA_FLOOR, settings.ALPHA_MAX)
    betas = _decode(qf.beta_codes, settings.BETA_LOG_RANGE)
    entries = tuple(
        BandFeature(band_id=band_id, params=BkfParams.of(float(a), float(b)))
        for band_id, a, b in zip(tetrolet.band_ids(CONTAINER_LEVELS), alphas, betas)
    )
    return FeatureVector(entries=entries, source_dims=qf.source_dims, levels=CONTAINER_LEVELS)


def receiver_view(fv: FeatureVector) -> FeatureVector:
    """The parameters as the receiver sees them after the 144-bit channel."""
    return dequantize(quantize(fv))


def serialize(qf: QuantizedFeatures, levels: int = CONTAINER_LEVELS) -> bytes:
    if levels != CONTAINER_LEVELS:
        raise MalformedPayload(f"the container format carries {CONTAINER_LEVELS} levels, got {levels}")
    header = settings.CONTAINER_MAGIC + bytes([settings.CONTAINER_VERSION, levels])
    return header + qf.payload()


def deserialize(data: bytes) -> QuantizedFeatures:
    if len(data) < 4:
        raise MalformedPayload(f"container too short ({len(data)} bytes)")
    if data[:4] != settings.CONTAINER_MAGIC:
        raise BadMagic(f"expected magic {settings.CONTAINER_MAGIC!r}, got {data[:4]!r}")
    if len(data) < HEADER_BYTES:
        raise MalformedPayload(f"container header truncated ({len(data)} bytes)")
    if data[4] != settings.CONTAINER_VERSION:
        raise UnsupportedVersion(f"container version {data[4]} (supported: {settings.CONTAINER_VERSION})")
    if data[5] != CONTAINER_LEVELS:
        raise MalformedPayload(f"container declares {data[5]} levels; the payload format carries {CONTAINER_LEVELS}")
    if len(data) != CONTAINER_BYTES:
        raise MalformedPayload(f"container must be {CONTAINER_BYTES} bytes, got {len(data)}")
    return from_payload(data[HEADER_BYTES:])


def save_features(qf: QuantizedFeatures, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize(qf))
    logger.info(f"Wrote {CONTAINER_BYTES}-byte feature container to {path}")
    return path


def load_features(path: Union[str, Path]) -> QuantizedFeatures:
    return deserialize(Path(path).read_bytes())


def band_pairs(ref: FeatureVector, dist: FeatureVector) -> List[BandPair]:
    if [e.band_id for e in ref.entries] != [e.band_id for e in dist.entries]:
        raise MalformedPayload("reference and distorted feature vectors address different bands")
    return [
        BandPair(ref=r.params, dist=d.params, band_id=r.band_id)
        for r, d in zip(ref.entries, dist.entries)
    ]


def compare(ref: FeatureVector, dist: FeatureVector, measure_id, pooling: Q5Pooling = Q5Pooling.rss) -> QualityScore:
    return metrics.score(measure_id, band_pairs(ref, dist), pooling=pooling)


def feature_bits(measure_id) -> int:
    """Side information a measure needs: shapes only or scales only take 72 bits, q5 takes both."""
    return 144 if MeasureId(measure_id) is MeasureId.q5 else 8 * BAND_COUNT
