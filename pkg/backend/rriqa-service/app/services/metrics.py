"""Distortion measures between reference and distorted BKF subband parameters.

q1/q2 sum absolute parameter differences, q3/q4 sum the geometric mean of the
absolute and reference-relative deviations, and q5 pools per-band L2
distances between the fitted densities.

The closed-form L2 distance comes from the characteristic function
(1 + beta w^2 / 2)^(-alpha) and Parseval's identity:

    d^2 = [k(2 a1) / sqrt(b1) + k(2 a2) / sqrt(b2)
           - 2 k(a1 + a2) / sqrt(b1) * (b1 / b2)^a2 * F] / sqrt(2 pi)

with k(a) = Gamma(a - 1/2) / Gamma(a) and
F = 2F1(a1 + a2 - 1/2, a2; a1 + a2; 1 - b1 / b2). The often-quoted variant
with Gamma(1/2) / (2 sqrt(2 pi)) in front and Gamma(a + 1/2) / Gamma(a) in
place of k(a) does not integrate the squared density correctly (already at
a = 1, the Laplace case) and is not used.
"""
import math
from typing import Callable, Dict, Iterable, List, Sequence

from scipy import special

from shared.models import MeasureId, Q5Pooling
from app.core.errors import (
    DomainError,
    EmptyBands,
    HypergeometricDivergence,
    InvalidParams,
    NoConvergence,
    NonIntegrable,
)
from app.core.logger import Logger
from app.schemas.bkf import BkfParams
from app.schemas.metrics import BandPair, QualityScore
from app.services import bkf
from app.services.special import hypergeometric_2f1

logger = Logger("metrics").get_logger()

L2_ALPHA_MIN = 0.25
# d^2 below this fraction of the self-overlaps has lost its digits to cancellation
CANCELLATION_RATIO = 1e-8
# slack on the Cauchy-Schwarz bound for the overlap integral
OVERLAP_SLACK = 1e-9


def _bands(bands: Iterable[BandPair]) -> List[BandPair]:
    bands = list(bands)
    if not bands:
        raise EmptyBands("at least one band pair is required")
    return bands


def q1(bands: Sequence[BandPair]) -> QualityScore:
    value = sum(abs(b.ref.alpha - b.dist.alpha) for b in _bands(bands))
    return QualityScore(value=value, measure_id=MeasureId.q1)


def q2(bands: Sequence[BandPair]) -> QualityScore:
    value = sum(abs(b.ref.beta - b.dist.beta) for b in _bands(bands))
    return QualityScore(value=value, measure_id=MeasureId.q2)


def _geometric_deviation(ref: float, dist: float) -> float:
    if ref <= 0:
        raise InvalidParams(f"reference parameter must be positive, got {ref}")
    absolute = abs(ref - dist)
    relative = absolute / ref
    return math.sqrt(absolute * relative)


def q3(bands: Sequence[BandPair]) -> QualityScore:
    value = sum(_geometric_deviation(b.ref.alpha, b.dist.alpha) for b in _bands(bands))
    return QualityScore(value=value, measure_id=MeasureId.q3)


def q4(bands: Sequence[BandPair]) -> QualityScore:
    value = sum(_geometric_deviation(b.ref.beta, b.dist.beta) for b in _bands(bands))
    return QualityScore(value=value, measure_id=MeasureId.q4)


def _check_integrable(p1: BkfParams, p2: BkfParams) -> None:
    bkf.check_params(p1)
    bkf.check_params(p2)
    if min(p1.alpha, p2.alpha) <= L2_ALPHA_MIN:
        raise NonIntegrable(
            f"squared BKF density is not integrable for alpha <= 1/4 "
            f"(alpha1={p1.alpha}, alpha2={p2.alpha})"
        )


def l2_distance_quadrature(p1: BkfParams, p2: BkfParams) -> float:
    """L2 distance by adaptive quadrature of (f1 - f2)^2; the reference oracle."""
    _check_integrable(p1, p2)
    if p1 == p2:
        return 0.0
    alpha_min = min(p1.alpha, p2.alpha)

    def squared_difference(x: float) -> float:
        return (bkf.pdf(x, p1) - bkf.pdf(x, p2)) ** 2

    half = bkf.integrate_half_line(
        squared_difference,
        upper=bkf.tail_length(p1, p2),
        split=min(p1.scale, p2.scale),
        origin_exponent=min(4.0 * alpha_min - 2.0, 0.0),
    )
    return math.sqrt(max(2.0 * half, 0.0))


def _kappa(a: float) -> float:
    return math.exp(special.gammaln(a - 0.5) - special.gammaln(a))


def printed_hypergeometric_factor(p1: BkfParams, p2: BkfParams) -> float:
    """(b1 / b2)^a2 * 2F1(a1 + a2 - 1/2, a2; a1 + a2; 1 - b1 / b2), the cross-term factor as usually written."""
    a1, b1, a2, b2 = p1.alpha, p1.beta, p2.alpha, p2.beta
    return (b1 / b2) ** a2 * hypergeometric_2f1(a1 + a2 - 0.5, a2, a1 + a2, 1.0 - b1 / b2)


def overlap_integral(p1: BkfParams, p2: BkfParams) -> float:
    """Integral of f1 * f2 over the real line."""
    # Label so that b1 >= b2: the Pfaff-equivalent 2F1(a2, 1/2; a1 + a2; 1 - b2/b1)
    # has its argument in [0, 1) and stays bounded for large shapes.
    if p1.beta < p2.beta:
        p1, p2 = p2, p1
    a1, b1, a2, b2 = p1.alpha, p1.beta, p2.alpha, p2.beta
    factor = hypergeometric_2f1(a2, 0.5, a1 + a2, 1.0 - b2 / b1)
    return _kappa(a1 + a2) / math.sqrt(2.0 * math.pi * b1) * factor


def self_overlap(p: BkfParams) -> float:
    """Integral of f^2 over the real line."""
    return _kappa(2.0 * p.alpha) / math.sqrt(2.0 * math.pi * p.beta)


def l2_distance_closed(p1: BkfParams, p2: BkfParams) -> float:
    """Closed-form L2 distance; nearly equal parameters are handed to quadrature."""
    _check_integrable(p1, p2)
    if p1 == p2:
        return 0.0
    s1, s2 = self_overlap(p1), self_overlap(p2)
    cross = overlap_integral(p1, p2)
    if not math.isfinite(cross) or not 0.0 < cross <= math.sqrt(s1 * s2) * (1.0 + OVERLAP_SLACK):
        raise HypergeometricDivergence(
            f"overlap integral {cross} outside (0, {math.sqrt(s1 * s2)}] for {p1}, {p2}"
        )
    d2 = s1 + s2 - 2.0 * cross
    if d2 < CANCELLATION_RATIO * (s1 + s2):
        logger.debug(f"Closed-form L2 distance cancels for {p1}, {p2} (d^2={d2:.3g}); using quadrature")
        return l2_distance_quadrature(p1, p2)
    return math.sqrt(d2)


def l2_distance(p1: BkfParams, p2: BkfParams) -> float:
    """Closed form, falling back to quadrature when the hypergeometric evaluation fails."""
    try:
        return l2_distance_closed(p1, p2)
    except (HypergeometricDivergence, NoConvergence, DomainError) as e:
        logger.warning(f"Closed-form L2 distance failed ({type(e).__name__}: {e}); using quadrature")
        return l2_distance_quadrature(p1, p2)


def q5(bands: Sequence[BandPair], pooling: Q5Pooling = Q5Pooling.rss) -> QualityScore:
    distances = [l2_distance(b.ref, b.dist) for b in _bands(bands)]
    if Q5Pooling(pooling) is Q5Pooling.sum:
        value = sum(distances)
    else:
        value = math.sqrt(sum(d * d for d in distances))
    return QualityScore(value=value, measure_id=MeasureId.q5)


MEASURES: Dict[MeasureId, Callable[[Sequence[BandPair]], QualityScore]] = {
    MeasureId.q1: q1,
    MeasureId.q2: q2,
    MeasureId.q3: q3,
    MeasureId.q4: q4,
    MeasureId.q5: q5,
}


def score(measure_id, bands: Sequence[BandPair], pooling: Q5Pooling = Q5Pooling.rss) -> QualityScore:
    """Dispatch to one measure; ``pooling`` only affects q5."""
    measure_id = MeasureId(measure_id)
    if measure_id is MeasureId.q5:
        return q5(bands, pooling=pooling)
    return MEASURES[measure_id](bands)
