"""Bessel K Form density: evaluation, moment estimation, sampling and quadrature."""
import math
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy import integrate, special, stats

from app.core.config import settings
from app.core.errors import DegenerateSample, InvalidParams, TooFewSamples
from app.core.logger import Logger
from app.schemas.bkf import BkfParams, SampleStats
from app.services.special import log_bessel_k

logger = Logger("bkf").get_logger()

_LOG_SQRT_PI = 0.5 * math.log(math.pi)


def check_params(p: BkfParams) -> None:
    """Re-validate parameters that may have bypassed model validation."""
    a, b = p.alpha, p.beta
    if not (math.isfinite(a) and math.isfinite(b)) or a <= 0 or b <= 0 or a > settings.ALPHA_MAX:
        raise InvalidParams(f"invalid BKF parameters alpha={a}, beta={b}")


def sample_stats(x: Sequence[float]) -> SampleStats:
    """Population variance and kurtosis m4 / m2^2 (no bias correction)."""
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if arr.size < 4:
        raise TooFewSamples(f"need at least 4 samples, got {arr.size}")
    if np.ptp(arr) == 0:
        raise DegenerateSample(f"all {arr.size} samples equal {arr[0]}")
    variance = float(np.var(arr))
    if variance == 0.0:
        raise DegenerateSample("sample variance underflows to zero")
    kurtosis = float(stats.kurtosis(arr, fisher=False, bias=True))
    return SampleStats(n=int(arr.size), variance=variance, kurtosis=kurtosis)


def estimate(s: SampleStats) -> BkfParams:
    """alpha = 3 / (kurtosis - 3), beta = variance / alpha, with a near-Gaussian clamp."""
    if s.variance <= 0:
        raise DegenerateSample("zero variance leaves the BKF scale undefined")
    if s.kurtosis > 3.0 + settings.KURTOSIS_GUARD:
        alpha = min(3.0 / (s.kurtosis - 3.0), settings.ALPHA_MAX)
    else:
        alpha = settings.ALPHA_MAX
    return BkfParams.of(alpha, s.variance / alpha)


def fit(x: Sequence[float]) -> BkfParams:
    return estimate(sample_stats(x))


def pdf_at_zero(p: BkfParams) -> float:
    """Limit of the density at the origin; +inf when alpha <= 1/2."""
    if p.alpha <= 0.5:
        return math.inf
    log_value = (
        special.gammaln(p.alpha - 0.5)
        - special.gammaln(p.alpha)
        - math.log(2.0)
        - _LOG_SQRT_PI
        - 0.5 * math.log(p.beta / 2.0)
    )
    return math.exp(log_value)


def pdf(x, p: BkfParams):
    """BKF density f(x; alpha, beta).

    At x = 0 the density is finite only for alpha > 1/2; for alpha <= 1/2 the
    value returned there is +inf and quadrature must treat the origin as an
    improper endpoint.
    """
    check_params(p)
    xs = np.abs(np.asarray(x, dtype=np.float64))
    out = np.empty_like(xs)
    zero = xs == 0.0
    nz = ~zero
    if np.any(nz):
        ax = xs[nz]
        nu = p.alpha - 0.5
        log_f = (
            -_LOG_SQRT_PI
            - special.gammaln(p.alpha)
            + (-p.alpha / 2.0 - 0.25) * math.log(p.beta / 2.0)
            + nu * np.log(ax / 2.0)
            + log_bessel_k(nu, math.sqrt(2.0 / p.beta) * ax)
        )
        out[nz] = np.exp(log_f)
    if np.any(zero):
        out[zero] = pdf_at_zero(p)
    return out if out.ndim else float(out)


def bkf_sample(p: BkfParams, n: int, seed: int) -> np.ndarray:
    """Gamma scale mixture of Gaussians: sqrt(beta * g) * z, g ~ Gamma(alpha, 1)."""
    check_params(p)
    if n < 1:
        raise ValueError(f"sample count must be positive, got {n}")
    rng = np.random.default_rng(seed)
    g = rng.gamma(shape=p.alpha, scale=1.0, size=n)
    z = rng.standard_normal(n)
    return np.sqrt(p.beta * g) * z


def tail_length(*params: BkfParams) -> float:
    """Half-width of a symmetric interval holding all but a negligible share of every density's mass."""
    alpha = max(p.alpha for p in params)
    scale = max(p.scale for p in params)
    return scale * (settings.QUAD_TAIL_SCALES + alpha + 10.0 * math.sqrt(alpha))


def integrate_half_line(
    g: Callable[[float], float],
    upper: float,
    split: float,
    origin_exponent: float,
) -> float:
    """Integral of ``g`` over (0, upper].

    ``origin_exponent`` is the power-law behaviour of g near 0 (> -1). The first
    piece, (0, split], is integrated after the substitution x = u^m which
    removes the singularity; the rest is split geometrically.
    """
    if origin_exponent <= -1.0:
        raise ValueError(f"integrand ~ x^{origin_exponent} is not integrable at 0")
    m = 1 if origin_exponent > 0 else max(2, math.ceil(1.0 / (origin_exponent + 1.0)))
    opts = dict(epsabs=settings.QUAD_EPSABS, epsrel=settings.QUAD_EPSREL, limit=settings.QUAD_LIMIT)

    def substituted(u: float) -> float:
        x = u ** m
        return g(x) * m * u ** (m - 1) if x > 0 else 0.0

    total, _ = integrate.quad(substituted, 0.0, split ** (1.0 / m), **opts)
    lo = split
    while lo < upper:
        hi = min(4.0 * lo, upper)
        piece, _ = integrate.quad(g, lo, hi, **opts)
        total += piece
        lo = hi
    return total


def total_mass(p: BkfParams) -> float:
    """Numerical integral of the density over the real line."""
    check_params(p)
    half = integrate_half_line(
        lambda x: float(pdf(x, p)),
        upper=tail_length(p),
        split=p.scale,
        origin_exponent=min(2.0 * p.alpha - 1.0, 0.0),
    )
    return 2.0 * half


def cdf(grid: Sequence[float], p: BkfParams) -> np.ndarray:
    """Model CDF at each grid point, integrating the density between sorted |x| values."""
    check_params(p)
    xs = np.asarray(grid, dtype=np.float64)
    ax = np.unique(np.abs(xs))
    opts = dict(epsabs=settings.QUAD_EPSABS, epsrel=settings.QUAD_EPSREL, limit=settings.QUAD_LIMIT)
    f = lambda t: float(pdf(t, p))
    exponent = min(2.0 * p.alpha - 1.0, 0.0)
    half_mass = {}
    running = 0.0
    prev = 0.0
    for t in ax:
        if t == 0.0:
            half_mass[t] = 0.0
            continue
        if prev == 0.0:
            running = integrate_half_line(f, upper=t, split=min(t, p.scale), origin_exponent=exponent)
        else:
            piece, _ = integrate.quad(f, prev, t, **opts)
            running += piece
        half_mass[t] = running
        prev = t
    lookup = np.array([half_mass[abs(v)] for v in xs.reshape(-1)]).reshape(xs.shape)
    return 0.5 + np.sign(xs) * lookup


def histogram_expectation(edges: Sequence[float], p: BkfParams, n: int) -> np.ndarray:
    """Expected bin counts of ``n`` draws from the model over the given bin edges."""
    probs = np.diff(cdf(edges, p))
    return n * probs


def moments(p: BkfParams) -> Tuple[float, float]:
    """(variance, kurtosis) implied by the parameters."""
    return p.alpha * p.beta, 3.0 + 3.0 / p.alpha
