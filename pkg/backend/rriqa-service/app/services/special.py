"""Special functions behind the BKF density and its closed-form L2 distance.

Gauss's hypergeometric function is summed from its series on [0, NEAR_ONE],
reached from negative arguments through Pfaff's transformation. Closer to 1
the series is still summed directly when c - a - b is large (after Euler's
transformation when it is large and negative); otherwise the 1 - z
connection formula is used, and scipy covers its logarithmic case.

The modified Bessel function of the second kind comes from scipy's
exponentially scaled ``kve``; where that overflows (large order, small
argument) the Debye uniform asymptotic expansion takes over in the log
domain.
"""
import math

import numpy as np
from scipy import special

from app.core.errors import DomainError, HypergeometricDivergence, NoConvergence
from app.core.logger import Logger

logger = Logger("special").get_logger()

SERIES_TOL = 1e-16
MAX_TERMS = 200000
NEAR_ONE = 0.9
# Distance of c - a - b from an integer below which the connection formula loses too many digits
INTEGER_GAP = 1e-3
# |c - a - b| from which the series near z = 1 is summed directly; smaller gaps take the connection formula
DIRECT_GAP = 3.0


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def _gamma_ratio(num, den) -> float:
    """prod(Gamma(num)) / prod(Gamma(den)) in log space; poles in ``den`` give 0."""
    if any(_is_nonpositive_integer(d) for d in den):
        return 0.0
    if any(_is_nonpositive_integer(n) for n in num):
        raise HypergeometricDivergence(f"Gamma pole in numerator arguments {num}")
    log_mag = sum(special.gammaln(n) for n in num) - sum(special.gammaln(d) for d in den)
    sign = np.prod([special.gammasgn(n) for n in num]) * np.prod([special.gammasgn(d) for d in den])
    return float(sign * math.exp(log_mag))


def _gauss_series(a: float, b: float, c: float, z: float, max_terms: int = MAX_TERMS) -> float:
    term = 1.0
    total = 1.0
    for n in range(max_terms):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        term *= ratio
        total += term
        if term == 0.0:
            return total
        if not math.isfinite(total):
            raise HypergeometricDivergence(f"series overflow for a={a}, b={b}, c={c}, z={z}")
        if abs(ratio) < 1.0 and abs(term) <= SERIES_TOL * abs(total):
            return total
    raise NoConvergence(f"Gauss series did not converge in {max_terms} terms (a={a}, b={b}, c={c}, z={z})")


def _hyp2f1_unit(a: float, b: float, c: float, z: float) -> float:
    """F(a, b; c; z) for 0 <= z < 1."""
    if z <= NEAR_ONE:
        return _gauss_series(a, b, c, z)
    s = c - a - b
    if s >= DIRECT_GAP:
        # terms decay like n^-(s+1) z^n
        return _gauss_series(a, b, c, z)
    if s <= -DIRECT_GAP:
        # Euler: F(a, b; c; z) = (1 - z)^(c-a-b) F(c - a, c - b; c; z)
        return (1.0 - z) ** s * _gauss_series(c - a, c - b, c, z)
    if abs(s - round(s)) < INTEGER_GAP:
        logger.debug(f"2F1 near z=1 with integer c-a-b ({s}); using scipy")
        value = float(special.hyp2f1(a, b, c, z))
        if not math.isfinite(value):
            raise NoConvergence(f"2F1({a}, {b}; {c}; {z}) has no finite value in the logarithmic case")
        return value
    w = 1.0 - z
    first = _gamma_ratio((c, s), (c - a, c - b)) * _gauss_series(a, b, 1.0 - s, w)
    second = (
        w ** s
        * _gamma_ratio((c, -s), (a, b))
        * _gauss_series(c - a, c - b, 1.0 + s, w)
    )
    return first + second


def hypergeometric_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1."""
    if not all(math.isfinite(v) for v in (a, b, c, z)):
        raise DomainError(f"non-finite argument to 2F1: a={a}, b={b}, c={c}, z={z}")
    if _is_nonpositive_integer(c):
        raise DomainError(f"c={c} is a non-positive integer")
    if z >= 1.0:
        raise DomainError(f"z={z} outside the supported region z < 1")
    if z == 0.0 or a == 0.0 or b == 0.0:
        return 1.0
    if z < 0.0:
        # Pfaff: F(a, b; c; z) = (1 - z)^(-a) F(a, c - b; c; z / (z - 1))
        w = z / (z - 1.0)
        value = (1.0 - z) ** (-a) * _hyp2f1_unit(a, c - b, c, w)
    else:
        value = _hyp2f1_unit(a, b, c, z)
    if not math.isfinite(value):
        raise HypergeometricDivergence(f"2F1({a}, {b}; {c}; {z}) is not finite")
    return value


def _debye_u(k: int, p):
    """Polynomials U_k(p) of the Debye expansion up to fourth order."""
    if k == 0:
        return np.ones_like(p)
    if k == 1:
        return (p - (5 * p**3) / 3.0) / 8.0
    if k == 2:
        return (p**2 * (81 - 462 * p**2 + 385 * p**4)) / 1152.0
    if k == 3:
        return (30375 * p**3 - 369603 * p**5 + 765765 * p**7 - 425425 * p**9) / 414720.0
    return (
        p**4 * (4465125 - 94121676 * p**2 + 349922430 * p**4 - 446185740 * p**6 + 185910725 * p**8)
    ) / 3.981312e7


def _log_kv_debye(nu: float, z: np.ndarray) -> np.ndarray:
    t = z / nu
    root = np.sqrt(1.0 + t * t)
    p = 1.0 / root
    eta = root + np.log(t / (1.0 + root))
    series = sum((-1) ** k * _debye_u(k, p) / nu**k for k in range(5))
    return 0.5 * np.log(np.pi / (2.0 * nu)) - nu * eta - 0.5 * np.log(root) + np.log(series)


def log_bessel_k(nu: float, z):
    """log K_nu(z) for z > 0; K_{-nu} = K_nu."""
    nu = abs(float(nu))
    z = np.asarray(z, dtype=np.float64)
    with np.errstate(over="ignore", divide="ignore"):
        out = np.log(special.kve(nu, z)) - z
    bad = ~np.isfinite(out) & (z > 0)
    if np.any(bad):
        if nu == 0.0:
            raise DomainError("K_0 overflow at tiny argument")
        out = np.where(bad, _log_kv_debye(nu, np.where(bad, z, 1.0)), out)
    return out if out.ndim else float(out)


def bessel_k(nu: float, z):
    return np.exp(log_bessel_k(nu, z))
