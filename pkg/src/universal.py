"""
Universal densities of real zeros in the local scaling regime.

Near t = 1 the zeros are resolved on the scale v = n(1 - t). As n grows the
density in v approaches an n-independent profile p_alpha(v) that depends on
the coefficient mean only through alpha = lim n mu_n^2. All densities here are
normalized by 1/(2 pi), the value fixed by the exact p_n(1) and by the global
tail 1/(pi |1 - t^2|).
"""

import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from errors import DomainViolationError
from kac_analytic import (QUAD_LIMIT, KacParams, adaptive_quad, damped_psi, global_moments,
                          kac_density_mean, sinh_kernel)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

NORMALIZATION = 1.0 / (2.0 * math.pi)
ALPHA_CRITICAL = 6.0 / 5.0
SERIES_RADIUS = 1e-2
MOMENT_SERIES_RADIUS = 0.5
MOMENT_SERIES_TERMS = 40
PEAK_SCAN_STEP = 1e-3
PEAK_TOL = 1e-8

# J(v) = 1/2 - v^4/1440 + v^6/30240 + O(v^8)
_J_SERIES = (0.5, 0.0, -1.0 / 1440.0, 1.0 / 30240.0)
# M(v) = v^2/12 - 7 v^4/720 + 11 v^6/12096 + O(v^8)
_M_SERIES = (0.0, 1.0 / 12.0, -7.0 / 720.0, 11.0 / 12096.0)


@dataclass(frozen=True)
class ScaledMoments:
    """
    Variances and covariance of the scaled value f/sqrt(n) and slope
    f'/n^{3/2} at t = 1 - v/n, at finite n (A, B, C) and in the limit
    n -> infinity (Ainf, Binf, Cinf).
    """

    n: int
    v: float
    A: float
    B: float
    C: float
    Ainf: float
    Binf: float
    Cinf: float


@dataclass(frozen=True)
class ScaledDensityParams:
    """Scaled squared mean alpha = lim n mu_n^2."""

    alpha: float
    normalization: float = NORMALIZATION

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a finite nonnegative number, got {self.alpha}")


class Peak(NamedTuple):
    v: float
    p: float


def _exponential_moment(k: int, v: float) -> float:
    """int_0^1 s^k exp(-2 v s) ds."""
    if abs(v) < MOMENT_SERIES_RADIUS:
        term, total = 1.0, 0.0
        for m in range(MOMENT_SERIES_TERMS):
            total += term / (m + k + 1)
            term *= -2.0 * v / (m + 1)
        return total
    a = 2.0 * v
    decay = math.exp(-a)
    partial, term = 0.0, 1.0
    for i in range(k + 1):
        partial += term
        term *= a / (i + 1)
    return math.factorial(k) * (1.0 - decay * partial) / a ** (k + 1)


def scaled_moments(n: int, v: float) -> ScaledMoments:
    """Finite-n and limiting scaled moments at v; requires |v| < n so that t > 0."""
    if not abs(v) < n:
        raise DomainViolationError(f"scaled_moments needs |v| < n, got v={v}, n={n}")
    m = global_moments(KacParams(n), 1.0 - v / n)
    return ScaledMoments(
        n=n, v=v,
        A=m.A / n, B=m.B / n ** 2, C=m.C / n ** 3,
        Ainf=_exponential_moment(0, v), Binf=_exponential_moment(1, v), Cinf=_exponential_moment(2, v),
    )


def density_from_moments(moments: ScaledMoments, limit: bool = False) -> float:
    """Kac density in v from scaled moments, sqrt(AC - B^2) / (pi A)."""
    if limit:
        a, b, c = moments.Ainf, moments.Binf, moments.Cinf
    else:
        a, b, c = moments.A, moments.B, moments.C
    return math.sqrt(max(a * c - b * b, 0.0)) / (math.pi * a)


def density_zero_mean(v: ArrayLike) -> ArrayLike:
    """p_0(v) = sqrt(1/v^2 - 1/sinh^2 v) / (2 pi); 1/(2 pi sqrt 3) at v = 0."""
    return NORMALIZATION * sinh_kernel(v)


def _series_or_direct(v: ArrayLike, series, direct) -> ArrayLike:
    v = np.abs(np.asarray(v, dtype=float))
    small = v < SERIES_RADIUS
    safe = np.where(small, 1.0, v)
    out = np.where(small, np.polynomial.polynomial.polyval(v * v, series), direct(safe))
    return float(out) if out.ndim == 0 else out


def _j_direct(v: np.ndarray) -> np.ndarray:
    h = v / 2.0
    with np.errstate(over='ignore'):
        return 4.0 / (v * v / np.sinh(h) ** 2 + 2.0 * v / np.tanh(h))


def J_kernel(v: ArrayLike) -> ArrayLike:
    """
    J(v) = sinh^2(v/2)/(v/2)^2 / (1 + sinh v / v), even, J(0) = 1/2.

    alpha J(v) is half the large-n limit of Sigma1 + Sigma2 at t = 1 - v/n.
    """
    return _series_or_direct(v, _J_SERIES, _j_direct)


def M_kernel(v: ArrayLike) -> ArrayLike:
    """
    M(v) = (sinh v/v)/cosh^2(v/2) * (sinh v/v - 1)/(1 + sinh v/v) >= 0, M(0) = 0.

    alpha M(v) is the large-n limit of Sigma1. Evaluated as
    2 J(v) - (2/v) tanh(v/2).
    """
    return _series_or_direct(v, _M_SERIES, lambda w: 2.0 * _j_direct(w) - 2.0 * np.tanh(w / 2.0) / w)


def density_alpha(alpha: float, v: ArrayLike) -> ArrayLike:
    """
    Universal density p_alpha(v) = sqrt(1/v^2 - 1/sinh^2 v) exp(-alpha J) Psi(alpha M) / (2 pi).

    Uses exp(-alpha J) Psi(alpha M) = exp(-alpha (J - M/2)) * damped_psi(alpha M),
    which stays finite for large alpha. Reduces to density_zero_mean at alpha = 0.
    """
    ScaledDensityParams(alpha)
    m = np.asarray(M_kernel(v))
    suppression = np.exp(-alpha * (J_kernel(v) - 0.5 * m)) * damped_psi(alpha * m)
    out = NORMALIZATION * np.asarray(sinh_kernel(v)) * suppression
    return float(out) if np.ndim(out) == 0 else out


def small_v_expansion(alpha: float, v: float) -> float:
    """
    Fourth-order expansion of p_alpha around v = 0:
    e^{-alpha/2}/(2 pi sqrt 3) [1 - (v^2/2)(1/5 - alpha/6) + (v^4/36)(137/350 - 5 alpha/8 + alpha^2/12)].

    Raises:
        DomainViolationError: if |v| > 0.3 / sqrt(1 + alpha)
    """
    limit = 0.3 / math.sqrt(1.0 + alpha)
    if abs(v) > limit:
        raise DomainViolationError(f"small-v expansion needs |v| <= {limit:.4g} at alpha={alpha}, got {v}")
    v2 = v * v
    bracket = (1.0 - 0.5 * v2 * (0.2 - alpha / 6.0)
               + v2 * v2 / 36.0 * (137.0 / 350.0 - 5.0 * alpha / 8.0 + alpha * alpha / 12.0))
    return NORMALIZATION / math.sqrt(3.0) * math.exp(-alpha / 2.0) * bracket


def find_peaks(alpha: float, v_max: float = 20.0) -> List[Peak]:
    """
    Local maxima of p_alpha on [0, v_max], in increasing v.

    A dense scan with step 1e-3 brackets every maximum, then golden-section
    search inside the bracketing triple refines it to 1e-8. v = 0 is reported
    when the density does not rise to the right of it; maxima at v > 0 have
    mirrors at -v.
    """
    if v_max < 10:
        raise ValueError(f"find_peaks needs v_max >= 10, got {v_max}")
    grid = np.arange(0.0, v_max + PEAK_SCAN_STEP / 2, PEAK_SCAN_STEP)
    p = density_alpha(alpha, grid)

    peaks = []
    if p[0] >= p[1]:
        peaks.append(Peak(0.0, float(p[0])))
    rising = p[1:-1] > p[:-2]
    falling = p[1:-1] >= p[2:]
    for i in np.nonzero(rising & falling)[0] + 1:
        j = i + 1 if p[i] > p[i + 1] else min(i + 2, grid.size - 1)
        res = minimize_scalar(lambda x: -density_alpha(alpha, x), bracket=(grid[i - 1], grid[i], grid[j]),
                              method='golden', options={'xtol': PEAK_TOL})
        peaks.append(Peak(float(res.x), float(-res.fun)))
    logger.debug(f"alpha={alpha}: {len(peaks)} maxima on [0, {v_max}]")
    return peaks


def scaled_finite_density(n: int, alpha: float, v: float) -> float:
    """
    Finite-n density in v at t = 1 - v/n for mean mu = sqrt(alpha/n):
    (1/n) kac_density_mean(n, 1, mu, t). Converges to density_alpha(alpha, v).
    """
    return kac_density_mean(KacParams(n, 1.0, math.sqrt(alpha / n)), 1.0 - v / n) / n


def expected_count_local(alpha: float, x1: float, x2: float, epsabs: float = 1e-10,
                         epsrel: float = 1e-8, limit: int = QUAD_LIMIT) -> float:
    """Expected number of zeros with v in [x1, x2] in the n -> infinity limit."""
    if not x1 < x2:
        raise ValueError(f"expected_count_local needs x1 < x2, got ({x1}, {x2})")
    cuts = [x1] + [0.0] * (x1 < 0.0 < x2) + [x2]
    return sum(adaptive_quad(lambda v: density_alpha(alpha, v), lo, hi, epsabs, epsrel, limit)
               for lo, hi in zip(cuts, cuts[1:]))
