"""
Finite-n Kac densities of real zeros.

Implements the Kac formula for Gaussian coefficients of mean zero, its
extension to a nonzero mean mu, the half-line Gaussian integral Psi that the
extension needs, expected root counts by adaptive quadrature, and Wilkins'
constant in the expected total count (2/pi) ln n + C + O(n^-2).
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import dawsn, erf

from errors import QuadratureError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

NEAR_UNIT = 1e-4          # |t -/+ 1| below which moments are summed directly
SERIES_RADIUS = 1e-2      # |v| below which removable singularities use series
WILKINS_CUTOFF = 45.0
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8
QUAD_LIMIT = 10_000
SQRT2 = math.sqrt(2.0)
SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
# 1/v^2 - 1/sinh^2 v = 1/3 - v^2/15 + 2v^4/189 - v^6/675 + 2v^8/10395 - ...
_SINH_SERIES = (1.0 / 3.0, -1.0 / 15.0, 2.0 / 189.0, -1.0 / 675.0, 2.0 / 10395.0)


@dataclass(frozen=True)
class KacParams:
    """Number of terms n, second moment sigma = E[c^2] and mean mu = E[c]."""

    n: int
    sigma: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")


@dataclass(frozen=True)
class GlobalMoments:
    """Covariance and mean functions entering the Kac densities at one t."""

    A: float
    B: float
    C: float
    D: float
    G: float
    Sigma1: float
    Sigma2: float

    @property
    def discriminant(self) -> float:
        """A*C - B^2, nonnegative by Cauchy-Schwarz."""
        return self.A * self.C - self.B * self.B


def _geometric_sums(x: float, n: int):
    """Closed forms of S(x) = sum_{j<n} x^j and its first two derivatives."""
    x = np.float64(x)
    with np.errstate(over='ignore', invalid='ignore'):
        w = 1.0 - x
        u = x ** n
        s0 = (1.0 - u) / w
        n1 = (1.0 - u) - n * x ** (n - 1) * w
        s1 = n1 / (w * w)
        s2 = (2.0 * n1 - n * (n - 1) * x ** (n - 2) * w * w) / (w * w * w)
    return float(s0), float(s1), float(s2)


def _direct_sums(t: float, n: int):
    """Exact O(n) moment sums, used where the closed forms are 0/0."""
    j = np.arange(n, dtype=float)
    powers = t ** j
    shifted = np.concatenate(([0.0], powers[:-1]))          # t^{j-1}, j >= 1
    even = powers * powers                                   # t^{2j}
    even_shifted = np.concatenate(([0.0], even[:-1]))        # t^{2j-2}, j >= 1
    return (
        float(even.sum()),
        float(t * (j * even_shifted).sum()),
        float((j * j * even_shifted).sum()),
        float(powers.sum()),
        float((j * shifted).sum()),
    )


def _use_direct_sums(n: int, t: float) -> bool:
    # The closed forms lose digits once n|1 - t^2| drops below 1.
    return min(abs(t - 1.0), abs(t + 1.0)) < NEAR_UNIT or n * abs(1.0 - t * t) < 1.0


def global_moments(params: KacParams, t: float) -> GlobalMoments:
    """
    Moment functions A, B, C, D, G, Sigma1, Sigma2 at (n, t, sigma, mu).

    A = sigma sum t^{2j}, B = A'/2, C = A''/4 + A'/(4t), G = mu sum t^j and
    D = -G B/A + G'. Near t = +-1 the closed-form ratios are replaced by direct
    sums.
    """
    n, sigma, mu = params.n, params.sigma, params.mu
    if n == 1:
        return GlobalMoments(A=sigma, B=0.0, C=0.0, D=0.0, G=mu, Sigma1=0.0, Sigma2=mu * mu / sigma)

    if _use_direct_sums(n, t):
        a_sum, b_sum, c_sum, g_sum, gp_sum = _direct_sums(t, n)
    else:
        s0, s1, s2 = _geometric_sums(t * t, n)
        a_sum, b_sum, c_sum = s0, t * s1, s1 + t * t * s2
        g_sum, gp_sum, _ = _geometric_sums(t, n)

    A, B, C = sigma * a_sum, sigma * b_sum, sigma * c_sum
    G, G_prime = mu * g_sum, mu * gp_sum
    if mu == 0.0:
        return GlobalMoments(A=A, B=B, C=C, D=0.0, G=0.0, Sigma1=0.0, Sigma2=0.0)

    D = -G * B / A + G_prime
    disc = A * C - B * B
    sigma1 = A * D * D / disc if disc > 0 else 0.0
    return GlobalMoments(A=A, B=B, C=C, D=D, G=G, Sigma1=sigma1, Sigma2=G * G / A)


def _needs_inversion(t: float) -> bool:
    # p(t) = p(1/t) / t^2 for i.i.d. coefficients; the moment sums overflow for |t| > 1
    return abs(t) > 1.0


def kac_density(params: KacParams, t: float) -> float:
    """
    Mean density of real zeros sqrt(AC - B^2) / (pi A) for mean-zero Gaussian
    coefficients. A constant polynomial (n = 1) has density 0.
    """
    if params.n == 1:
        return 0.0
    if _needs_inversion(t):
        return kac_density(params, 1.0 / t) / (t * t)
    m = global_moments(KacParams(params.n, params.sigma, 0.0), t)
    return math.sqrt(max(m.discriminant, 0.0)) / (math.pi * m.A)


def psi_factor(z: ArrayLike) -> ArrayLike:
    """
    Psi(z) = int_0^inf q exp(-q^2/2) cosh(q sqrt z) dq for any real z.

    z >= 0: 1 + s e^{s^2/2} sqrt(pi/2) erf(s/sqrt2) with s = sqrt z.
    z < 0:  cosh(i q s) = cos(q s), giving 1 - sqrt2 s Daw(s/sqrt2).
    """
    z = np.asarray(z, dtype=float)
    s = np.sqrt(np.abs(z))
    with np.errstate(over='ignore', invalid='ignore'):
        grow = 1.0 + s * np.exp(z / 2.0) * SQRT_HALF_PI * erf(s / SQRT2)
    shrink = 1.0 - SQRT2 * s * dawsn(s / SQRT2)
    out = np.where(z >= 0.0, grow, shrink)
    return float(out) if out.ndim == 0 else out


def damped_psi(z: ArrayLike) -> ArrayLike:
    """exp(-z/2) * Psi(z), evaluated without overflow for large positive z."""
    z = np.asarray(z, dtype=float)
    s = np.sqrt(np.abs(z))
    with np.errstate(over='ignore', invalid='ignore'):
        grow = np.exp(-z / 2.0) + s * SQRT_HALF_PI * erf(s / SQRT2)
        shrink = np.exp(-z / 2.0) * (1.0 - SQRT2 * s * dawsn(s / SQRT2))
    out = np.where(z >= 0.0, grow, shrink)
    return float(out) if out.ndim == 0 else out


def psi_factor_quadrature(z: float, epsabs: float = 1e-12) -> float:
    """Direct quadrature of the defining integral of Psi; the oracle for psi_factor."""
    s = math.sqrt(abs(z))
    kernel = math.cosh if z >= 0 else math.cos
    upper = s + 40.0
    return adaptive_quad(lambda q: q * math.exp(-0.5 * q * q) * kernel(q * s), 0.0, upper,
                         epsabs=epsabs, epsrel=1e-11)


def kac_density_mean(params: KacParams, t: float) -> float:
    """
    Density of real zeros for Gaussian coefficients with mean mu:
    p_n(t) exp(-(Sigma1 + Sigma2)/2) Psi(Sigma1). Equals kac_density at mu = 0.
    """
    if params.n == 1:
        return 0.0
    if _needs_inversion(t):
        return kac_density_mean(params, 1.0 / t) / (t * t)
    m = global_moments(params, t)
    base = math.sqrt(max(m.discriminant, 0.0)) / (math.pi * m.A)
    return base * math.exp(-0.5 * m.Sigma2) * damped_psi(m.Sigma1)


def adaptive_quad(func: Callable[[float], float], lo: float, hi: float, epsabs: float = QUAD_EPSABS,
                  epsrel: float = QUAD_EPSREL, limit: int = QUAD_LIMIT) -> float:
    """
    Adaptive Gauss-Kronrod quadrature of func over [lo, hi].

    Raises:
        QuadratureError: if QUADPACK stops short of the requested tolerance
    """
    result = quad(func, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
    value, error = result[0], result[1]
    if len(result) > 3 and error > max(epsabs, epsrel * abs(value)):
        raise QuadratureError(f"quadrature on [{lo}, {hi}] stopped at error {error:.3g}: {result[3]}")
    logger.debug(f"quad [{lo:.6g}, {hi:.6g}] = {value:.12g} ({result[2]['neval']} evaluations)")
    return value


def _unit_breakpoints(n: int, lo: float, hi: float):
    """Breakpoints clustering at t = +-1 on the scale 1/n, 10/n, 100/n, ..."""
    points = {lo, hi}
    scale = 1.0 / n
    while scale < 1.0:
        for edge in (1.0 - scale, -1.0 + scale):
            if lo < edge < hi:
                points.add(edge)
        scale *= 10.0
    return sorted(points)


def _fold_into_unit_interval(a: float, b: float):
    """
    Rewrite [a, b] as pieces inside [-1, 1], using p(t)dt = p(s)ds for s = 1/t.
    """
    pieces = []
    cuts = sorted({a, b} | {c for c in (-1.0, 1.0) if a < c < b})
    for lo, hi in zip(cuts, cuts[1:]):
        if -1.0 <= lo and hi <= 1.0:
            pieces.append((lo, hi))
        else:
            inv_lo = 0.0 if math.isinf(hi) else 1.0 / hi
            inv_hi = 0.0 if math.isinf(lo) else 1.0 / lo
            pieces.append((inv_lo, inv_hi))
    return pieces


def expected_count_global(params: KacParams, a: float = -math.inf, b: float = math.inf,
                          epsabs: float = QUAD_EPSABS, epsrel: float = QUAD_EPSREL,
                          limit: int = QUAD_LIMIT) -> float:
    """
    Expected number of real zeros in [a, b] by adaptive quadrature of the
    (mean-mu) Kac density.

    Infinite ends are allowed: |t| > 1 is folded onto (-1, 1) through the
    inversion t -> 1/t, under which p(t)dt is invariant for i.i.d. coefficients.
    """
    if not a < b:
        raise ValueError(f"expected_count_global needs a < b, got ({a}, {b})")
    density = kac_density if params.mu == 0.0 else kac_density_mean

    total = 0.0
    for lo, hi in _fold_into_unit_interval(a, b):
        if hi <= lo:
            continue
        points = _unit_breakpoints(params.n, lo, hi)
        for left, right in zip(points, points[1:]):
            total += adaptive_quad(lambda t: density(params, t), left, right, epsabs, epsrel, limit)
    return total


def sinh_kernel(v: ArrayLike) -> ArrayLike:
    """
    sqrt(1/v^2 - 1/sinh^2 v), even in v, with value sqrt(1/3) at v = 0.

    The scaled zero-mean density is this kernel over 2 pi.
    """
    v = np.abs(np.asarray(v, dtype=float))
    small = v < SERIES_RADIUS
    safe = np.where(small, 1.0, v)
    with np.errstate(over='ignore'):
        direct = 1.0 / (safe * safe) - 1.0 / np.sinh(safe) ** 2
    v2 = v * v
    series = np.polynomial.polynomial.polyval(v2, _SINH_SERIES)
    out = np.sqrt(np.maximum(np.where(small, series, direct), 0.0))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=8)
def wilkins_constant(epsabs: float = 1e-12, epsrel: float = 1e-12, limit: int = QUAD_LIMIT) -> float:
    """
    C = (2/pi) [ int_0^1 K(v) dv - int_1^inf (1/v - K(v)) dv ], K = sinh_kernel.

    The tail integrand decays like 2v e^{-2v}; the upper integral is cut at
    v = 45 where the remainder is far below 1e-12.
    """
    inner = adaptive_quad(sinh_kernel, 0.0, 1.0, epsabs, epsrel, limit)
    outer = adaptive_quad(lambda v: 1.0 / v - sinh_kernel(v), 1.0, WILKINS_CUTOFF, epsabs, epsrel, limit)
    value = 2.0 / math.pi * (inner - outer)
    logger.debug(f"Wilkins constant evaluated: {value:.12f}")
    return value
