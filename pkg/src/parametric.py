"""
Parametric correlation of real zeros.

A realization c is perturbed to c + v b with b an independent standard
gaussian vector. The diagonal correlation K_{0,v}(t, t) / p(t)^2 of the zeros
of the two polynomials has the closed form 1 + arcsin(1/sqrt(1 + v^2)) / v,
estimated here by counting coincidences in a small window around t.
"""

import asyncio
import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from config import Config
from errors import DomainViolationError, InsufficientStatisticsError
from kac_analytic import KacParams, kac_density_mean
from montecarlo import (PERTURBATION_STREAM, EnsembleRunner, EnsembleSpec, realization_rng,
                        sample_batch)
from rootcount import scan_batch, scaled_grid_step

logger = logging.getLogger(__name__)

MIN_NONZERO_PRODUCTS = 100
TARGET_WINDOW_MASS = 0.05  # expected zeros per coincidence window, p(t) * 2 delta


@dataclass(frozen=True)
class PerturbationSpec:
    """
    Coincidence estimator settings. v_param is the perturbation strength in
    c -> c + v_param * b, not the scaled coordinate of the local regime.
    """

    v_param: float
    base: EnsembleSpec
    t_center: float
    delta: Optional[float] = None

    def __post_init__(self):
        if not (self.v_param >= 0 and math.isfinite(self.v_param)):
            raise ValueError(f"v_param must be a finite nonnegative number, got {self.v_param}")
        if self.delta is not None and not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        t_lo, t_hi = self.base.t_window
        if not t_lo <= self.t_center <= t_hi:
            raise ValueError(f"t_center={self.t_center} lies outside the base window t in [{t_lo:.6g}, {t_hi:.6g}]")
        if not self.p_center > 0:
            raise ValueError(f"density of zeros vanishes at t_center={self.t_center}")

    @property
    def p_center(self) -> float:
        """Analytic density of zeros at t_center for the base ensemble."""
        return kac_density_mean(KacParams(self.base.n, 1.0, self.base.mu), self.t_center)

    @property
    def resolved_delta(self) -> float:
        """delta, defaulting to the half-width with p(t_center) * 2 delta = 0.05."""
        if self.delta is not None:
            return self.delta
        return TARGET_WINDOW_MASS / (2.0 * self.p_center)


class ProductTally(NamedTuple):
    products: int
    products_sq: int
    nonzero: int
    reps: int


class ParametricEstimate(NamedTuple):
    ratio: float
    stderr: float


def parametric_ratio(v_param: float) -> float:
    """
    1 + arcsin(1/sqrt(1 + v^2)) / v: decreasing from 1 + pi/(2v) at small v
    to 1 + 1/v^2 at large v.

    Raises:
        DomainViolationError: at v_param <= 0, where the ratio diverges
    """
    if not v_param > 0:
        raise DomainViolationError(
            f"parametric ratio diverges at v={v_param}; small-v asymptote is 1 + (pi/2)/v")
    return 1.0 + math.asin(1.0 / math.sqrt(1.0 + v_param * v_param)) / v_param


def _parametric_chunk(spec: PerturbationSpec, start: int, stop: int, refine_tol: float) -> ProductTally:
    """Worker: coincidence products N1 * N2 over realizations start .. stop-1."""
    base = spec.base
    c = sample_batch(base, start, stop)
    b = np.stack([realization_rng(base.seed, i, PERTURBATION_STREAM).standard_normal(base.n)
                  for i in range(start, stop)])
    delta = spec.resolved_delta
    lo, hi = spec.t_center - delta, spec.t_center + delta
    step = min(scaled_grid_step(base.n), delta / 8.0)
    roots, _ = scan_batch(np.concatenate([c, c + spec.v_param * b]), lo, hi, step, refine_tol)
    k = stop - start
    products = np.array([r1.size * r2.size for r1, r2 in zip(roots[:k], roots[k:])], dtype=np.int64)
    return ProductTally(int(products.sum()), int((products * products).sum()), int(np.count_nonzero(products)), k)


def _jackknife(tallies: Sequence[ProductTally], norm: float) -> ParametricEstimate:
    """
    Delete-one-realization jackknife of mean(N1 N2) / norm.

    For a sample mean the jackknife variance is s^2 / N in closed form, so it
    only needs the integer sums of N1 N2 and (N1 N2)^2 and does not depend on
    how realizations were grouped into chunks.
    """
    total = sum(t.products for t in tallies)
    total_sq = sum(t.products_sq for t in tallies)
    reps = sum(t.reps for t in tallies)
    mean = total / reps
    if reps < 2:
        return ParametricEstimate(mean / norm, math.nan)
    variance = max(total_sq - reps * mean * mean, 0.0) / (reps - 1)
    return ParametricEstimate(mean / norm, math.sqrt(variance / reps) / norm)


async def estimate_parametric_ratio_async(spec: PerturbationSpec, runner: EnsembleRunner) -> ParametricEstimate:
    """Coincidence estimate of K_{0,v}(t, t) / p(t)^2 with a jackknife standard error."""
    if not spec.v_param > 0:
        raise DomainViolationError("v_param = 0 makes N1 = N2; the estimator measures the self-correlation")
    delta = spec.resolved_delta
    logger.info(f"Parametric estimate at v={spec.v_param}, t={spec.t_center}, delta={delta:.4g}, "
                f"reps={spec.base.reps}")
    tallies: List[ProductTally] = await runner.map_chunks(_parametric_chunk, spec.base.reps, spec)

    nonzero = sum(t.nonzero for t in tallies)
    if nonzero < MIN_NONZERO_PRODUCTS:
        raise InsufficientStatisticsError(
            f"only {nonzero} realizations had zeros of both polynomials in the window; "
            f"need {MIN_NONZERO_PRODUCTS} (raise reps or delta)")
    norm = (2.0 * delta) ** 2 * spec.p_center ** 2
    estimate = _jackknife(tallies, norm)
    logger.debug(f"{nonzero} nonzero products, ratio {estimate.ratio:.6g} +- {estimate.stderr:.3g}")
    return estimate


def estimate_parametric_ratio(spec: PerturbationSpec, config: Optional[Config] = None) -> ParametricEstimate:
    """Blocking wrapper around estimate_parametric_ratio_async."""
    runner = EnsembleRunner(config or Config())
    return asyncio.run(estimate_parametric_ratio_async(spec, runner))
