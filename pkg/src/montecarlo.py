"""
Monte Carlo ensembles of random polynomials.

Every realization draws its coefficients from its own counter-based stream,
keyed by (seed, realization index), so the result of a run does not depend on
the order in which realizations are evaluated or on the number of workers.
Work is cut into fixed chunks of realizations; chunks run in a process pool
and their integer tallies are reduced in chunk order.
"""

import asyncio
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from cache import Cache
from config import Config
from poly_core import Poly
from rootcount import OVERFLOW_MARGIN, ScanGrid, count_total_batch, scan_batch, scaled_grid_step

logger = logging.getLogger(__name__)

DISTRIBUTIONS = ('gaussian', 'uniform', 'rademacher')
COEFFICIENT_STREAM = 0
PERTURBATION_STREAM = 1
SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class EnsembleSpec:
    """
    An ensemble of polynomials with n i.i.d. coefficients of mean sqrt(alpha/n)
    and unit variance, observed in the scaled window v in [v_lo, v_hi).
    """

    n: int
    dist: str = 'gaussian'
    alpha: float = 0.0
    reps: int = 20_000
    window: Tuple[float, float] = (-10.0, 10.0)
    bins: int = 40
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if self.dist not in DISTRIBUTIONS:
            raise ValueError(f"dist must be one of {DISTRIBUTIONS}, got {self.dist!r}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a finite nonnegative number, got {self.alpha}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValueError(f"reps must be a positive integer, got {self.reps}")
        v_lo, v_hi = self.window
        object.__setattr__(self, 'window', (float(v_lo), float(v_hi)))
        if not v_lo < v_hi:
            raise ValueError(f"window needs v_lo < v_hi, got {self.window}")
        if v_hi > self.n:
            raise ValueError(f"window end v_hi={v_hi} lies beyond v = n = {self.n} (t < 0)")
        if v_lo < -OVERFLOW_MARGIN:
            raise ValueError(f"window start v_lo={v_lo} is below -{OVERFLOW_MARGIN:g} (t > 1 + 50/n)")
        if int(self.bins) != self.bins or self.bins < 1:
            raise ValueError(f"bins must be a positive integer, got {self.bins}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def mu(self) -> float:
        return math.sqrt(self.alpha / self.n)

    @property
    def t_window(self) -> Tuple[float, float]:
        """The scan interval [1 - v_hi/n, 1 - v_lo/n] in t."""
        v_lo, v_hi = self.window
        return 1.0 - v_hi / self.n, 1.0 - v_lo / self.n

    @property
    def bin_edges(self) -> np.ndarray:
        return np.linspace(self.window[0], self.window[1], self.bins + 1)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['window'] = list(self.window)
        return data


def window_from_t(n: int, a: float, b: float) -> Tuple[float, float]:
    """Scaled window (v_lo, v_hi) covering t in [a, b]."""
    return n * (1.0 - b), n * (1.0 - a)


@dataclass(frozen=True)
class HistogramEstimate:
    """Empirical density of zeros in v with per-bin standard errors."""

    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    total_mean: float
    total_var: float
    reps_used: int

    @property
    def total_stderr(self) -> float:
        """Standard error of total_mean, the mean number of zeros in the window."""
        return math.sqrt(self.total_var / self.reps_used)


class TotalCount(NamedTuple):
    mean: float
    variance: float
    stderr: float


class ChunkTally(NamedTuple):
    """Integer sums over one chunk of realizations."""

    counts: np.ndarray
    total: int
    total_sq: int
    reps: int


def realization_rng(seed: int, index: int, stream: int = COEFFICIENT_STREAM) -> np.random.Generator:
    """
    Counter-based generator for one realization: Philox keyed by the
    SeedSequence hash of (seed, index, stream).
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index, stream))))


def _draw(rng: np.random.Generator, dist: str, mu: float, n: int) -> np.ndarray:
    if dist == 'gaussian':
        return mu + rng.standard_normal(n)
    if dist == 'uniform':
        return rng.uniform(mu - SQRT3, mu + SQRT3, n)
    return mu + rng.choice((-1.0, 1.0), size=n)


def sample_coefficients(spec: EnsembleSpec, realization_index: int) -> Poly:
    """Coefficients of realization realization_index, a pure function of (seed, index)."""
    if not 0 <= realization_index < spec.reps:
        raise ValueError(f"realization index {realization_index} outside [0, {spec.reps})")
    return Poly(_draw(realization_rng(spec.seed, realization_index), spec.dist, spec.mu, spec.n))


def sample_batch(spec: EnsembleSpec, start: int, stop: int) -> np.ndarray:
    """(stop - start, n) coefficient rows for realizations start .. stop-1."""
    return np.stack([
        _draw(realization_rng(spec.seed, i), spec.dist, spec.mu, spec.n) for i in range(start, stop)
    ])


def bin_roots(spec: EnsembleSpec, roots: Sequence[np.ndarray]) -> ChunkTally:
    """
    Map roots t* to v* = n(1 - t*) and bin them into half-open bins [lo, hi).

    Roots with v* outside [v_lo, v_hi) are dropped, so the bin counts add up
    to the per-realization window counts exactly.
    """
    v_lo, v_hi = spec.window
    edges = spec.bin_edges
    counts = np.zeros(spec.bins, dtype=np.int64)
    total = total_sq = 0
    for r in roots:
        v = spec.n * (1.0 - r)
        v = v[(v >= v_lo) & (v < v_hi)]
        idx = np.clip(np.searchsorted(edges, v, side='right') - 1, 0, spec.bins - 1)
        counts += np.bincount(idx, minlength=spec.bins)
        total += v.size
        total_sq += v.size * v.size
    return ChunkTally(counts, total, total_sq, len(roots))


def _ensemble_chunk(spec: EnsembleSpec, start: int, stop: int, refine_tol: float) -> ChunkTally:
    """Worker: scan realizations start .. stop-1 in the window and bin their roots."""
    coeffs = sample_batch(spec, start, stop)
    t_lo, t_hi = spec.t_window
    roots, _ = scan_batch(coeffs, t_lo, t_hi, scaled_grid_step(spec.n), refine_tol)
    return bin_roots(spec, roots)


def _total_chunk(spec: EnsembleSpec, start: int, stop: int, refine_tol: float) -> ChunkTally:
    """Worker: total number of real zeros of realizations start .. stop-1."""
    totals = count_total_batch(sample_batch(spec, start, stop), ScanGrid(refine_tol=refine_tol))
    return ChunkTally(np.zeros(0, dtype=np.int64), int(totals.sum()), int((totals * totals).sum()),
                      stop - start)


def _sample_variance(total: int, total_sq: int, reps: int) -> float:
    if reps < 2:
        return 0.0
    mean = total / reps
    return max(total_sq - reps * mean * mean, 0.0) / (reps - 1)


def reduce_tallies(tallies: Sequence[ChunkTally]) -> ChunkTally:
    """Sum chunk tallies in the order given."""
    counts = tallies[0].counts.copy()
    total, total_sq, reps = tallies[0].total, tallies[0].total_sq, tallies[0].reps
    for tally in tallies[1:]:
        counts += tally.counts
        total += tally.total
        total_sq += tally.total_sq
        reps += tally.reps
    return ChunkTally(counts, total, total_sq, reps)


def histogram_from_tally(spec: EnsembleSpec, tally: ChunkTally) -> HistogramEstimate:
    edges = spec.bin_edges
    width = np.diff(edges)
    counts = np.asarray(tally.counts, dtype=np.int64)
    return HistogramEstimate(
        bin_edges=edges,
        counts=counts,
        density=counts / (tally.reps * width),
        stderr=np.sqrt(counts) / (tally.reps * width),
        total_mean=tally.total / tally.reps,
        total_var=_sample_variance(tally.total, tally.total_sq, tally.reps),
        reps_used=tally.reps,
    )


def total_from_tally(tally: ChunkTally) -> TotalCount:
    variance = _sample_variance(tally.total, tally.total_sq, tally.reps)
    return TotalCount(tally.total / tally.reps, variance, math.sqrt(variance / tally.reps))


class EnsembleRunner:
    """Runs ensembles chunk by chunk on a process pool, with result caching."""

    def __init__(self, config: Config, cache: Optional[Cache] = None,
                 progress: Optional[Callable[[int], None]] = None):
        """
        Initialize the runner.

        Args:
            config: Configuration object (workers, chunk_size, refine_tol)
            cache: Optional cache for finished ensembles
            progress: Optional callback receiving the size of each finished chunk
        """
        self.config = config
        self.cache = cache if config.use_cache else None
        self.progress = progress
        self.logger = logging.getLogger(__name__)

    def chunks(self, reps: int) -> List[Tuple[int, int]]:
        """Chunk boundaries; they depend on reps and chunk_size only."""
        size = self.config.chunk_size
        return [(start, min(start + size, reps)) for start in range(0, reps, size)]

    async def map_chunks(self, worker: Callable[..., Any], reps: int, *args: Any) -> List[Any]:
        """
        Evaluate worker(*args, start, stop, refine_tol) on every chunk.

        Returns:
            Worker results in chunk order
        """
        bounds = self.chunks(reps)
        tol = self.config.refine_tol
        self.logger.debug(f"{len(bounds)} chunks of <= {self.config.chunk_size} on {self.config.workers} workers")

        if self.config.workers == 1 or len(bounds) == 1:
            results = []
            for start, stop in bounds:
                results.append(worker(*args, start, stop, tol))
                self._tick(stop - start)
                await asyncio.sleep(0)
            return results

        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=self.config.workers) as executor:
            futures = [
                self._tracked(loop.run_in_executor(executor, worker, *args, start, stop, tol), stop - start)
                for start, stop in bounds
            ]
            return await asyncio.gather(*futures)

    async def _tracked(self, future: Any, size: int) -> Any:
        result = await future
        self._tick(size)
        return result

    def _tick(self, size: int) -> None:
        if self.progress is not None:
            self.progress(size)

    def _cache_key(self, kind: str, spec: EnsembleSpec) -> str:
        return Cache.make_key(kind, {'spec': spec.to_dict(), 'refine_tol': self.config.refine_tol,
                                     'chunk_size': self.config.chunk_size})

    async def _tally(self, kind: str, worker: Callable[..., ChunkTally], spec: EnsembleSpec) -> ChunkTally:
        key = self._cache_key(kind, spec)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                self.logger.info(f"Using cached {kind} result for seed {spec.seed}")
                self._tick(spec.reps)
                return ChunkTally(np.array(cached['counts'], dtype=np.int64), cached['total'],
                                  cached['total_sq'], cached['reps'])

        self.logger.info(f"Running {kind}: n={spec.n}, dist={spec.dist}, alpha={spec.alpha}, reps={spec.reps}")
        tally = reduce_tallies(await self.map_chunks(worker, spec.reps, spec))

        if self.cache is not None:
            self.cache.set(key, {'counts': tally.counts.tolist(), 'total': tally.total,
                                 'total_sq': tally.total_sq, 'reps': tally.reps})
        return tally

    async def run_ensemble(self, spec: EnsembleSpec) -> HistogramEstimate:
        """Histogram of zeros in the scaled window over all realizations."""
        return histogram_from_tally(spec, await self._tally('ensemble', _ensemble_chunk, spec))

    async def run_total_count(self, spec: EnsembleSpec) -> TotalCount:
        """Mean, variance and standard error of the total number of real zeros."""
        return total_from_tally(await self._tally('total', _total_chunk, spec))


def run_ensemble(spec: EnsembleSpec, config: Optional[Config] = None,
                 cache: Optional[Cache] = None) -> HistogramEstimate:
    """Blocking wrapper around EnsembleRunner.run_ensemble."""
    return asyncio.run(EnsembleRunner(config or Config(), cache).run_ensemble(spec))


def run_total_count(spec: EnsembleSpec, config: Optional[Config] = None,
                    cache: Optional[Cache] = None) -> TotalCount:
    """Blocking wrapper around EnsembleRunner.run_total_count."""
    return asyncio.run(EnsembleRunner(config or Config(), cache).run_total_count(spec))
