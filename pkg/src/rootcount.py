"""
Real-root counting and location.

The workhorse is a grid scan: every polynomial of a batch is evaluated on a
shared uniform grid with one matrix product, sign changes are bracketed and
refined by bisection, and cells that may hide a close pair of roots are split
at their interior extremum. A Sturm-chain counter in exact rational
arithmetic serves as the exact oracle for small degree.

Overflow policy: the raw polynomial is never evaluated at |t| > 1 + 50/n.
Totals over the whole real line use the t -> 1/t correspondence with the
reversed polynomial instead.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from errors import DegreeTooLargeError, OverflowPolicyError
from poly_core import Poly, derivative_coeffs, evaluate_rows, power_matrix

logger = logging.getLogger(__name__)

DEFAULT_REFINE_TOL = 1e-12
OVERFLOW_MARGIN = 50.0
SCALED_GRID_STEP = 0.02   # grid step in v = n(1 - t) for local windows
NEAR_ZERO = 1e-10         # relative to the largest |p| on the row's grid
STURM_MAX_LENGTH = 64
ENDPOINT_SHIFT = Fraction(1, 10 ** 12)
MAX_BISECTIONS = 80


@dataclass(frozen=True)
class ScanGrid:
    """Grid parameters shared by every scan of a run."""

    grid_step: Optional[float] = None
    refine_tol: float = DEFAULT_REFINE_TOL

    def step_for(self, n: int, a: float, b: float) -> float:
        return self.grid_step if self.grid_step is not None else default_grid_step(n, a, b)


@dataclass(frozen=True)
class RootReport:
    """Roots found by a scan of [a, b]."""

    count: int
    roots: Tuple[float, ...]
    interval: Tuple[float, float]
    resolution: float

    def __post_init__(self):
        if self.count != len(self.roots):
            raise ValueError(f"count {self.count} does not match {len(self.roots)} roots")


def default_grid_step(n: int, a: float, b: float) -> float:
    """(b - a) / max(1024, 8n): at least 1024 cells, 8 per term for long polynomials."""
    return (b - a) / max(1024, 8 * n)


def scaled_grid_step(n: int) -> float:
    """Grid step in t corresponding to 0.02 in the scaled coordinate v."""
    return SCALED_GRID_STEP / n


def overflow_limit(n: int) -> float:
    return 1.0 + OVERFLOW_MARGIN / n


def check_overflow_policy(n: int, a: float, b: float) -> None:
    """
    Raise OverflowPolicyError if [a, b] reaches past 1 + 50/n in modulus.

    (1 + 50/n)^n stays below e^50, well inside double range for O(1)
    coefficients; beyond that the caller must scan reverse(p) instead.
    """
    limit = overflow_limit(n)
    if max(abs(a), abs(b)) > limit:
        raise OverflowPolicyError(
            f"scan window [{a}, {b}] exceeds |t| <= 1 + 50/n = {limit:.6g} for n={n}; "
            f"scan the reversed polynomial instead"
        )


def _validate_window(a: float, b: float, grid_step: float, refine_tol: float) -> None:
    if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
        raise ValueError(f"scan window needs finite a < b, got [{a}, {b}]")
    if grid_step <= 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    if refine_tol <= 0:
        raise ValueError(f"refine_tol must be positive, got {refine_tol}")


@lru_cache(maxsize=8)
def _grid_powers(a: float, b: float, cells: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform grid on [a, b] and its power matrix, shared by every chunk of a run."""
    grid = np.linspace(a, b, cells + 1)
    powers = power_matrix(grid, n)
    grid.flags.writeable = False
    powers.flags.writeable = False
    return grid, powers


def _bisection_steps(width: float, refine_tol: float) -> int:
    if width <= refine_tol:
        return 0
    return min(MAX_BISECTIONS, math.ceil(math.log2(width / refine_tol)))


def _bisect_roots(coeffs, rows, lo, hi, plo, refine_tol):
    """Refine sign-change brackets of coeffs[rows] until narrower than refine_tol."""
    if rows.size == 0:
        return np.empty(0)
    sub = coeffs[rows]
    lo, hi, plo = lo.copy(), hi.copy(), plo.copy()
    for _ in range(_bisection_steps(float(np.max(hi - lo)), refine_tol)):
        mid = 0.5 * (lo + hi)
        pm = evaluate_rows(sub, mid)
        exact = pm == 0.0
        left = np.sign(pm) == np.sign(plo)
        lo = np.where(left | exact, mid, lo)
        plo = np.where(left, pm, plo)
        hi = np.where(~left | exact, mid, hi)
    return 0.5 * (lo + hi)


def _locate_extrema(dcoeffs, rows, lo, hi, dlo, refine_tol):
    """Bisection on the sign of p' inside cells where p' changes sign."""
    sub = dcoeffs[rows]
    lo, hi = lo.copy(), hi.copy()
    for _ in range(_bisection_steps(float(np.max(hi - lo)), refine_tol)):
        mid = 0.5 * (lo + hi)
        dm = evaluate_rows(sub, mid)
        left = np.sign(dm) == np.sign(dlo)
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


class _Cells:
    """Flat arrays describing candidate cells across a batch."""

    def __init__(self, rows, lo, hi, plo, phi, dlo, dhi):
        self.rows, self.lo, self.hi = rows, lo, hi
        self.plo, self.phi, self.dlo, self.dhi = plo, phi, dlo, dhi

    def select(self, mask) -> '_Cells':
        return _Cells(self.rows[mask], self.lo[mask], self.hi[mask], self.plo[mask],
                      self.phi[mask], self.dlo[mask], self.dhi[mask])

    @staticmethod
    def concat(parts: List['_Cells']) -> '_Cells':
        return _Cells(*(np.concatenate([getattr(c, name) for c in parts])
                        for name in ('rows', 'lo', 'hi', 'plo', 'phi', 'dlo', 'dhi')))


def _classify(cells: _Cells):
    """Split cells into sign-change brackets and possible hidden pairs."""
    sp, sd = np.sign(cells.plo) * np.sign(cells.phi), np.sign(cells.dlo) * np.sign(cells.dhi)
    return cells.select(sp < 0), cells.select((sp > 0) & (sd < 0))


def scan_batch(coeffs: np.ndarray, a: float, b: float, grid_step: Optional[float] = None,
               refine_tol: float = DEFAULT_REFINE_TOL) -> Tuple[List[np.ndarray], float]:
    """
    Locate the real roots in [a, b] of every polynomial in a batch.

    Args:
        coeffs: (k, n) coefficient rows, lowest degree first
        a, b: scan window
        grid_step: requested grid step (default: default_grid_step)
        refine_tol: final bracket width

    Returns:
        (roots, resolution): one sorted array of roots per row, and the grid
        step actually used

    Raises:
        OverflowPolicyError: if the window reaches past 1 + 50/n
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    k, n = coeffs.shape
    if grid_step is None:
        grid_step = default_grid_step(n, a, b)
    _validate_window(a, b, grid_step, refine_tol)
    check_overflow_policy(n, a, b)

    cells_count = max(1, math.ceil((b - a) / grid_step - 1e-9))
    resolution = (b - a) / cells_count
    grid, powers = _grid_powers(a, b, cells_count, n)
    dcoeffs = derivative_coeffs(coeffs)
    with np.errstate(over='ignore', invalid='ignore'):
        values = coeffs @ powers
        slopes = dcoeffs @ powers[:dcoeffs.shape[1]]

    found: List[Tuple[np.ndarray, np.ndarray]] = []

    # A grid value of exactly 0.0 is a root; sign-change tests below skip it.
    zero_rows, zero_idx = np.nonzero(values == 0.0)
    found.append((zero_rows, grid[zero_idx]))

    sign_p = np.sign(values[:, :-1]) * np.sign(values[:, 1:])
    sign_d = np.sign(slopes[:, :-1]) * np.sign(slopes[:, 1:])
    scale = np.max(np.abs(values), axis=1, keepdims=True)
    # One level of dyadic refinement where p is nearly zero at both ends of a
    # cell but neither p nor p' changes sign there.
    near = (sign_p > 0) & (sign_d >= 0) & (
        np.maximum(np.abs(values[:, :-1]), np.abs(values[:, 1:])) < NEAR_ZERO * scale)
    candidates = (sign_p < 0) | ((sign_p > 0) & (sign_d < 0)) | near

    rows, idx = np.nonzero(candidates)
    cells = _Cells(rows, grid[idx], grid[idx + 1], values[rows, idx], values[rows, idx + 1],
                   slopes[rows, idx], slopes[rows, idx + 1])
    brackets, pairs = _classify(cells)

    near = near[rows, idx]
    if np.any(near):
        flat = cells.select(near)
        mid = 0.5 * (flat.lo + flat.hi)
        pm = evaluate_rows(coeffs[flat.rows], mid)
        dm = evaluate_rows(dcoeffs[flat.rows], mid)
        logger.debug(f"Dyadic refinement of {flat.rows.size} near-zero cells")
        found.append((flat.rows[pm == 0.0], mid[pm == 0.0]))
        halves = _Cells.concat([
            _Cells(flat.rows, flat.lo, mid, flat.plo, pm, flat.dlo, dm),
            _Cells(flat.rows, mid, flat.hi, pm, flat.phi, dm, flat.dhi),
        ])
        more_brackets, more_pairs = _classify(halves)
        brackets = _Cells.concat([brackets, more_brackets])
        pairs = _Cells.concat([pairs, more_pairs])

    # A cell with equal end signs and a turning point may hide two roots:
    # split it at the extremum and bracket both halves if p crosses there.
    if pairs.rows.size:
        x_star = _locate_extrema(dcoeffs, pairs.rows, pairs.lo, pairs.hi, pairs.dlo, refine_tol)
        p_star = evaluate_rows(coeffs[pairs.rows], x_star)
        crossed = np.sign(p_star) * np.sign(pairs.plo) < 0
        touching = p_star == 0.0
        found.append((pairs.rows[touching], x_star[touching]))
        if np.any(crossed):
            logger.debug(f"Split {int(np.count_nonzero(crossed))} cells at an interior extremum")
            split = pairs.select(crossed)
            xs, ps = x_star[crossed], p_star[crossed]
            brackets = _Cells.concat([
                brackets,
                _Cells(split.rows, split.lo, xs, split.plo, ps, split.dlo, split.dlo),
                _Cells(split.rows, xs, split.hi, ps, split.phi, split.dhi, split.dhi),
            ])

    refined = _bisect_roots(coeffs, brackets.rows, brackets.lo, brackets.hi, brackets.plo, refine_tol)
    found.append((brackets.rows, refined))

    all_rows = np.concatenate([r for r, _ in found]).astype(int)
    all_roots = np.concatenate([x for _, x in found]).astype(float)
    order = np.lexsort((all_roots, all_rows))
    all_rows, all_roots = all_rows[order], np.clip(all_roots[order], a, b)
    bounds = np.searchsorted(all_rows, np.arange(k + 1))

    roots: List[np.ndarray] = []
    for i in range(k):
        row_roots = all_roots[bounds[i]:bounds[i + 1]]
        if row_roots.size > 1:
            keep = np.concatenate(([True], np.diff(row_roots) >= refine_tol))
            row_roots = row_roots[keep]
        roots.append(row_roots)
    return roots, resolution


def count_roots_scan(p: Poly, a: float, b: float, grid_step: Optional[float] = None,
                     refine_tol: float = DEFAULT_REFINE_TOL) -> RootReport:
    """
    Count and locate the real roots of p in [a, b] by grid scan and bisection.

    Tangent (even multiplicity) roots have probability zero under continuous
    coefficient laws and may be missed.
    """
    roots, resolution = scan_batch(p.coeffs[None, :], a, b, grid_step, refine_tol)
    found = tuple(float(r) for r in roots[0])
    return RootReport(count=len(found), roots=found, interval=(a, b), resolution=resolution)


def count_total_batch(coeffs: np.ndarray, scan: ScanGrid = ScanGrid()) -> np.ndarray:
    """
    Number of real roots on the whole line for each row of a batch.

    Roots in [-1, 1] are counted directly; roots with |t| > 1 are counted as
    roots of the reversed polynomial strictly inside (-1, 1), excluding the
    root at 0 that a vanishing top coefficient produces.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    n = coeffs.shape[1]
    step = scan.step_for(n, -1.0, 1.0)
    inner, _ = scan_batch(coeffs, -1.0, 1.0, step, scan.refine_tol)
    outer, _ = scan_batch(coeffs[:, ::-1], -1.0, 1.0, step, scan.refine_tol)
    return np.array([
        r_in.size + int(np.count_nonzero((np.abs(r_out) > scan.refine_tol) & (np.abs(r_out) < 1.0)))
        for r_in, r_out in zip(inner, outer)
    ], dtype=np.int64)


def count_roots_total(p: Poly, scan: ScanGrid = ScanGrid()) -> int:
    """Total number of real roots of p over (-inf, inf)."""
    return int(count_total_batch(p.coeffs[None, :], scan)[0])


def _trim(poly: List[Fraction]) -> List[Fraction]:
    while poly and poly[-1] == 0:
        poly = poly[:-1]
    return poly


def _remainder(num: List[Fraction], den: List[Fraction]) -> List[Fraction]:
    """Remainder of num / den, lists lowest degree first, den[-1] != 0."""
    num = list(num)
    degree = len(den) - 1
    while len(num) - 1 >= degree:
        factor = num[-1] / den[-1]
        shift = len(num) - 1 - degree
        for i in range(degree + 1):
            num[shift + i] -= factor * den[i]
        num.pop()
    return num


def _sturm_chain(coeffs: List[Fraction]) -> List[List[Fraction]]:
    # members are scaled by positive constants only, which keeps every sign
    chain = [coeffs, [j * c for j, c in enumerate(coeffs)][1:]]
    while len(chain[-1]) > 1:
        rem = _trim(_remainder(chain[-2], chain[-1]))
        if not rem:
            break
        lead = abs(rem[-1])
        chain.append([-c / lead for c in rem])
    return chain


def _horner(poly: List[Fraction], x: Fraction) -> Fraction:
    value = Fraction(0)
    for c in reversed(poly):
        value = value * x + c
    return value


def _sign_variations(chain: List[List[Fraction]], x: Fraction) -> int:
    signs = [value > 0 for value in (_horner(poly, x) for poly in chain) if value != 0]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def sturm_count(p: Poly, a: float, b: float) -> int:
    """
    Exact number of distinct real roots of p in the open interval (a, b).

    Double coefficients are dyadic rationals, so the Sturm chain is built in
    exact rational arithmetic; no remainder is ever dropped as rounding noise.
    Endpoints where p vanishes are moved 1e-12 into the interval.

    Raises:
        DegreeTooLargeError: if p has more than 64 terms
    """
    if p.n > STURM_MAX_LENGTH:
        raise DegreeTooLargeError(f"Sturm oracle supports at most {STURM_MAX_LENGTH} terms, got {p.n}")
    if a >= b:
        raise ValueError(f"sturm_count needs a < b, got ({a}, {b})")
    coeffs = _trim([Fraction(float(c)) for c in p.coeffs])
    if len(coeffs) <= 1:
        return 0
    chain = _sturm_chain(coeffs)
    lo, hi = Fraction(a), Fraction(b)
    if _horner(coeffs, lo) == 0:
        lo += ENDPOINT_SHIFT
    if _horner(coeffs, hi) == 0:
        hi -= ENDPOINT_SHIFT
    return _sign_variations(chain, lo) - _sign_variations(chain, hi)


def reconcile_with_sturm(p: Poly, a: float, b: float, grid_step: Optional[float] = None,
                         refine_tol: float = DEFAULT_REFINE_TOL, max_halvings: int = 8) -> Tuple[RootReport, int]:
    """
    Scan p on [a, b], halving the grid step until the count matches Sturm.

    Returns:
        (report, halvings) for the first scan that agrees with the oracle

    Raises:
        ArithmeticError: if the scan still disagrees after max_halvings
    """
    exact = sturm_count(p, a, b)
    step = grid_step if grid_step is not None else default_grid_step(p.n, a, b)
    for halvings in range(max_halvings + 1):
        report = count_roots_scan(p, a, b, step, refine_tol)
        if report.count == exact:
            if halvings:
                logger.warning(f"Scan matched Sturm count {exact} after {halvings} grid halvings")
            return report, halvings
        logger.debug(f"Scan found {report.count} roots, Sturm {exact}; halving grid step {step:.3g}")
        step /= 2
    raise ArithmeticError(f"scan did not converge to Sturm count {exact} on [{a}, {b}]")
