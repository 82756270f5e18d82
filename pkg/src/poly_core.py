"""
Dense real polynomials.

Coefficients are stored lowest degree first, c_0 ... c_{n-1}, so ``coeffs[j]``
multiplies t**j. Trailing zeros are never trimmed: ensemble statistics are
defined at a fixed number of terms n, not at the realized degree.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class Poly:
    """Immutable polynomial c_0 + c_1 t + ... + c_{n-1} t^{n-1}."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError(f"Poly needs a 1-D coefficient sequence of length >= 1, got shape {coeffs.shape}")
        coeffs.flags.writeable = False
        object.__setattr__(self, 'coeffs', coeffs)

    @classmethod
    def from_roots(cls, roots: Sequence[float], scale: float = 1.0) -> 'Poly':
        """Build scale * prod(t - r) with coefficients lowest degree first."""
        return cls(scale * np.polynomial.polynomial.polyfromroots(list(roots)))

    @property
    def n(self) -> int:
        """Number of terms (degree <= n - 1)."""
        return int(self.coeffs.size)

    def __call__(self, t: ArrayLike) -> ArrayLike:
        return evaluate(self, t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(np.all(self.coeffs == other.coeffs))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Poly({self.coeffs.tolist()!r})"


def evaluate(p: Poly, t: ArrayLike) -> ArrayLike:
    """
    Evaluate p at t by nested multiplication.

    Works for a scalar or an array of points. Overflow propagates as +-inf;
    callers restrict |t| (see rootcount's overflow policy).
    """
    with np.errstate(over='ignore', invalid='ignore'):
        acc = np.zeros_like(np.asarray(t, dtype=float))
        for c in p.coeffs[::-1]:
            acc = acc * t + c
    return float(acc) if acc.ndim == 0 else acc


def evaluate_rows(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Horner evaluation of many polynomials at one point each.

    Args:
        coeffs: (k, n) array, row i holds the coefficients of polynomial i
        x: (k,) array of evaluation points

    Returns:
        (k,) array with row i evaluated at x[i]
    """
    acc = np.zeros(coeffs.shape[0])
    with np.errstate(over='ignore', invalid='ignore'):
        for j in range(coeffs.shape[1] - 1, -1, -1):
            acc = acc * x + coeffs[:, j]
    return acc


def derivative_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of the derivative along the last axis; a constant maps to [0]."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.shape[-1]
    if n == 1:
        return np.zeros_like(coeffs)
    return coeffs[..., 1:] * np.arange(1, n, dtype=float)


def derivative(p: Poly) -> Poly:
    """Return p' with coefficients j*c_j shifted down one index."""
    return Poly(derivative_coeffs(p.coeffs))


def reverse(p: Poly) -> Poly:
    """
    Return the coefficient-reversed polynomial t^{n-1} p(1/t).

    A nonzero root r of p corresponds to the root 1/r of reverse(p).
    """
    return Poly(p.coeffs[::-1])


def power_matrix(t: np.ndarray, n: int) -> np.ndarray:
    """
    Return the (n, len(t)) matrix of powers t**j, j = 0..n-1.

    ``coeffs @ power_matrix(t, n)`` evaluates a whole batch of polynomials on
    a shared grid in one matrix product.
    """
    t = np.asarray(t, dtype=float)
    powers = np.empty((n, t.size))
    powers[0] = 1.0
    for j in range(1, n):
        powers[j] = powers[j - 1] * t
    return powers
