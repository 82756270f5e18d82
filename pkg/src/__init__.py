"""
kac-roots - real zeros of random polynomials

Kac densities at finite n, universal profiles of the local scaling regime,
and reproducible Monte Carlo ensembles that check them.
"""

__version__ = "1.0.0"
__license__ = "MPL-2.0"

from .config import Config
from .cache import Cache
from .montecarlo import EnsembleRunner, EnsembleSpec

__all__ = ['Config', 'Cache', 'EnsembleRunner', 'EnsembleSpec']
