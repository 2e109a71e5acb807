"""
Scalar special functions, quadrature over the standard normal common factor
and bracketed root finding.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .exceptions import DomainError, NoBracketError

logger = logging.getLogger(__name__)

DEFAULT_ROOT_TOLERANCE = 1e-12


def norm_cdf(x):
    """
    Standard normal cumulative distribution function.

    Scalars give a float, arrays give an array of the same shape.
    """
    if np.ndim(x) == 0:
        return float(ndtr(float(x)))
    return ndtr(np.asarray(x, dtype=float))


def norm_inv(p):
    """Inverse of norm_cdf on the open unit interval."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f'norm_inv requires p in (0, 1), got {p!r}')
    return float(ndtri(p))


@dataclass(frozen=True, eq=False)
class FactorGrid:
    """
    Quadrature nodes and probability weights for expectations over z ~ N(0, 1).

    Arrays are copied and frozen on construction, so a grid can safely be
    shared between threads and used as a cache key.
    """
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).ravel()
        weights = np.array(self.weights, dtype=float).ravel()
        if nodes.size == 0 or nodes.size != weights.size:
            raise DomainError('factor grid needs matching, nonempty nodes and weights')
        if np.any(weights < 0.0):
            raise DomainError('factor grid weights must be nonnegative')
        if abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError(f'factor grid weights sum to {weights.sum()!r}, not 1')
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0.0):
            raise DomainError('factor grid nodes must be strictly increasing')
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, 'nodes', nodes)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, '_key', (nodes.tobytes(), weights.tobytes()))

    def __eq__(self, other):
        if not isinstance(other, FactorGrid):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __len__(self):
        return self.nodes.size

    def expectation(self, values):
        """Weighted sum of values sampled at the nodes (last axis)."""
        return np.dot(np.asarray(values, dtype=float), self.weights)


@lru_cache(maxsize=32)
def factor_grid(n):
    """
    Gauss-Hermite rule for the standard normal weight exp(-z**2 / 2).

    The probabilists' rule already integrates against the normal kernel,
    so only the weights need rescaling to sum to one.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f'factor grid size must be a positive integer, got {n!r}')
    nodes, weights = hermegauss(int(n))
    weights = weights / math.fsum(weights)
    if int(n) == 1:
        nodes = np.zeros(1)
    logger.debug(f'Built {n}-node factor grid')
    return FactorGrid(nodes=nodes, weights=weights)


def find_root(f, lo, hi, tol=DEFAULT_ROOT_TOLERANCE):
    """
    Root of a monotone function on a bracketing interval.

    Brent's method combines inverse quadratic interpolation with a bisection
    fallback, so convergence is guaranteed once the bracket is valid.
    """
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError('root bracket must be finite')
    if lo > hi:
        lo, hi = hi, lo
    f_lo = float(f(lo))
    f_hi = float(f(hi))
    if math.isnan(f_lo) or math.isnan(f_hi):
        raise DomainError('function is undefined at the bracket endpoints')
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise NoBracketError(
            f'f({lo!r}) = {f_lo!r} and f({hi!r}) = {f_hi!r} do not bracket a root'
        )
    return float(brentq(f, lo, hi, xtol=tol, maxiter=500))
