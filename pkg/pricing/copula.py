"""
One-factor Gaussian copula.

Low values of the common factor z mean more defaults.
"""
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .numerics import norm_cdf, norm_inv


@dataclass(frozen=True)
class CopulaParams:
    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f'correlation must lie in [0, 1), got {self.rho!r}')


def conditional_default_prob(p, rho, z):
    """
    Default probability given the common factor.

    Equivalent to Phi(sqrt(rho / (1 - rho)) * (K_p - z)) with
    K_p = Phi^-1(p) / sqrt(rho), written without the division by sqrt(rho).
    Vectorized over z.
    """
    CopulaParams(rho)
    if rho == 0.0:
        if not 0.0 <= p <= 1.0:
            raise DomainError(f'default probability must lie in [0, 1], got {p!r}')
        if np.ndim(z) == 0:
            return float(p)
        return np.full(np.shape(z), float(p))
    threshold = norm_inv(p)
    return norm_cdf((threshold - math.sqrt(rho) * np.asarray(z, dtype=float)) / math.sqrt(1.0 - rho))


def integrate_over_factor(f, grid):
    """E[f(z)] on the factor grid; f is called once with the node array."""
    values = np.broadcast_to(np.asarray(f(grid.nodes), dtype=float), grid.nodes.shape)
    return float(grid.expectation(values))
