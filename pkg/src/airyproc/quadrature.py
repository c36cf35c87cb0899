"""Gauss-Legendre grids on truncated intervals of the real line.

Every integral operator in this package is discretized on one of these
grids (Nystrom's method), so the grid is the single knob controlling
discretization error.  Cutoffs are chosen so that the superexponential
decay of the Airy function and the Gaussian decay of heat kernels push
the neglected tails below 1e-14.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

__all__ = ["QuadGrid", "gauss_legendre", "default_grid", "DEFAULT_M", "CUTOFF_PAD"]

DEFAULT_M = 120
CUTOFF_PAD = 10.0


@dataclass(frozen=True)
class QuadGrid:
    """Quadrature rule on [lo, hi]: strictly increasing nodes, positive weights.

    Weights sum to ``hi - lo``.  Instances are immutable and safe to share
    across threads.  ``panels`` records the (lo, hi, m) Gauss-Legendre pieces
    the grid was built from, so a refined copy can be constructed.
    """

    nodes: np.ndarray
    weights: np.ndarray
    lo: float
    hi: float
    m: int
    panels: Optional[Tuple[Tuple[float, float, int], ...]] = field(
        default=None, compare=False
    )

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.m != nodes.size or weights.size != nodes.size:
            raise ValueError("node/weight count does not match m")
        if self.m < 2:
            raise ValueError("a grid needs at least 2 nodes")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if nodes[0] < self.lo or nodes[-1] > self.hi:
            raise ValueError("nodes outside [lo, hi]")
        if not np.all(weights > 0):
            raise ValueError("weights must be positive")
        span = self.hi - self.lo
        if abs(weights.sum() - span) > 1e-12 * max(1.0, abs(span)):
            raise ValueError("weights do not sum to hi - lo")

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature sum of function values sampled on the nodes."""
        return float(self.weights @ np.asarray(values, dtype=float))


@lru_cache(maxsize=64)
def _leggauss(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return x, w


def gauss_legendre(m: int, lo: float, hi: float) -> QuadGrid:
    """m-point Gauss-Legendre rule affinely mapped to [lo, hi].

    Exact for polynomials of degree <= 2m - 1 on the interval.

    Parameters
    ----------
    m : int
        Node count, at least 2.
    lo, hi : float
        Interval endpoints, ``lo < hi``.
    """
    if m < 2:
        raise ValueError(f"need m >= 2 nodes, got {m}")
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    x, w = _leggauss(int(m))
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return QuadGrid(
        nodes=mid + half * x,
        weights=half * w,
        lo=lo,
        hi=hi,
        m=int(m),
        panels=((float(lo), float(hi), int(m)),),
    )


def default_grid(t_scale: float, level_min: float) -> QuadGrid:
    """Library default grid for operators involving levels down to ``level_min``.

    The cutoffs sit ``CUTOFF_PAD`` beyond the smallest level (and beyond the
    origin), which puts the Airy and Gaussian kernel tails below 1e-14 at the
    grid edges for the time spans this package supports.
    """
    if t_scale <= 0:
        raise ValueError("t_scale must be positive")
    lo = min(level_min, 0.0) - CUTOFF_PAD
    hi = max(CUTOFF_PAD, level_min + CUTOFF_PAD)
    return gauss_legendre(DEFAULT_M, lo, hi)
