"""Curved-geometry (Airy2) marginal and finite-dimensional distributions.

The extended-kernel block determinant is the workhorse; the grouped
one-space formula (projection chain between semigroup kernels of the
operator -d^2/dx^2 + x, closed by the spectrally-damped Airy-kernel factor)
is implemented for n <= 3 as an independent cross-check.  No conjugation is
needed here, but the semigroup kernels grow like exp(|span| |x|) at the
lower grid edge, which limits the grouped route to time spans of about 1.5.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .airy1 import FddQuery, _density, _grid_density, _split_edges
from .fredholm import (
    DetResult,
    block_discretize,
    det_of_assembly,
    panel_grid,
)
from .kernels import exp_neg_airy_ham, k2_ext, k_airy
from .quadrature import CUTOFF_PAD, DEFAULT_M, QuadGrid, gauss_legendre

__all__ = [
    "Airy2Query",
    "marginal_cdf_gue",
    "fdd_extended_airy2",
    "fdd_grouped_airy2",
]

Airy2Query = FddQuery

_GROUPED_MAX_TIMES = 3


def marginal_cdf_gue(x: float, *, grid_m: int = DEFAULT_M) -> DetResult:
    """Tracy-Widom GUE distribution: det(I - K_Ai) on [x, infinity)."""
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    hi = max(CUTOFF_PAD, x + CUTOFF_PAD)
    grid = gauss_legendre(grid_m, x, hi)
    kernel = k_airy()

    def assemble(g: QuadGrid) -> np.ndarray:
        sw = g.sqrt_weights
        return sw[:, None] * kernel.matrix(g.nodes, g.nodes) * sw[None, :]

    return det_of_assembly(assemble, grid)


def fdd_extended_airy2(q: Airy2Query, *, grid_m: int = DEFAULT_M) -> DetResult:
    """n-time Airy2 distribution via the extended Airy kernel."""
    times = np.asarray(q.times, dtype=float)
    levels = np.asarray(q.levels, dtype=float)
    kmat = [[k2_ext(ti, tj) for tj in times] for ti in times]
    lo = float(levels.min())
    hi = max(CUTOFF_PAD, levels.max() + CUTOFF_PAD)
    edges = _split_edges(lo, hi, levels)
    grid = panel_grid(edges, int(math.ceil(_density(grid_m) * (hi - lo))))

    def assemble(g: QuadGrid) -> np.ndarray:
        return block_discretize(kmat, levels, g, times=times).matrix

    return det_of_assembly(assemble, grid)


def _ham_matrix(s: float, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    return exp_neg_airy_ham(s).matrix(xs, zs)


def _grouped_bracket(
    times: np.ndarray,
    levels: np.ndarray,
    xs: np.ndarray,
    zgrid: QuadGrid,
    zlo: float,
    zhi: float,
    dens: float,
) -> np.ndarray:
    """Kernel of e^{(t_1-t_n)H} - Pbar_{x_1} e^{(t_1-t_2)H} ... Pbar_{x_n}.

    Same positive backward recursion as the heat-chain crossing kernel, with
    the semigroup of -d^2/dx^2 + x in place of the heat semigroup.
    """
    from .airy1 import _heat_panel

    n = len(times)
    Z = zgrid.nodes
    s_last = times[-1] - times[-2]
    if n > 2:
        wg = _heat_panel(zlo, zhi, [levels[-2]], s_last, dens)
        rows = wg.nodes
    else:
        wg = None
        rows = xs
    d = _ham_matrix(s_last, rows, Z)
    d *= (rows > levels[-2])[:, None] | (Z >= levels[-1])[None, :]
    for k in range(n - 3, -1, -1):
        s_k = times[k + 1] - times[k]
        rows2 = xs
        comp = _ham_matrix(s_k, rows2, wg.nodes) @ (wg.weights[:, None] * d)
        direct = _ham_matrix(times[-1] - times[k], rows2, Z)
        d = np.where((rows2 <= levels[k])[:, None], comp, direct)
        wg = None
    return d


def fdd_grouped_airy2(q: Airy2Query, *, grid_m: int = DEFAULT_M) -> DetResult:
    """n-time Airy2 distribution via the grouped one-space determinant.

    det(I - [e^{(t_1-t_n)H} - Pbar_{x_1} e^{(t_1-t_2)H} ... Pbar_{x_n}]
    e^{(t_n-t_1)H} K_Ai); the trailing factor is the single lambda-integral
    int_0^inf e^{-lambda (t_n-t_1)} Ai(x+l) Ai(y+l) dl, convergent because
    the Airy kernel projects on the nonpositive spectrum.  Limited to
    n <= 3 (each semigroup factor is itself a lambda-quadrature).
    """
    if q.n > _GROUPED_MAX_TIMES:
        raise ValueError(
            f"grouped formula supports at most {_GROUPED_MAX_TIMES} times"
        )
    times = np.asarray(q.times, dtype=float)
    levels = np.asarray(q.levels, dtype=float)
    T = float(times[-1] - times[0])
    lo = min(0.0, levels.min()) - CUTOFF_PAD - (T * T + 2.0 * math.sqrt(T))
    hi = max(CUTOFF_PAD, levels.max() + CUTOFF_PAD)
    edges = _split_edges(lo, hi, levels)
    grid = panel_grid(edges, int(math.ceil(_density(grid_m) * (hi - lo))))

    if q.n == 1:
        kernel = k_airy()

        def assemble1(g: QuadGrid) -> np.ndarray:
            vals = kernel.matrix(g.nodes, g.nodes) * (g.nodes > levels[0])[:, None]
            sw = g.sqrt_weights
            return sw[:, None] * vals * sw[None, :]

        return det_of_assembly(assemble1, grid)

    trailing = k2_ext(T, 0.0)

    def assemble(g: QuadGrid) -> np.ndarray:
        from .airy1 import _osc_panel

        X = g.nodes
        dens = _grid_density(g)
        zext = T * T + 8.0 * math.sqrt(T)
        zlo, zhi = g.lo - zext, g.hi + zext
        zgrid = _osc_panel(zlo, zhi, [levels[-1]], dens)
        bracket = _grouped_bracket(times, levels, X, zgrid, zlo, zhi, dens)
        f_vals = trailing.matrix(zgrid.nodes, X)
        kern = bracket @ (zgrid.weights[:, None] * f_vals)
        sw = g.sqrt_weights
        return sw[:, None] * kern * sw[None, :]

    return det_of_assembly(assemble, grid)
