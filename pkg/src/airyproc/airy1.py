"""Distributions and diagnostics of the flat-geometry (Airy1) process.

Two independent determinant routes are provided for finite-dimensional
distributions: the extended-kernel block determinant (`fdd_extended`) and
the one-space path formula with interleaved projections
(`fdd_path_integral`).  They agree to ~1e-8 and serve as mutual oracles.

The path-formula operator B0 - Lambda exp(-T Delta) B0 is assembled in its
factored "crossing" form (exp(T Delta) - Lambda) o (exp(-T Delta) B0):
the first factor is built multiplicatively (heat kernels times survival
factors, never differences of near-equal quantities), which keeps the
entrywise relative error at machine scale.  The exponential tilt of
exp(-T Delta) B0 shifts the composition saddle to x - 2T^2, so the inner
quadrature panels and the lower grid cutoff extend 2T^2 below the usual
level-based cutoff; rows and columns are conjugated at rate T, which makes
the assembled kernel O(1) and the grid truncation convergent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache as _lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateConditioningError
from .fredholm import (
    DetResult,
    DiscreteOperator,
    _det_value,
    det_of_assembly,
    panel_grid,
    resolve,
)
from .kernels import b0, exp_neg_laplace_b0, k1_ext, killed_segment, BarrierSegment
from .quadrature import CUTOFF_PAD, DEFAULT_M, QuadGrid, gauss_legendre
from .specfun import airy_ai

__all__ = [
    "FddQuery",
    "Barrier",
    "ScalingDiagnostics",
    "marginal_cdf",
    "fdd_path_integral",
    "fdd_extended",
    "hitting_continuum",
    "hitting_discrete_chain",
    "conditional_fdd",
    "increment_moment",
    "local_scaling_diagnostics",
    "goe_cdf_and_derivative",
]

_PTS_PER_WAVE = 5.0
_HEAT_PTS_PER_SIGMA = 2.4
_EDGE_EPS = 1e-6


@dataclass(frozen=True)
class FddQuery:
    """Ordered times with one level per time."""

    times: tuple
    levels: tuple

    def __init__(self, times: Sequence[float], levels: Sequence[float]):
        t = tuple(float(v) for v in times)
        x = tuple(float(v) for v in levels)
        if len(t) != len(x) or len(t) < 1:
            raise ValueError("times and levels must have equal length >= 1")
        if any(not np.isfinite(v) for v in t + x):
            raise ValueError("times and levels must be finite")
        if any(b - a <= 0 for a, b in zip(t[:-1], t[1:])):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "levels", x)

    @property
    def n(self) -> int:
        return len(self.times)

    def shifted(self, c: float) -> "FddQuery":
        return FddQuery([t + c for t in self.times], self.levels)


@dataclass(frozen=True)
class Barrier:
    """Piecewise-linear barrier on [ell, r] given by its breakpoints."""

    breakpoints: tuple

    def __init__(self, breakpoints: Sequence[Sequence[float]]):
        pts = tuple((float(t), float(h)) for t, h in breakpoints)
        if len(pts) < 2:
            raise ValueError("a barrier needs at least two breakpoints")
        times = [t for t, _ in pts]
        if any(b - a <= 0 for a, b in zip(times[:-1], times[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        if any(not np.isfinite(v) for p in pts for v in p):
            raise ValueError("breakpoints must be finite")
        object.__setattr__(self, "breakpoints", pts)

    @property
    def ell(self) -> float:
        return self.breakpoints[0][0]

    @property
    def r(self) -> float:
        return self.breakpoints[-1][0]

    def value(self, t) -> np.ndarray:
        times = np.array([p[0] for p in self.breakpoints])
        heights = np.array([p[1] for p in self.breakpoints])
        return np.interp(t, times, heights)

    def segments(self) -> list[BarrierSegment]:
        out = []
        for (t0, g0), (t1, g1) in zip(self.breakpoints[:-1], self.breakpoints[1:]):
            out.append(BarrierSegment(t0=t0, t1=t1, g0=g0, g1=g1))
        return out


@dataclass(frozen=True)
class ScalingDiagnostics:
    """Local Brownian scaling quantities at one epsilon."""

    epsilon: float
    g_val: float
    h_val: float
    gaussian_gap: float
    diffusion_fit: float


# ---------------------------------------------------------------------------
# grid construction


def _density(grid_m: int) -> float:
    return grid_m / (2.0 * CUTOFF_PAD)


def _grid_density(grid: QuadGrid) -> float:
    return grid.m / (grid.hi - grid.lo)


def _split_edges(lo: float, hi: float, cuts: Sequence[float]) -> list[float]:
    inner = sorted({c for c in cuts if lo + _EDGE_EPS < c < hi - _EDGE_EPS})
    return [lo] + inner + [hi]


def _detgrid(levels: Sequence[float], T: float, grid_m: int) -> QuadGrid:
    """Full-line determinant grid, panel edges at the levels.

    The lower cutoff extends 2T^2 + 2 sqrt(T) below the usual padding: the
    tilted kernel exp(-T Delta) B0 makes the operator act that far down.
    """
    lv = np.asarray(levels, dtype=float)
    lo = min(0.0, lv.min()) - CUTOFF_PAD - (2.0 * T * T + 2.0 * math.sqrt(max(T, 0.0)))
    hi = max(CUTOFF_PAD, lv.max() + CUTOFF_PAD)
    edges = _split_edges(lo, hi, lv)
    return panel_grid(edges, int(math.ceil(_density(grid_m) * (hi - lo))))


def _osc_panel(lo: float, hi: float, cuts: Sequence[float], dens_floor: float) -> QuadGrid:
    """Panelled rule resolving Airy oscillation down to argument 2*lo."""
    wavelength = math.pi / math.sqrt(max(1.0, -2.0 * lo))
    dens = max(_PTS_PER_WAVE / wavelength, dens_floor)
    edges = _split_edges(lo, hi, cuts)
    return panel_grid(edges, int(math.ceil(dens * (hi - lo))))


def _heat_panel(
    lo: float, hi: float, cuts: Sequence[float], s: float, dens_floor: float
) -> QuadGrid:
    """Panelled rule resolving a heat kernel of time step s."""
    dens = max(_HEAT_PTS_PER_SIGMA / math.sqrt(2.0 * s), dens_floor)
    edges = _split_edges(lo, hi, cuts)
    return panel_grid(edges, int(math.ceil(dens * (hi - lo))))


def _heatmat(s: float, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    pref = 1.0 / math.sqrt(4.0 * math.pi * s)
    return pref * np.exp(-((xs[:, None] - zs[None, :]) ** 2) / (4.0 * s))


# ---------------------------------------------------------------------------
# crossing-kernel assembly (exp(T Delta) - Lambda, in multiplicative form)


def _chain_crossing(
    times: np.ndarray,
    levels: np.ndarray,
    xs: np.ndarray,
    zgrid: QuadGrid,
    zlo: float,
    zhi: float,
    dens: float,
) -> np.ndarray:
    """Kernel of exp(T Delta) - Pbar_{x_1} e^{s_1 Delta} ... Pbar_{x_n}.

    Built by the backward recursion
    D_k = P_{x_k} e^{(t_n - t_k) Delta} + Pbar_{x_k} e^{s_k Delta} D_{k+1},
    which contains only nonnegative terms, so no cancellation occurs even
    where the crossing kernel is exponentially small.
    """
    n = len(times)
    Z = zgrid.nodes
    s_last = times[-1] - times[-2]
    if n > 2:
        wg = _heat_panel(zlo, zhi, [levels[-2]], s_last, dens)
        rows = wg.nodes
    else:
        wg = None
        rows = xs
    d = _heatmat(s_last, rows, Z)
    d *= (rows > levels[-2])[:, None] | (Z >= levels[-1])[None, :]
    for k in range(n - 3, -1, -1):
        s_k = times[k + 1] - times[k]
        if k > 0:
            wg2 = _heat_panel(zlo, zhi, [levels[k]], s_k, dens)
            rows2 = wg2.nodes
        else:
            wg2 = None
            rows2 = xs
        comp = _heatmat(s_k, rows2, wg.nodes) @ (wg.weights[:, None] * d)
        direct = _heatmat(times[-1] - times[k], rows2, Z)
        d = np.where((rows2 <= levels[k])[:, None], comp, direct)
        wg = wg2
    return d


def _barrier_crossing(
    barrier: Barrier,
    xs: np.ndarray,
    zgrid: QuadGrid,
    zlo: float,
    zhi: float,
    dens: float,
) -> np.ndarray:
    """Kernel of exp((r-ell) Delta) - Lambda^g for a piecewise-linear barrier.

    Lambda^g is the composition of killed linear-barrier propagators over the
    barrier's segments (exact by the Markov property); the crossing kernel is
    the difference from the free heat kernel.
    """
    segs = barrier.segments()
    Z = zgrid.nodes
    lam = None
    rows = xs
    for i, seg in enumerate(segs):
        last = i == len(segs) - 1
        cols_grid = (
            zgrid if last else _heat_panel(zlo, seg.g1, [], seg.span, dens)
        )
        vals = killed_segment(seg).matrix(rows, cols_grid.nodes)
        if lam is None:
            lam = vals
        else:
            lam = lam @ (prev_w[:, None] * vals)
        prev_w = cols_grid.weights
        rows = cols_grid.nodes
    span = barrier.r - barrier.ell
    return _heatmat(span, xs, Z) - lam


def _path_kernel_matrix(
    grid: QuadGrid,
    T: float,
    crossing: Callable[[np.ndarray, QuadGrid, float, float, float], np.ndarray],
    z_cut: float,
) -> np.ndarray:
    """Conjugated Nystrom matrix of (e^{T Delta} - Lambda) e^{-T Delta} B0."""
    X = grid.nodes
    dens = _grid_density(grid)
    zext = 2.0 * T * T + 8.0 * math.sqrt(T)
    zlo, zhi = grid.lo - zext, grid.hi + zext
    zgrid = _osc_panel(zlo, zhi, [z_cut], dens)
    c = crossing(X, zgrid, zlo, zhi, dens)
    g_vals = exp_neg_laplace_b0(T).matrix(zgrid.nodes, X)
    k = c @ (zgrid.weights[:, None] * g_vals)
    k *= np.exp(-T * (X[:, None] - X[None, :]))
    sw = grid.sqrt_weights
    return sw[:, None] * k * sw[None, :]


def _masked_b0_matrix(grid: QuadGrid, level: float) -> np.ndarray:
    vals = b0().matrix(grid.nodes, grid.nodes) * (grid.nodes > level)[:, None]
    sw = grid.sqrt_weights
    return sw[:, None] * vals * sw[None, :]


# ---------------------------------------------------------------------------
# public operations


def marginal_cdf(x: float, *, grid_m: int = DEFAULT_M) -> DetResult:
    """One-point distribution P(A1(0) <= x), equal to F_GOE(2x).

    Fredholm determinant of I - B0 restricted to [x, infinity).
    """
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    hi = max(CUTOFF_PAD, x + CUTOFF_PAD)
    grid = gauss_legendre(grid_m, x, hi)

    def assemble(g: QuadGrid) -> np.ndarray:
        sw = g.sqrt_weights
        return sw[:, None] * b0().matrix(g.nodes, g.nodes) * sw[None, :]

    return det_of_assembly(assemble, grid)


def fdd_path_integral(q: FddQuery, *, grid_m: int = DEFAULT_M) -> DetResult:
    """n-time distribution by the one-space projection-chain determinant."""
    times = np.asarray(q.times, dtype=float)
    levels = np.asarray(q.levels, dtype=float)
    T = float(times[-1] - times[0])
    grid = _detgrid(levels, T, grid_m)
    if q.n == 1:
        return det_of_assembly(lambda g: _masked_b0_matrix(g, levels[0]), grid)

    def crossing(xs, zgrid, zlo, zhi, dens):
        return _chain_crossing(times, levels, xs, zgrid, zlo, zhi, dens)

    return det_of_assembly(
        lambda g: _path_kernel_matrix(g, T, crossing, levels[-1]), grid
    )


def _extended_grid(
    times: np.ndarray, levels: np.ndarray, grid_m: int
) -> QuadGrid:
    lo = float(levels.min())
    hi = max(CUTOFF_PAD, levels.max() + CUTOFF_PAD) + (times[-1] - times[0]) ** 2
    gaps = np.diff(times)
    dens = _density(grid_m)
    if gaps.size and gaps.min() > 0:
        dens = max(dens, _HEAT_PTS_PER_SIGMA / math.sqrt(2.0 * gaps.min()))
    edges = _split_edges(lo, hi, levels)
    return panel_grid(edges, int(math.ceil(dens * (hi - lo))))


def fdd_extended(q: FddQuery, *, grid_m: int = DEFAULT_M) -> DetResult:
    """n-time distribution by the extended-kernel block determinant."""
    from .fredholm import block_discretize

    times = np.asarray(q.times, dtype=float)
    levels = np.asarray(q.levels, dtype=float)
    kmat = [[k1_ext(ti, tj) for tj in times] for ti in times]
    grid = _extended_grid(times, levels, grid_m)

    def assemble(g: QuadGrid) -> np.ndarray:
        return block_discretize(kmat, levels, g, times=times).matrix

    return det_of_assembly(assemble, grid)


def hitting_continuum(b: Barrier, *, grid_m: int = DEFAULT_M) -> DetResult:
    """P(A1(t) <= g(t) for all t in [ell, r]) for a piecewise-linear g."""
    span = b.r - b.ell
    heights = np.array([h for _, h in b.breakpoints])
    grid = _detgrid(heights, span, grid_m)

    def crossing(xs, zgrid, zlo, zhi, dens):
        return _barrier_crossing(b, xs, zgrid, zlo, zhi, dens)

    g_r = float(b.breakpoints[-1][1])
    return det_of_assembly(
        lambda g: _path_kernel_matrix(g, span, crossing, g_r), grid
    )


def hitting_discrete_chain(b: Barrier, n: int, *, grid_m: int = DEFAULT_M) -> DetResult:
    """Barrier probability sampled at n equally spaced times on [ell, r].

    Nonincreasing in n (nested events) and converging to
    :func:`hitting_continuum` along n = 2^k.
    """
    if n < 2:
        raise ValueError("need n >= 2 chain times")
    times = np.linspace(b.ell, b.r, n)
    levels = b.value(times)
    q = FddQuery(times, levels)
    return fdd_path_integral(q, grid_m=grid_m)


# ---------------------------------------------------------------------------
# conditioning machinery


def goe_cdf_and_derivative(x: float, *, grid_m: int = DEFAULT_M) -> tuple[float, float]:
    """(F_GOE(2x), d/dx F_GOE(2x)) via the resolvent identity.

    The derivative is F_GOE(2x) * int du B0(x, u) (I - B0 + Pbar_x B0)^{-1}(u, x),
    evaluated with a half-line resolvent solve.  (The sign is fixed so the
    derivative of the CDF is positive; it is cross-checked against finite
    differences in the tests.)
    """
    hi = max(CUTOFF_PAD, x + CUTOFF_PAD)
    grid = gauss_legendre(grid_m, x, hi)
    sw = grid.sqrt_weights
    vals = b0().matrix(grid.nodes, grid.nodes)
    mat = sw[:, None] * vals * sw[None, :]
    f = _det_value(mat)
    col = airy_ai(grid.nodes + x)
    sol = resolve(DiscreteOperator(matrix=mat, grid=grid), sw * col)
    integral = airy_ai(2.0 * x) + float(np.sum(sw * col * sol))
    return f, f * integral


def _conditional_machinery(x: float, q: FddQuery, grid_m: int):
    """Shared pieces of the point-conditioned formulas.

    Returns (joint, trace, f_goe, dfdx) for the query conditioned on
    A1(0) = x: ``joint`` is the (n+1)-point probability at times (0, t) and
    levels (x, x + y); ``trace`` is the rank-one resolvent trace.
    """
    times = np.array([0.0] + list(q.times))
    levels = np.array([x] + [x + y for y in q.levels])
    T = float(times[-1])
    grid = _detgrid(levels, T, grid_m)
    X = grid.nodes
    dens = _grid_density(grid)
    zext = 2.0 * T * T + 8.0 * math.sqrt(T)
    zlo, zhi = grid.lo - zext, grid.hi + zext
    zgrid = _osc_panel(zlo, zhi, [levels[-1]], dens)

    c = _chain_crossing(times, levels, X, zgrid, zlo, zhi, dens)
    g_on_X = exp_neg_laplace_b0(T).matrix(zgrid.nodes, X)
    kern = c @ (zgrid.weights[:, None] * g_on_X)
    conj = np.exp(-T * (X[:, None] - X[None, :]))
    sw = grid.sqrt_weights
    mat = sw[:, None] * (kern * conj) * sw[None, :]
    joint = _det_value(mat)

    # resolvent column sigma = (I - L)^{-1} L(., x), solved in conjugated form
    g_col = exp_neg_laplace_b0(T).matrix(zgrid.nodes, np.array([x]))[:, 0]
    l_col = c @ (zgrid.weights * g_col)
    rhs = sw * np.exp(-T * (X - x)) * l_col
    sol = resolve(DiscreteOperator(matrix=mat, grid=grid), rhs)
    sigma = np.exp(T * (X - x)) * sol / sw

    # row of M = e^{t_1 Delta} Lambda_t^{y+x} e^{-t_n Delta} B0 at the point x
    inner_times = times[1:]
    inner_levels = levels[1:]
    row_nodes = np.concatenate((X, [x]))
    lead = float(inner_times[0])
    cur = None
    prev_nodes = np.array([x])
    prev_w = None
    steps = [lead] + list(np.diff(inner_times))
    for s_k, lvl in zip(steps, inner_levels):
        panel = _heat_panel(zlo, lvl, [], s_k, dens)
        h = _heatmat(s_k, prev_nodes, panel.nodes)
        cur = h if cur is None else cur @ (prev_w[:, None] * h)
        prev_nodes = panel.nodes
        prev_w = panel.weights
    g_rows = exp_neg_laplace_b0(T).matrix(prev_nodes, row_nodes)
    m_row = (cur @ (prev_w[:, None] * g_rows))[0]

    trace = m_row[-1] + float(np.sum(grid.weights * m_row[:-1] * sigma))
    f_goe, dfdx = goe_cdf_and_derivative(x, grid_m=grid_m)
    return joint, trace, f_goe, dfdx


_DERIVATIVE_FLOOR = 1e-8


def conditional_fdd(x: float, q: FddQuery, *, grid_m: int = DEFAULT_M) -> float:
    """P(A1(t_1) <= x + y_1, ..., A1(t_n) <= x + y_n | A1(0) = x).

    Ratio of the h-derivative of the (n+1)-point determinant at level h = x
    to the one-point density d/dx F_GOE(2x); the derivative is evaluated by
    the rank-one resolvent trace, not by finite differences.  The query's
    levels are offsets from the conditioning point.
    """
    if q.times[0] <= 0:
        raise ValueError("conditional times must be positive")
    joint, trace, _, dfdx = _conditional_machinery(x, q, grid_m)
    if abs(dfdx) < _DERIVATIVE_FLOOR:
        raise DegenerateConditioningError(
            f"one-point density at x={x} is below {_DERIVATIVE_FLOOR}"
        )
    return joint * trace / dfdx


def local_scaling_diagnostics(
    x: float,
    t: float,
    y: float,
    epsilon: float,
    *,
    grid_m: int = DEFAULT_M,
    gap_panel: Sequence[float] = (-2.0, -1.0, 0.0, 1.0, 2.0),
) -> ScalingDiagnostics:
    """Diffusive-scaling diagnostics at scale epsilon.

    h is the joint probability at times (0, eps*t), levels (x, x+sqrt(eps)*y)
    divided by F_GOE(2x); g is the ratio of the tilted-kernel resolvent
    integral at the scaled endpoint to its unconditioned (marginal) value.
    Both tend to 1 as epsilon -> 0.  The Gaussian gap is the sup distance of
    the scaled conditional one-point CDF over ``gap_panel`` to a centered
    Gaussian CDF with fitted diffusion constant (recorded in
    ``diffusion_fit``; the heat-kernel convention suggests 2).
    """
    if not (0 < epsilon <= 1):
        raise ValueError("epsilon must be in (0, 1]")
    if t <= 0:
        raise ValueError("t must be positive")
    q = FddQuery([epsilon * t], [math.sqrt(epsilon) * y])
    joint, _, f_goe, dfdx = _conditional_machinery(x, q, grid_m)
    h_val = joint / f_goe

    # g: numerator integral with rows at sqrt(eps) z + x (z := y), denominator
    # is the marginal resolvent integral = -[d/dx F_GOE(2x)] / F_GOE(2x)
    num = _g_numerator(x, q, math.sqrt(epsilon) * y + x, grid_m)
    den = dfdx / f_goe
    g_val = num / den

    cdf = np.array(
        [
            conditional_fdd(
                x, FddQuery([epsilon * t], [math.sqrt(epsilon) * yy]), grid_m=grid_m
            )
            for yy in gap_panel
        ]
    )
    fit = _fit_diffusion(np.asarray(gap_panel, dtype=float), cdf, t)
    from scipy.stats import norm

    gap = float(
        np.max(np.abs(cdf - norm.cdf(np.asarray(gap_panel) / math.sqrt(fit * t))))
    )
    return ScalingDiagnostics(
        epsilon=float(epsilon),
        g_val=float(g_val),
        h_val=float(h_val),
        gaussian_gap=gap,
        diffusion_fit=float(fit),
    )


def _g_numerator(x: float, q: FddQuery, row_point: float, grid_m: int) -> float:
    """int du e^{-T Delta} B0(row_point, u) (I - L)^{-1}(u, x) for the scaled chain."""
    times = np.array([0.0] + list(q.times))
    levels = np.array([x] + [x + y for y in q.levels])
    T = float(times[-1])
    grid = _detgrid(levels, T, grid_m)
    X = grid.nodes
    dens = _grid_density(grid)
    zext = 2.0 * T * T + 8.0 * math.sqrt(T)
    zlo, zhi = grid.lo - zext, grid.hi + zext
    zgrid = _osc_panel(zlo, zhi, [levels[-1]], dens)
    c = _chain_crossing(times, levels, X, zgrid, zlo, zhi, dens)
    g_on_X = exp_neg_laplace_b0(T).matrix(zgrid.nodes, X)
    kern = c @ (zgrid.weights[:, None] * g_on_X)
    conj = np.exp(-T * (X[:, None] - X[None, :]))
    sw = grid.sqrt_weights
    mat = sw[:, None] * (kern * conj) * sw[None, :]

    g_col = exp_neg_laplace_b0(T).matrix(zgrid.nodes, np.array([x]))[:, 0]
    l_col = c @ (zgrid.weights * g_col)
    rhs = sw * np.exp(-T * (X - x)) * l_col
    sol = resolve(DiscreteOperator(matrix=mat, grid=grid), rhs)
    sigma = np.exp(T * (X - x)) * sol / sw

    row = exp_neg_laplace_b0(T).matrix(np.array([row_point]), np.concatenate((X, [x])))[0]
    return row[-1] + float(np.sum(grid.weights * row[:-1] * sigma))


def _fit_diffusion(ys: np.ndarray, cdf: np.ndarray, t: float) -> float:
    """Least-squares diffusion constant for cdf(y) ~ Phi(y / sqrt(c t))."""
    from scipy.optimize import minimize_scalar
    from scipy.stats import norm

    def loss(c):
        return float(np.sum((cdf - norm.cdf(ys / math.sqrt(c * t))) ** 2))

    res = minimize_scalar(loss, bounds=(0.05, 10.0), method="bounded")
    return float(res.x)


# ---------------------------------------------------------------------------
# increment moments


_MOMENT_CUT = 6.0
_MOMENT_OUTER = 24
_MOMENT_INNER = 16


def _two_point_cdf(t: float, a: float, bb: float, grid_m: int) -> float:
    """P(A1(0) <= a, A1(t) <= bb) at a single resolution (no error estimate)."""
    from .fredholm import block_discretize

    grid = _extended_grid(np.array([0.0, t]), np.array([a, bb]), grid_m)
    kmat = [[k1_ext(ti, tj) for tj in (0.0, t)] for ti in (0.0, t)]
    return _det_value(block_discretize(kmat, [a, bb], grid, times=[0.0, t]).matrix)


def _marginal_value(a: float, grid_m: int) -> float:
    hi = max(CUTOFF_PAD, a + CUTOFF_PAD)
    gr = gauss_legendre(grid_m, a, hi)
    sw = gr.sqrt_weights
    return _det_value(sw[:, None] * b0().matrix(gr.nodes, gr.nodes) * sw[None, :])


@_lru_cache(maxsize=8)
def _moment_tables(t: float, grid_m: int):
    """Two-point CDF tables entering the moment identity, shared across orders."""
    m_cut = _MOMENT_CUT
    outer = gauss_legendre(_MOMENT_OUTER, -m_cut, m_cut)
    g_vals = np.array([_marginal_value(a, grid_m) for a in outer.nodes])
    g_floor = _marginal_value(-m_cut, grid_m)
    f_floor = np.array(
        [_two_point_cdf(t, a, -m_cut, grid_m) for a in outer.nodes]
    )
    inner_rules = [gauss_legendre(_MOMENT_INNER, a, m_cut) for a in outer.nodes]
    f_tri = np.array(
        [
            [_two_point_cdf(t, a, bb, grid_m) for bb in rule.nodes]
            for a, rule in zip(outer.nodes, inner_rules)
        ]
    )
    return outer, g_vals, g_floor, f_floor, inner_rules, f_tri


def increment_moment(t: float, order: int, *, grid_m: int = DEFAULT_M) -> float:
    """E[(A1(t) - A1(0))^order] for order in {2, 4}, t in (0, 2].

    Integrates the two-point distribution against the polynomial weights of
    the integrated-by-parts moment identity, with the (a, b) domain truncated
    at +/- 6 (the GOE tails push the remainder far below the quadrature
    error).  The two-point values come from the extended-kernel determinant
    and are cached per t, so both orders share one table.
    """
    if not (0 < t <= 2):
        raise ValueError("t must lie in (0, 2]")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    n = order // 2
    m_cut = _MOMENT_CUT
    outer, g_vals, g_floor, f_floor, inner_rules, f_tri = _moment_tables(
        float(t), int(grid_m)
    )
    # boundary term at the lower truncation
    i1 = float(
        np.sum(outer.weights * (outer.nodes + m_cut) ** (2 * n - 1) * (g_floor - f_floor))
    )
    # double integral over the a < b triangle (interchange symmetry gives x2)
    i2 = 0.0
    for a, wa, ga, rule, frow in zip(
        outer.nodes, outer.weights, g_vals, inner_rules, f_tri
    ):
        i2 += 2.0 * wa * float(
            np.sum(rule.weights * (a - rule.nodes) ** (2 * n - 2) * (ga - frow))
        )
    return 4 * n * i1 + 2 * n * (2 * n - 1) * i2
