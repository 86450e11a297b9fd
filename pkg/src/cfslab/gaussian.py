"""Exact-in-law Gaussian path generators.

Brownian motion (increment summation and midpoint refinement), fractional
Brownian motion via dense Cholesky of the grid covariance, fractional
Ornstein-Uhlenbeck by pathwise integration by parts, and Brownian bridge
continuations.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg.blas import dtrmm

from .core import (
    BadParams,
    CovarianceNotPD,
    GridMismatch,
    HurstOutOfRange,
    NotPowerOfTwo,
    Path,
    RngStream,
    TimeGrid,
)


@dataclass(frozen=True)
class FbmSpec:
    """Fractional Brownian motion with Hurst index in (0, 1)."""

    hurst: float

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise HurstOutOfRange(f"hurst {self.hurst} not in (0, 1)")


@dataclass(frozen=True)
class FouSpec:
    """Fractional Ornstein-Uhlenbeck: dV = -alpha*V dt + sigma dB^h, V(0)=v0."""

    hurst: float
    alpha: float
    sigma: float
    v0: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise HurstOutOfRange(f"hurst {self.hurst} not in (0, 1)")
        if self.alpha <= 0 or self.sigma < 0:
            raise BadParams("need alpha > 0 and sigma >= 0")


def gen_brownian(grid: TimeGrid, rng: RngStream) -> Path:
    """Standard Brownian motion started at 0 at the first grid node."""
    g = rng.generator()
    inc = g.normal(0.0, np.sqrt(grid.dt), grid.n_steps)
    values = np.concatenate(([0.0], np.cumsum(inc)))
    return Path(grid, values)


def gen_brownian_alt(grid: TimeGrid, rng: RngStream) -> Path:
    """Brownian motion by midpoint (Levy) refinement.

    Same law as gen_brownian but an algorithmically distinct construction:
    the terminal value is drawn first and interior nodes are filled in by
    conditional bisection. n_steps must be a power of two.
    """
    n = grid.n_steps
    if n & (n - 1) != 0:
        raise NotPowerOfTwo(f"n_steps {n} is not a power of two")
    g = rng.generator()
    values = np.zeros(n + 1)
    values[n] = np.sqrt(grid.span) * g.standard_normal()
    step = n
    while step > 1:
        half = step // 2
        left = np.arange(0, n, step)
        mid = left + half
        right = left + step
        span = step * grid.dt
        noise = g.standard_normal(left.size) * np.sqrt(span / 4.0)
        values[mid] = 0.5 * (values[left] + values[right]) + noise
        step = half
    return Path(grid, values)


def fbm_covariance(hurst: float, times: np.ndarray) -> np.ndarray:
    """R(s, t) = (s^2h + t^2h - |t - s|^2h) / 2 on the given times."""
    t = np.asarray(times, dtype=float)
    h2 = 2.0 * hurst
    s, u = np.meshgrid(t, t, indexing="ij")
    return 0.5 * (s ** h2 + u ** h2 - np.abs(s - u) ** h2)


@lru_cache(maxsize=32)
def _fbm_cholesky(hurst: float, grid: TimeGrid) -> np.ndarray:
    cov = fbm_covariance(hurst, np.asarray(grid.nodes[1:]))
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise CovarianceNotPD(
            f"covariance factorization failed for hurst={hurst}, "
            f"n_steps={grid.n_steps}"
        ) from exc
    factor.setflags(write=False)
    return factor


@lru_cache(maxsize=32)
def fbm_conditional_factors(
    hurst: float, grid: TimeGrid, t_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """Operators for sampling fBm nodes after t_index given the nodes up to it.

    Returns (A, L) such that, with p the realized values at nodes 1..t_index,
    the future nodes are A @ p + L @ xi with xi standard normal. At
    t_index = 0 this degenerates to unconditional sampling.
    """
    if t_index == 0:
        empty = np.zeros((grid.n_steps, 0))
        return empty, _fbm_cholesky(hurst, grid)
    cov = fbm_covariance(hurst, np.asarray(grid.nodes[1:]))
    p = t_index
    r_pp = cov[:p, :p]
    r_fp = cov[p:, :p]
    r_ff = cov[p:, p:]
    a = np.linalg.solve(r_pp, r_fp.T).T
    schur = r_ff - a @ r_fp.T
    schur = 0.5 * (schur + schur.T)
    try:
        factor = np.linalg.cholesky(schur)
    except np.linalg.LinAlgError:
        # Conditioning can push tiny eigenvalues below zero numerically.
        w, v = np.linalg.eigh(schur)
        if np.min(w) < -1e-8 * max(1.0, np.max(w)):
            raise CovarianceNotPD(
                f"conditional covariance not PSD for hurst={hurst}"
            )
        factor = v @ np.diag(np.sqrt(np.clip(w, 0.0, None)))
    a.setflags(write=False)
    factor.setflags(write=False)
    return a, factor


def lower_tri_matmul(xi: np.ndarray, factor: np.ndarray) -> np.ndarray:
    """xi @ factor.T, via the BLAS triangular multiply when factor is
    lower triangular (half the flops of a general matmul).

    Falls back to a general matmul for non-triangular factors (the
    eigendecomposition repair path of ``fbm_conditional_factors``).
    """
    if xi.size and factor.size and not np.any(np.triu(factor, 1)):
        return dtrmm(1.0, factor, xi, side=1, lower=1, trans_a=1)
    return xi @ factor.T


def gen_fbm(grid: TimeGrid, spec: FbmSpec, rng: RngStream) -> Path:
    """Fractional Brownian motion, exact on the grid (Cholesky sampling)."""
    if grid.t_start != 0.0:
        raise BadParams("fBm grid must start at 0")
    factor = _fbm_cholesky(spec.hurst, grid)
    z = rng.generator().standard_normal(grid.n_steps)
    values = np.concatenate(([0.0], factor @ z))
    return Path(grid, values)


def fou_from_fbm(grid: TimeGrid, spec: FouSpec, fbm_values: np.ndarray) -> np.ndarray:
    """Build V(t) = v0 e^{-at} + sigma * int_0^t e^{-a(t-s)} dB^h(s).

    The stochastic integral is computed pathwise by integration by parts,
        int_0^t e^{-a(t-s)} dB^h = B^h(t) - a e^{-at} int_0^t e^{as} B^h(s) ds,
    with trapezoidal quadrature for the Riemann integral.
    """
    t = np.asarray(grid.nodes)
    b = np.asarray(fbm_values, dtype=float)
    integrand = np.exp(spec.alpha * t) * b
    cells = 0.5 * (integrand[1:] + integrand[:-1]) * grid.dt
    cum = np.concatenate(([0.0], np.cumsum(cells)))
    stoch = b - spec.alpha * np.exp(-spec.alpha * t) * cum
    return spec.v0 * np.exp(-spec.alpha * t) + spec.sigma * stoch


def gen_fou(grid: TimeGrid, spec: FouSpec, rng: RngStream) -> Path:
    if grid.t_start != 0.0:
        raise BadParams("fOU grid must start at 0")
    fbm = gen_fbm(grid, FbmSpec(spec.hurst), rng)
    return Path(grid, fou_from_fbm(grid, spec, fbm.values))


def bridge_steps(grid_tail: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    """Per-step mean weights and noise scales of a Brownian bridge on the grid.

    Given current value x at node i and pinned terminal value zeta, the next
    node is x + w[i] * (zeta - x) + s[i] * xi. The final step has s = 0 and
    w = 1, so the endpoint is hit exactly.
    """
    t = np.asarray(grid_tail.nodes)
    rem = grid_tail.t_end - t[:-1]
    w = grid_tail.dt / rem
    s2 = grid_tail.dt * (rem - grid_tail.dt) / rem
    w[-1] = 1.0
    s = np.sqrt(np.clip(s2, 0.0, None))
    s[-1] = 0.0
    return w, s


def gen_bridge_continuation(
    history: Path, terminal_value: float, grid_tail: TimeGrid, rng: RngStream
) -> Path:
    """Brownian bridge from (t_under, history end) to (T, terminal_value).

    This is the conditional law of Brownian motion on [t_under, T] given its
    history and its terminal value. The final node equals terminal_value
    exactly, for every seed.
    """
    if abs(history.grid.t_end - grid_tail.t_start) > 1e-12:
        raise GridMismatch("grid_tail must start where history ends")
    start = float(history.values[-1])
    w, s = bridge_steps(grid_tail)
    xi = rng.generator().standard_normal(grid_tail.n_steps)
    values = np.empty(grid_tail.n_nodes)
    values[0] = start
    for i in range(grid_tail.n_steps):
        values[i + 1] = values[i] + w[i] * (terminal_value - values[i]) + s[i] * xi[i]
    values[-1] = terminal_value
    return Path(grid_tail, values)
