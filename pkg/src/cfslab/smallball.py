"""Monte Carlo estimation of conditional small-ball probabilities.

A query asks: restarting at a grid node, what fraction of conditional
continuations stays within a sup-norm tube of radius eps around a target
function? The module also provides the analytic reflection-series value
for Brownian tubes, a time-changed estimator for Wiener integrals, and a
detector for queries whose tube event is provably empty.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BadParams,
    BadQuery,
    Classification,
    DegenerateClock,
    Estimate,
    Path,
    RngStream,
    TimeGrid,
    make_estimate,
    make_grid,
)
from .integrate import qv_clock
from .models import (
    ConditioningContext,
    ModelSpec,
    ModelTag,
    cell_noise_scale,
    iter_continuations,
)

_THIN_STREAM = 101  # child index for excursion-thinning uniforms


def _bridge_survival(d: np.ndarray, eps: float, s2: np.ndarray) -> np.ndarray:
    """P[no within-cell excursion beyond the tube | node values].

    `d` holds deviations at nodes for rows already inside the tube; within
    each cell the path is a Brownian bridge with variance s2, so the exit
    probability is the classical single-barrier reflection term for each
    tube edge. Zero-variance cells cannot exit.
    """
    a, b = d[:, :-1], d[:, 1:]
    with np.errstate(divide="ignore"):
        inv = np.where(s2 > 0.0, 1.0 / np.where(s2 > 0.0, s2, 1.0), np.inf)
    p_up = np.exp(-2.0 * (eps - a) * (eps - b) * inv)
    p_dn = np.exp(-2.0 * (eps + a) * (eps + b) * inv)
    return np.prod(np.clip(1.0 - p_up - p_dn, 0.0, 1.0), axis=1)


def _thinning_uniforms(rng: RngStream, start: int, n_rows: int,
                       n_groups: int) -> np.ndarray:
    u = np.empty((n_rows, n_groups))
    for row in range(n_rows):
        g = rng.child(start + row).child(_THIN_STREAM).generator()
        u[row] = g.uniform(size=n_groups)
    return u


@dataclass(frozen=True)
class SmallBallQuery:
    """Tube query: target on the tail grid with target(t_under) = 0."""

    t_index: int
    target: Path
    eps: float

    def __post_init__(self):
        if self.eps <= 0:
            raise BadQuery("eps must be positive")
        if self.target.values[0] != 0.0:
            raise BadQuery("target must vanish at the restart node")


REASON_POSITIVITY = "POSITIVITY"
REASON_ENDPOINT_PIN = "ENDPOINT_PIN"


def detect_analytic_zero(
    spec: ModelSpec, ctx: ConditioningContext, q: SmallBallQuery
) -> str | None:
    """Return a reason when the tube event is provably empty.

    For strictly positive processes reported in R, the tube is empty as
    soon as its upper edge dips below zero somewhere. For the pinned
    bridge, the tube is empty when the target misses the pinned terminal
    increment by at least eps.
    """
    if spec.positive_state:
        if np.any(ctx.z_t + q.target.values + q.eps <= 0.0):
            return REASON_POSITIVITY
    if spec.tag is ModelTag.BRIDGE_CE:
        pinned = float(ctx.frozen["terminal"]) - ctx.z_t
        if abs(float(q.target.values[-1]) - pinned) >= q.eps:
            return REASON_ENDPOINT_PIN
    return None


def estimate_many(
    spec: ModelSpec,
    ctx: ConditioningContext,
    queries: list[SmallBallQuery],
    reps: int,
    rng: RngStream,
    chunk_size: int = 1024,
    z: float = 1.96,
) -> list[Estimate]:
    """Estimate several tube queries on shared conditional continuations.

    All queries are evaluated on the same replication paths (one stream
    per replication index), so estimates are coherent across queries:
    shrinking eps can only shrink the hit set, and shifting the target is
    identical to shifting the paths.

    When the model's within-cell noise is conditionally Brownian with a
    known scale, node hits are thinned by the bridge exit probability, so
    the estimator targets the continuous-time sup rather than the grid
    maximum. Queries sharing a target share the thinning uniform, which
    preserves monotonicity of the hit set in eps.
    """
    if reps < 1:
        raise BadParams("reps must be >= 1")
    if not queries:
        return []
    t_indices = {q.t_index for q in queries}
    if t_indices != {ctx.t_index}:
        raise BadQuery(
            f"queries restart at {sorted(t_indices)}, context at {ctx.t_index}")
    grid_tail = queries[0].target.grid
    reasons = [detect_analytic_zero(spec, ctx, q) for q in queries]
    live = [i for i, r in enumerate(reasons) if r is None]
    hits = np.zeros(len(queries), dtype=np.int64)
    if live:
        targets = np.stack([queries[i].target.values for i in live])
        eps = np.array([queries[i].eps for i in live])
        scales = cell_noise_scale(spec, ctx, grid_tail)
        s2 = None if scales is None else scales ** 2
        groups: dict[bytes, int] = {}
        group_of = [groups.setdefault(targets[row].tobytes(), len(groups))
                    for row in range(len(live))]
        members: list[list[int]] = [[] for _ in range(len(groups))]
        for row, gi in enumerate(group_of):
            members[gi].append(row)
        buf: np.ndarray | None = None
        for start, block in iter_continuations(
            spec, ctx, grid_tail, rng, reps, chunk_size
        ):
            rel = block - block[:, :1]
            u = (None if s2 is None else
                 _thinning_uniforms(rng, start, block.shape[0], len(groups)))
            if buf is None or buf.shape != rel.shape:
                buf = np.empty_like(rel)
            # One deviation pass per distinct target; queries differing only
            # in eps reuse it, which keeps hit sets nested across radii.
            for gi, rows in enumerate(members):
                np.subtract(rel, targets[rows[0]][None, :], out=buf)
                if s2 is None:
                    np.abs(buf, out=buf)
                    dev = buf.max(axis=1)
                    for row in rows:
                        hits[live[row]] += int(np.count_nonzero(dev < eps[row]))
                else:
                    dev = np.abs(buf).max(axis=1)
                    for row in rows:
                        e = float(eps[row])
                        idx = np.nonzero(dev < e)[0]
                        surv = _bridge_survival(buf[idx], e, s2)
                        hits[live[row]] += int(
                            np.count_nonzero(u[idx, gi] < surv))
    return [
        make_estimate(int(hits[i]), reps, z, analytic_zero_reason=reasons[i])
        for i in range(len(queries))
    ]


def estimate_smallball(
    spec: ModelSpec,
    ctx: ConditioningContext,
    q: SmallBallQuery,
    reps: int,
    rng: RngStream,
) -> Estimate:
    """Monte Carlo estimate of one conditional tube probability."""
    return estimate_many(spec, ctx, [q], reps, rng)[0]


def brownian_smallball_series(k_total: float, eps: float) -> float:
    """P[sup over [0, K] of |B| < eps] by the classical reflection series.

    (4/pi) * sum_{n>=0} (-1)^n / (2n+1) * exp(-(2n+1)^2 pi^2 K / (8 eps^2)),
    truncated when terms drop below 1e-15.
    """
    if k_total < 0 or eps <= 0:
        raise BadParams("need K >= 0 and eps > 0")
    if k_total == 0.0:
        return 1.0
    rate = np.pi ** 2 * k_total / (8.0 * eps ** 2)
    total = 0.0
    n = 0
    while True:
        term = (4.0 / np.pi) * (-1.0) ** n / (2 * n + 1) * np.exp(
            -((2 * n + 1) ** 2) * rate)
        total += term
        if abs(term) < 1e-15:
            break
        n += 1
        if n > 10_000:
            break
    return float(min(1.0, max(0.0, total)))


def timechanged_smallball(
    k: Path, f: Path, eps: float, reps: int, rng: RngStream,
    chunk_size: int = 1024,
) -> Estimate:
    """Tube probability of int k dW via the quadratic-variation clock.

    The integral is a Brownian motion run on the clock g(t) = int k^2 ds,
    so the tube around f equals the Brownian tube around f composed with
    the inverse clock, on [0, K]. The inverse clock is computed by
    monotone piecewise-linear inversion; plateau cells collapse. Node hits
    are thinned by the within-cell bridge exit probability, matching the
    corrected direct estimator.
    """
    if eps <= 0:
        raise BadParams("eps must be positive")
    clock = qv_clock(k)
    k_total = clock.total
    if k_total <= 0:
        raise DegenerateClock("integrand has zero quadratic variation")
    grid_u = make_grid(0.0, k_total, k.grid.n_steps)
    target_u = np.interp(np.asarray(grid_u.nodes), clock.g, f.values)
    hits = 0
    sdt = np.sqrt(grid_u.dt)
    s2 = np.full(grid_u.n_steps, grid_u.dt)
    for start in range(0, reps, chunk_size):
        stop = min(start + chunk_size, reps)
        streams = [rng.child(r) for r in range(start, stop)]
        block = np.empty((len(streams), grid_u.n_steps))
        for r, s in enumerate(streams):
            block[r] = s.generator().standard_normal(grid_u.n_steps)
        w = np.concatenate(
            (np.zeros((len(streams), 1)), np.cumsum(block * sdt, axis=1)), axis=1)
        d = w - target_u[None, :]
        inside = np.max(np.abs(d), axis=1) < eps
        idx = np.nonzero(inside)[0]
        surv = _bridge_survival(d[idx], eps, s2)
        u = _thinning_uniforms(rng, start, stop - start, 1)[:, 0]
        hits += int(np.count_nonzero(u[idx] < surv))
    return make_estimate(hits, reps)


def mc_tube_probability(
    sample_path, grid: TimeGrid, f: Path, eps: float, reps: int, rng: RngStream
) -> Estimate:
    """Plain Monte Carlo tube estimate for an arbitrary path sampler.

    `sample_path(grid, stream)` must return a Path; replication r uses
    stream rng.child(r).
    """
    hits = 0
    fv = f.values
    for r in range(reps):
        p = sample_path(grid, rng.child(r))
        dev = float(np.max(np.abs(p.values - p.values[0] - fv)))
        if dev < eps:
            hits += 1
    return make_estimate(hits, reps)
