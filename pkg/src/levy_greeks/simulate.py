"""Exact path simulation for the exponential Levy jump-diffusion.

Paths are simulated on a base time grid of ``steps`` uniform intervals,
with every jump time inserted as an extra node. Brownian values at jump
times are drawn by bridge conditioning between the already-known
neighbouring nodes, so no Euler discretization error enters the jump
handling; the only grid effect is the linear interpolation used later
by the path functionals.

Randomness is counter-based and per-path: path ``i`` under master seed
``s`` reads from Philox streams keyed ``(s, i)``, with a disjoint
counter block per draw category (jump count, jump times, jump marks,
grid increments, bridge draws). Consequences:

* results are independent of batch or worker scheduling,
* a parameter bump reuses the same underlying draws (common random
  numbers), because no category's consumption can shift another's,
* the jump count is inverted from a single uniform through the Poisson
  CDF, so a bump of ``lam * T`` moves the count monotonically instead
  of resampling it.

Antithetic variates negate the stored Gaussian draws (grid increments
and bridge draws) and reuse the jump structure unchanged.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .model import ModelParams, effective_drift

__all__ = [
    "GridSpec",
    "PathStreams",
    "PathSample",
    "derive_stream",
    "simulate_path",
    "antithetic_pair",
]

# Draw categories (Philox counter block, third counter word).
CAT_COUNT = 1
CAT_TIMES = 2
CAT_MARKS = 3
CAT_GRID = 4
CAT_BRIDGE = 5

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class GridSpec:
    """Base time grid with ``steps`` uniform intervals on [0, T]."""

    steps: int

    def __post_init__(self) -> None:
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ValueError("steps must be an integer >= 1")


@dataclass(frozen=True)
class PathStreams:
    """Per-path random streams derived from (master_seed, path_index).

    The mapping is stateless and injective: every (seed, index) pair
    owns a distinct Philox key, and each draw category reads from its
    own counter block of that key.
    """

    master_seed: int
    path_index: int

    def category_gen(self, category: int) -> np.random.Generator:
        bitgen = np.random.Philox(
            key=np.array([self.master_seed & _MASK64, self.path_index & _MASK64],
                         dtype=_U64),
            counter=np.array([0, 0, category, 0], dtype=_U64),
        )
        return np.random.Generator(bitgen)


def derive_stream(master_seed: int, path_index: int) -> PathStreams:
    """Return the random stream handle for one path."""
    if master_seed < 0 or path_index < 0:
        raise ValueError("master_seed and path_index must be non-negative")
    return PathStreams(master_seed, path_index)


def poisson_cdf_table(rate: float) -> list[float]:
    """Poisson CDF values used for inverse-CDF count draws.

    The table ends at the first value that rounds to 1.0 in double
    precision, so ``bisect_left(table, u)`` is a total inversion for
    u in [0, 1).
    """
    if rate < 0.0:
        raise ValueError("rate must be >= 0")
    if rate == 0.0:
        return [1.0]
    if rate > 700.0:
        raise ValueError("lam * T too large for exact jump-count inversion")
    p = math.exp(-rate)
    c = p
    table = [c]
    k = 0
    limit = int(rate + 12.0 * math.sqrt(rate) + 60.0)
    while c < 1.0 and k < limit:
        k += 1
        p *= rate / k
        c += p
        table.append(c if c < 1.0 else 1.0)
    table[-1] = 1.0
    return table


@dataclass
class RawPath:
    """Raw draws for one path, jump entries sorted by jump time."""

    n_jumps: int
    jump_times: np.ndarray  # (n,) sorted ascending, in (0, T]
    jump_marks: np.ndarray  # (n,) paired with jump_times
    grid_normals: np.ndarray  # (steps,)
    bridge_normals: np.ndarray  # (n,) paired with jump_times


_EMPTY = np.empty(0)


def draw_raw_path(p: ModelParams, grid: GridSpec, streams: PathStreams,
                  count_table: Sequence[float]) -> RawPath:
    """Draw the raw randomness for one path in the fixed category order."""
    n = 0
    if p.lam > 0.0:
        u = streams.category_gen(CAT_COUNT).random()
        n = bisect_left(count_table, u)
    if n > 0:
        u_times = streams.category_gen(CAT_TIMES).random(n)
        tau = (1.0 - u_times) * p.T  # in (0, T]
        marks = p.jump_marks.draw(streams.category_gen(CAT_MARKS), n)
        zeta = streams.category_gen(CAT_BRIDGE).standard_normal(n)
        order = np.argsort(tau, kind="stable")
        tau, marks, zeta = tau[order], marks[order], zeta[order]
    else:
        tau = marks = zeta = _EMPTY
    z = streams.category_gen(CAT_GRID).standard_normal(grid.steps)
    return RawPath(n, tau, marks, z, zeta)


@dataclass
class RawBatch:
    """Raw draws for a contiguous run of path indices, padded per jump slot.

    ``jump_times`` rows are sorted ascending with +inf padding beyond
    each path's count; ``jump_marks`` and ``bridge_normals`` stay paired
    with their jump time.
    """

    lo: int
    hi: int
    counts: np.ndarray  # (B,) int64
    jump_times: np.ndarray  # (B, nmax)
    jump_marks: np.ndarray  # (B, nmax)
    grid_normals: np.ndarray  # (B, steps)
    bridge_normals: np.ndarray  # (B, nmax)

    @property
    def size(self) -> int:
        return self.hi - self.lo


def draw_raw_batch(p: ModelParams, grid: GridSpec, master_seed: int,
                   lo: int, hi: int,
                   count_table: Sequence[float] | None = None) -> RawBatch:
    """Draw raw randomness for paths lo..hi-1 (identical to per-path draws)."""
    if count_table is None:
        count_table = poisson_cdf_table(p.lam * p.T)
    b = hi - lo
    raws = [draw_raw_path(p, grid, derive_stream(master_seed, i), count_table)
            for i in range(lo, hi)]
    counts = np.fromiter((rp.n_jumps for rp in raws), dtype=np.int64, count=b)
    nmax = int(counts.max()) if b else 0
    times = np.full((b, nmax), np.inf)
    marks = np.zeros((b, nmax))
    zeta = np.zeros((b, nmax))
    z = np.empty((b, grid.steps))
    for row, rp in enumerate(raws):
        z[row] = rp.grid_normals
        if rp.n_jumps:
            times[row, :rp.n_jumps] = rp.jump_times
            marks[row, :rp.n_jumps] = rp.jump_marks
            zeta[row, :rp.n_jumps] = rp.bridge_normals
    return RawBatch(lo, hi, counts, times, marks, z, zeta)


@dataclass
class NodeGroup:
    """Assembled node arrays for all batch rows sharing one jump count.

    Node values carry left and right limits so that jump discontinuities
    sit exactly on nodes. ``sum_y_right[k]`` is the running mark sum
    including a jump at node k; ``mark_at[k]`` is that jump's mark (0 at
    non-jump nodes).
    """

    n_jumps: int
    rows: np.ndarray  # (g,) row indices into the batch
    t: np.ndarray  # (g, K)
    w: np.ndarray  # (g, K)
    mark_at: np.ndarray  # (g, K)
    sum_y_right: np.ndarray  # (g, K)
    x_left: np.ndarray  # (g, K)
    x_right: np.ndarray  # (g, K)


@dataclass
class BatchPaths:
    """Materialized batch: canonical terminal scalars plus node groups.

    ``w_T``, ``sum_y`` and ``x_T`` are computed the same way whether or
    not node assembly ran, so estimates cannot depend on which payoffs
    requested full paths.
    """

    lo: int
    hi: int
    w_T: np.ndarray  # (B,)
    sum_y: np.ndarray  # (B,)
    x_T: np.ndarray  # (B,)
    groups: list[NodeGroup] = field(default_factory=list)


def materialize(p: ModelParams, grid: GridSpec, raw: RawBatch,
                negate: bool = False, with_nodes: bool = True) -> BatchPaths:
    """Build paths from raw draws. ``negate`` flips the Gaussian draws
    (antithetic partner); the jump structure is reused unchanged."""
    sign = -1.0 if negate else 1.0
    z = sign * raw.grid_normals
    zeta = sign * raw.bridge_normals
    M = grid.steps
    sdt = math.sqrt(p.T / M)
    gamma = effective_drift(p)

    w_cum = np.cumsum(z, axis=1) * sdt
    w_T = w_cum[:, -1].copy()
    if raw.jump_marks.shape[1]:
        sum_y = np.cumsum(raw.jump_marks, axis=1)[:, -1].copy()
    else:
        sum_y = np.zeros(raw.size)
    x_T = p.x * np.exp(gamma * p.T + p.sigma * w_T + p.alpha * sum_y)
    out = BatchPaths(raw.lo, raw.hi, w_T, sum_y, x_T)
    if not with_nodes:
        return out

    t_base = np.linspace(0.0, p.T, M + 1)
    w_base = np.concatenate([np.zeros((raw.size, 1)), w_cum], axis=1)
    for n in np.unique(raw.counts):
        n = int(n)
        rows = np.nonzero(raw.counts == n)[0]
        out.groups.append(_assemble_group(
            p, gamma, t_base, rows, w_base[rows],
            raw.jump_times[rows, :n], raw.jump_marks[rows, :n], zeta[rows, :n]))
    return out


def _assemble_group(p: ModelParams, gamma: float, t_base: np.ndarray,
                    rows: np.ndarray, w_base: np.ndarray,
                    tau: np.ndarray, marks: np.ndarray,
                    zeta: np.ndarray) -> NodeGroup:
    """Insert n sorted jump times into the base grid for g rows at once."""
    g, n = tau.shape
    M = t_base.shape[0] - 1
    T = t_base[-1]
    if n == 0:
        t_all = np.broadcast_to(t_base, (g, M + 1)).copy()
        w_all = w_base
        mark_all = np.zeros((g, M + 1))
    else:
        # Base interval of each jump; tau = T lands in the last interval.
        k = np.minimum((tau * (M / T)).astype(np.int64), M - 1)
        w_tau = np.empty((g, n))
        for j in range(n):
            kj = k[:, j]
            left_t = t_base[kj]
            left_w = np.take_along_axis(w_base, kj[:, None], axis=1)[:, 0]
            if j > 0:
                same = k[:, j - 1] == kj
                left_t = np.where(same, tau[:, j - 1], left_t)
                left_w = np.where(same, w_tau[:, j - 1], left_w)
            right_t = t_base[kj + 1]
            right_w = np.take_along_axis(w_base, (kj + 1)[:, None], axis=1)[:, 0]
            span = right_t - left_t
            d_left = tau[:, j] - left_t
            d_right = right_t - tau[:, j]
            safe = span > 0.0
            frac = np.where(safe, d_left / np.where(safe, span, 1.0), 1.0)
            var = np.where(safe, d_left * d_right / np.where(safe, span, 1.0), 0.0)
            w_tau[:, j] = (left_w + frac * (right_w - left_w)
                           + np.sqrt(np.maximum(var, 0.0)) * zeta[:, j])

        # Merged node order: each jump sits right after its base node and
        # after earlier jumps; a jump tying a grid node goes after it.
        K = M + 1 + n
        base_idx = np.arange(M + 1)
        shift = np.zeros((g, M + 1), dtype=np.int64)
        for j in range(n):
            shift += k[:, [j]] < base_idx[None, :]
        pos_base = base_idx[None, :] + shift
        pos_jump = k + 1 + np.arange(n)[None, :]

        t_all = np.empty((g, K))
        w_all = np.empty((g, K))
        mark_all = np.zeros((g, K))
        np.put_along_axis(t_all, pos_base, np.broadcast_to(t_base, (g, M + 1)), axis=1)
        np.put_along_axis(t_all, pos_jump, tau, axis=1)
        np.put_along_axis(w_all, pos_base, w_base, axis=1)
        np.put_along_axis(w_all, pos_jump, w_tau, axis=1)
        np.put_along_axis(mark_all, pos_jump, marks, axis=1)

    sum_y_right = np.cumsum(mark_all, axis=1)
    sum_y_left = sum_y_right - mark_all
    growth = gamma * t_all + p.sigma * w_all
    x_left = p.x * np.exp(growth + p.alpha * sum_y_left)
    x_right = x_left * np.exp(p.alpha * mark_all)
    return NodeGroup(n, rows, t_all, w_all, mark_all, sum_y_right, x_left, x_right)


@dataclass(frozen=True)
class PathSample:
    """One simulated path with jump-aligned nodes.

    Node arrays have length steps + 1 + n_jumps. ``x_left`` and
    ``x_right`` are the pre- and post-jump values (equal off jump
    nodes); ``sum_y`` is the right-continuous running mark sum.
    """

    t: np.ndarray
    w: np.ndarray
    sum_y: np.ndarray
    x2: np.ndarray  # alpha * sum_y, the pure-jump log component
    x_left: np.ndarray
    x_right: np.ndarray
    jump_times: np.ndarray
    jump_marks: np.ndarray

    @property
    def w_T(self) -> float:
        return float(self.w[-1])

    @property
    def x_T(self) -> float:
        return float(self.x_right[-1])

    @property
    def sum_y_T(self) -> float:
        return float(self.sum_y[-1])


def _sample_from_group(p: ModelParams, group: NodeGroup, pos: int,
                       tau: np.ndarray, marks: np.ndarray) -> PathSample:
    return PathSample(
        t=group.t[pos].copy(),
        w=group.w[pos].copy(),
        sum_y=group.sum_y_right[pos].copy(),
        x2=p.alpha * group.sum_y_right[pos],
        x_left=group.x_left[pos].copy(),
        x_right=group.x_right[pos].copy(),
        jump_times=tau.copy(),
        jump_marks=marks.copy(),
    )


def simulate_path(p: ModelParams, grid: GridSpec, streams: PathStreams) -> PathSample:
    """Simulate one path (the batch engine reduced to a single row)."""
    table = poisson_cdf_table(p.lam * p.T)
    raw = draw_raw_batch(p, grid, streams.master_seed,
                         streams.path_index, streams.path_index + 1, table)
    paths = materialize(p, grid, raw)
    group = paths.groups[0]
    n = group.n_jumps
    return _sample_from_group(p, group, 0, raw.jump_times[0, :n], raw.jump_marks[0, :n])


def antithetic_pair(p: ModelParams, grid: GridSpec,
                    streams: PathStreams) -> tuple[PathSample, PathSample]:
    """Simulate an antithetic pair: same jumps, negated Gaussian draws."""
    table = poisson_cdf_table(p.lam * p.T)
    raw = draw_raw_batch(p, grid, streams.master_seed,
                         streams.path_index, streams.path_index + 1, table)
    out = []
    for negate in (False, True):
        paths = materialize(p, grid, raw, negate=negate)
        group = paths.groups[0]
        n = group.n_jumps
        out.append(_sample_from_group(p, group, 0,
                                      raw.jump_times[0, :n], raw.jump_marks[0, :n]))
    return out[0], out[1]


def iter_batches(n_streams: int, batch_size: int) -> Iterator[tuple[int, int]]:
    """Contiguous stream-index ranges; fixed given (n_streams, batch_size)."""
    lo = 0
    while lo < n_streams:
        hi = min(lo + batch_size, n_streams)
        yield lo, hi
        lo = hi
