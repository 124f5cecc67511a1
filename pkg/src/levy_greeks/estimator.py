"""Monte Carlo driver: paths in, price and Greek estimates out.

Work is split into contiguous batches of stream indices. Each batch
yields one streaming (count, mean, M2) accumulator per requested
statistic, and batch accumulators are folded in batch order, so the
result is bit-identical for any worker count. Batch size is therefore
part of the reproducibility contract along with the master seed.

All requested statistics share one simulation pass: paths are drawn
once per batch and every payoff and weight is evaluated on them. With
antithetic variates on, each stream index carries a pair of paths whose
contributions are averaged before accumulation, so the effective sample
count is n_paths / 2.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .functionals import PathFunctionals, batch_functionals
from .model import ModelParams
from .payoffs import ExerciseStyle, PayoffSpec, payoff_value
from .simulate import (GridSpec, RawBatch, draw_raw_batch, iter_batches,
                       materialize, poisson_cdf_table)
from .weights import GammaVariant, GreekKind, asian_weight, european_weight

__all__ = [
    "RunConfig",
    "Accumulator",
    "EMPTY_ACCUMULATOR",
    "accumulator_from_values",
    "merge_accumulators",
    "PriceEstimate",
    "GreekEstimate",
    "StatRequest",
    "estimate_price",
    "estimate_greek",
    "estimate_greeks",
    "estimate_requests",
]


@dataclass(frozen=True)
class RunConfig:
    """Monte Carlo run parameters.

    ``batch_size`` and ``master_seed`` together fix every random draw
    and the accumulation order; ``workers`` only distributes the work.
    """

    n_paths: int
    grid_steps: int
    master_seed: int
    antithetic: bool = False
    confidence_level: float = 0.99
    workers: int = 1
    batch_size: int = 2048

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.grid_steps < 1:
            raise ValueError("grid_steps must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a non-negative 64-bit integer")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("n_paths must be even when antithetic is on")
        if not 0.0 < self.confidence_level < 1.0:
            raise ValueError("confidence_level must be in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class Accumulator:
    """Streaming moments of samples from the stream-index range [lo, hi)."""

    lo: int
    hi: int
    count: int
    mean: float
    m2: float


EMPTY_ACCUMULATOR = Accumulator(0, 0, 0, 0.0, 0.0)


def accumulator_from_values(lo: int, hi: int, values: np.ndarray) -> Accumulator:
    v = np.asarray(values, dtype=float)
    mean = float(np.mean(v))
    m2 = float(np.sum((v - mean) ** 2))
    return Accumulator(lo, hi, int(v.size), mean, m2)


def merge_accumulators(a: Accumulator, b: Accumulator) -> Accumulator:
    """Pool two accumulators over adjacent index ranges.

    The empty accumulator is the identity. Ordering is normalized
    internally, so merging is commutative; determinism comes from the
    caller folding batches in a fixed order.
    """
    if a.count == 0 and a.lo == a.hi:
        return b
    if b.count == 0 and b.lo == b.hi:
        return a
    if a.lo > b.lo:
        a, b = b, a
    if b.lo < a.hi:
        raise ValueError("accumulator ranges overlap")
    if b.lo != a.hi:
        raise ValueError("accumulator ranges must be adjacent")
    n = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * b.count / n
    m2 = a.m2 + b.m2 + delta * delta * a.count * b.count / n
    return Accumulator(a.lo, b.hi, n, mean, m2)


@dataclass(frozen=True)
class PriceEstimate:
    value: float
    std_error: float
    ci_half_width: float
    n_paths: int
    n_effective: int
    seed: int
    style: ExerciseStyle


@dataclass(frozen=True)
class GreekEstimate:
    value: float
    std_error: float
    ci_half_width: float
    n_paths: int
    n_effective: int
    seed: int
    greek: GreekKind
    style: ExerciseStyle


@dataclass(frozen=True)
class StatRequest:
    """One statistic to estimate: the price of ``payoff`` when ``greek``
    is None, otherwise that Greek of it."""

    payoff: PayoffSpec
    greek: GreekKind | None = None
    gamma_variant: GammaVariant = GammaVariant.DERIVED


def _request_values(p: ModelParams, grid: GridSpec, raw: RawBatch,
                    requests: Sequence[StatRequest], need_nodes: bool,
                    negate: bool) -> list[np.ndarray]:
    """Discounted per-path contributions for each request, in batch order."""
    paths = materialize(p, grid, raw, negate=negate, with_nodes=need_nodes)
    if need_nodes:
        f = batch_functionals(paths)
        avg = f.i0 / p.T
    else:
        f = PathFunctionals(w_T=paths.w_T, x_T=paths.x_T, sum_y=paths.sum_y)
        avg = None
    disc = math.exp(-p.r * p.T)
    weight_memo: dict = {}
    out = []
    for req in requests:
        euro = req.payoff.style is ExerciseStyle.EUROPEAN
        pv = payoff_value(req.payoff, f.x_T if euro else avg)
        if req.greek is None:
            out.append(disc * pv)
            continue
        key = (req.payoff.style, req.greek,
               req.gamma_variant if req.greek is GreekKind.GAMMA else None)
        wgt = weight_memo.get(key)
        if wgt is None:
            if euro:
                wgt = european_weight(req.greek, f, p)
            else:
                wgt = asian_weight(req.greek, f, p, req.gamma_variant)
            weight_memo[key] = wgt
        out.append(disc * pv * wgt)
    return out


def batch_request_values(p: ModelParams, grid: GridSpec, master_seed: int,
                         lo: int, hi: int, requests: Sequence[StatRequest],
                         count_table: Sequence[float], antithetic: bool,
                         need_nodes: bool) -> list[np.ndarray]:
    """Per-path contributions for one batch (antithetic pairs averaged).

    Shared with the finite-difference oracle, which walks the same
    batches under bumped parameters.
    """
    raw = draw_raw_batch(p, grid, master_seed, lo, hi, count_table)
    vals = _request_values(p, grid, raw, requests, need_nodes, negate=False)
    if antithetic:
        anti = _request_values(p, grid, raw, requests, need_nodes, negate=True)
        vals = [0.5 * (v + a) for v, a in zip(vals, anti)]
    return vals


def _batch_task(args) -> list[Accumulator]:
    (p, grid, seed, lo, hi, requests, table, antithetic, need_nodes) = args
    vals = batch_request_values(p, grid, seed, lo, hi, requests, table,
                                antithetic, need_nodes)
    return [accumulator_from_values(lo, hi, v) for v in vals]


def _run(p: ModelParams, requests: Sequence[StatRequest],
         cfg: RunConfig) -> list[Accumulator]:
    grid = GridSpec(cfg.grid_steps)
    table = poisson_cdf_table(p.lam * p.T)
    need_nodes = any(r.payoff.style is ExerciseStyle.ASIAN for r in requests)
    n_streams = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths
    requests = tuple(requests)
    payloads = [(p, grid, cfg.master_seed, lo, hi, requests, table,
                 cfg.antithetic, need_nodes)
                for lo, hi in iter_batches(n_streams, cfg.batch_size)]
    if cfg.workers <= 1:
        per_batch = [_batch_task(t) for t in payloads]
    else:
        chunk = max(1, len(payloads) // (4 * cfg.workers))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_batch = list(pool.map(_batch_task, payloads, chunksize=chunk))
    accs = [EMPTY_ACCUMULATOR] * len(requests)
    for batch_accs in per_batch:
        accs = [merge_accumulators(a, b) for a, b in zip(accs, batch_accs)]
    return accs


def _stats(acc: Accumulator, cfg: RunConfig) -> tuple[float, float, float]:
    if acc.count > 1:
        var = acc.m2 / (acc.count - 1)
        se = math.sqrt(var / acc.count)
    else:
        se = 0.0
    z = float(norm.ppf(0.5 * (1.0 + cfg.confidence_level)))
    return acc.mean, se, z * se


def estimate_requests(p: ModelParams, requests: Sequence[StatRequest],
                      cfg: RunConfig) -> list[PriceEstimate | GreekEstimate]:
    """Estimate several statistics from one shared set of paths."""
    requests = list(requests)
    if not requests:
        return []
    accs = _run(p, requests, cfg)
    out: list[PriceEstimate | GreekEstimate] = []
    for req, acc in zip(requests, accs):
        value, se, half = _stats(acc, cfg)
        common = dict(value=value, std_error=se, ci_half_width=half,
                      n_paths=cfg.n_paths, n_effective=acc.count,
                      seed=cfg.master_seed, style=req.payoff.style)
        if req.greek is None:
            out.append(PriceEstimate(**common))
        else:
            out.append(GreekEstimate(greek=req.greek, **common))
    return out


def estimate_price(p: ModelParams, payoff: PayoffSpec,
                   cfg: RunConfig) -> PriceEstimate:
    (est,) = estimate_requests(p, [StatRequest(payoff)], cfg)
    return est


def estimate_greek(p: ModelParams, payoff: PayoffSpec, g: GreekKind,
                   cfg: RunConfig,
                   gamma_variant: GammaVariant = GammaVariant.DERIVED,
                   ) -> GreekEstimate:
    (est,) = estimate_requests(
        p, [StatRequest(payoff, g, gamma_variant)], cfg)
    return est


def estimate_greeks(p: ModelParams, payoff: PayoffSpec,
                    greeks: Sequence[GreekKind], cfg: RunConfig,
                    gamma_variant: GammaVariant = GammaVariant.DERIVED,
                    ) -> dict[GreekKind, GreekEstimate]:
    """All requested Greeks of one payoff from a single simulation pass."""
    requests = [StatRequest(payoff, g, gamma_variant) for g in greeks]
    ests = estimate_requests(p, requests, cfg)
    return {g: est for g, est in zip(greeks, ests)}
