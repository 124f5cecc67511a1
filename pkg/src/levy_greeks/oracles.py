"""Independent ground truths the Monte Carlo estimates are tested against.

Three oracles, in increasing generality:

* closed-form prices and Greeks of the jump-free lognormal model,
* a series price for European options under Normal jump marks with
  risk-neutral compensation,
* central finite differences with common random numbers, valid for
  every supported parameter.

The finite differences revalue bumped parameter sets with the exact
same per-path random streams, so per-path differences are small and
the estimator variance stays usable. Maturity bumps need one extra
convention choice: for terminal-value payoffs the jump intensity is
rescaled so lam * T stays fixed (the jump count is pinned and the
existing jumps stretch with the horizon), matching what the
terminal-value Theta weight measures; for average-value payoffs the
intensity is left alone, so the count re-inverts through the same
uniform draw, matching the averaging Theta weight. Theta is reported
as the decay rate -dV/dT everywhere, consistent with the weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from scipy.stats import norm, poisson

from .estimator import (EMPTY_ACCUMULATOR, GreekEstimate, RunConfig,
                        StatRequest, _stats, accumulator_from_values,
                        batch_request_values, merge_accumulators)
from .model import ModelParams, NormalMarks, risk_neutral_compensator
from .payoffs import ExerciseStyle, PayoffKind, PayoffSpec
from .simulate import GridSpec, iter_batches, poisson_cdf_table
from .weights import GreekKind

__all__ = [
    "bs_price_and_greeks",
    "merton_price",
    "FDSpec",
    "fd_greek",
    "fd_greeks_matrix",
    "asian_linear_delta",
    "asian_linear_theta",
]


def bs_price_and_greeks(x: float, k: float, r: float, sigma: float,
                        t: float, kind: PayoffKind) -> dict[str, float]:
    """Closed-form lognormal price and Greeks (theta as decay -dV/dT)."""
    if min(x, k, sigma, t) <= 0.0:
        raise ValueError("x, k, sigma and t must be > 0")
    sqt = math.sqrt(t)
    d1 = (math.log(x / k) + (r + 0.5 * sigma * sigma) * t) / (sigma * sqt)
    d2 = d1 - sigma * sqt
    disc_k = k * math.exp(-r * t)
    pdf_d1 = float(norm.pdf(d1))
    gamma = pdf_d1 / (x * sigma * sqt)
    vega = x * pdf_d1 * sqt
    time_decay = -x * pdf_d1 * sigma / (2.0 * sqt)
    if kind is PayoffKind.CALL:
        nd1, nd2 = float(norm.cdf(d1)), float(norm.cdf(d2))
        return {
            "price": x * nd1 - disc_k * nd2,
            "delta": nd1,
            "gamma": gamma,
            "vega": vega,
            "rho": t * disc_k * nd2,
            "theta": time_decay - r * disc_k * nd2,
        }
    if kind is PayoffKind.PUT:
        nmd1, nmd2 = float(norm.cdf(-d1)), float(norm.cdf(-d2))
        return {
            "price": disc_k * nmd2 - x * nmd1,
            "delta": float(norm.cdf(d1)) - 1.0,
            "gamma": gamma,
            "vega": vega,
            "rho": -t * disc_k * nmd2,
            "theta": time_decay + r * disc_k * nmd2,
        }
    raise ValueError("closed form supports call and put payoffs only")


def merton_price(p: ModelParams, strike: float, kind: PayoffKind) -> float:
    """Series price for a European option under Normal jump marks.

    Valid only on the martingale measure: gamma_tilde must equal the
    compensator. Conditioning on the jump count gives a lognormal
    terminal value per term, so the series is a Poisson mixture of
    closed-form prices with per-term rate and volatility adjustments.
    """
    marks = p.jump_marks
    if not isinstance(marks, NormalMarks):
        raise ValueError("merton oracle requires Normal jump marks")
    comp = risk_neutral_compensator(marks, p.lam, p.alpha)
    if abs(p.gamma_tilde - comp) > 1e-12 * max(1.0, abs(comp)):
        raise ValueError("merton oracle requires risk-neutral compensation")
    if kind is PayoffKind.LINEAR:
        raise ValueError("merton oracle supports call and put payoffs only")
    if p.lam == 0.0:
        return bs_price_and_greeks(p.x, strike, p.r, p.sigma, p.T, kind)["price"]

    m_j = p.alpha * marks.mean
    s2_j = (p.alpha * marks.stddev) ** 2
    k_m = math.exp(m_j + 0.5 * s2_j) - 1.0
    rate = p.lam * (1.0 + k_m) * p.T
    n_max = int(poisson.isf(1e-13, rate)) + 1
    total = 0.0
    for n in range(n_max + 1):
        w = float(poisson.pmf(n, rate))
        sigma_n = math.sqrt(p.sigma ** 2 + n * s2_j / p.T)
        r_n = p.r - p.lam * k_m + n * (m_j + 0.5 * s2_j) / p.T
        total += w * bs_price_and_greeks(p.x, strike, r_n, sigma_n, p.T, kind)["price"]
    return total


def asian_linear_delta(r: float, t: float) -> float:
    """Delta of the discounted average itself: e^{-rT}(e^{rT}-1)/(rT)."""
    rt = r * t
    if rt == 0.0:
        return 1.0
    return -math.expm1(-rt) / rt


def asian_linear_theta(x: float, r: float, t: float) -> float:
    """Decay rate -dV/dT of V = x(1 - e^{-rT})/(rT), the discounted
    average's expectation on the martingale measure (any jump intensity)."""
    rt = r * t
    if abs(rt) < 1e-6:
        dvdt = x * (-0.5 * r + r * rt / 3.0)
    else:
        e = math.exp(-rt)
        dvdt = x * (rt * e - 1.0 + e) / (r * t * t)
    return -dvdt


_PARAM_FOR_GREEK = {
    GreekKind.DELTA: "x",
    GreekKind.GAMMA: "x",
    GreekKind.VEGA: "sigma",
    GreekKind.RHO: "r",
    GreekKind.THETA: "T",
    GreekKind.ALPHA: "alpha",
}

_PARAMS = ("x", "sigma", "r", "T", "alpha")


@dataclass(frozen=True)
class FDSpec:
    """Central-difference step control for one model parameter."""

    parameter: str
    relative_bump: float = 1e-3
    absolute_bump: float = 1e-4
    scheme: str = "central"

    def __post_init__(self) -> None:
        if self.parameter not in _PARAMS:
            raise ValueError(f"parameter must be one of {_PARAMS}")
        if not self.relative_bump > 0.0 or not self.absolute_bump > 0.0:
            raise ValueError("bump sizes must be > 0")
        if self.scheme != "central":
            raise ValueError("only the central scheme is supported")

    def step(self, p: ModelParams) -> float:
        base = getattr(p, self.parameter)
        if abs(base) > 1e-6:
            return self.relative_bump * abs(base)
        return self.absolute_bump


def _bumped(p: ModelParams, parameter: str, delta: float,
            theta_style: ExerciseStyle | None) -> ModelParams:
    """Bumped parameter set; gamma_tilde is held at its numeric value.

    Raises if the bump violates a model constraint.
    """
    if parameter == "T":
        t_new = p.T + delta
        if theta_style is ExerciseStyle.EUROPEAN and p.lam > 0.0:
            return replace(p, T=t_new, lam=p.lam * p.T / t_new)
        return replace(p, T=t_new)
    return replace(p, **{parameter: getattr(p, parameter) + delta})


def _fd_walk(p: ModelParams, payoffs: Sequence[PayoffSpec], g: GreekKind,
             cfg: RunConfig, spec: FDSpec,
             theta_style: ExerciseStyle | None) -> list[GreekEstimate]:
    """Walk all batches once, revaluing every payoff under the bumped
    parameter sets, and accumulate per-path central differences."""
    h = spec.step(p)
    variants = [_bumped(p, spec.parameter, +h, theta_style),
                _bumped(p, spec.parameter, -h, theta_style)]
    if g is GreekKind.GAMMA:
        variants.append(p)
    tables = [poisson_cdf_table(v.lam * v.T) for v in variants]
    grid = GridSpec(cfg.grid_steps)
    requests = tuple(StatRequest(pf) for pf in payoffs)
    need_nodes = any(pf.style is ExerciseStyle.ASIAN for pf in payoffs)
    n_streams = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths

    accs = [EMPTY_ACCUMULATOR] * len(payoffs)
    for lo, hi in iter_batches(n_streams, cfg.batch_size):
        per_variant = [
            batch_request_values(v, grid, cfg.master_seed, lo, hi, requests,
                                 tbl, cfg.antithetic, need_nodes)
            for v, tbl in zip(variants, tables)
        ]
        for j in range(len(payoffs)):
            up, down = per_variant[0][j], per_variant[1][j]
            if g is GreekKind.GAMMA:
                base = per_variant[2][j]
                diff = (up - 2.0 * base + down) / (h * h)
            elif g is GreekKind.THETA:
                diff = -(up - down) / (2.0 * h)
            else:
                diff = (up - down) / (2.0 * h)
            accs[j] = merge_accumulators(
                accs[j], accumulator_from_values(lo, hi, diff))

    out = []
    for pf, acc in zip(payoffs, accs):
        value, se, half = _stats(acc, cfg)
        out.append(GreekEstimate(value=value, std_error=se, ci_half_width=half,
                                 n_paths=cfg.n_paths, n_effective=acc.count,
                                 seed=cfg.master_seed, greek=g, style=pf.style))
    return out


def fd_greeks_matrix(p: ModelParams, payoffs: Sequence[PayoffSpec],
                     greeks: Sequence[GreekKind], cfg: RunConfig,
                     specs: dict[GreekKind, FDSpec] | None = None,
                     ) -> dict[tuple[int, GreekKind], GreekEstimate]:
    """CRN finite differences for several payoffs and Greeks.

    Each Greek walks the paths once for all payoffs that can share its
    bumped parameter sets (Theta walks once per exercise style because
    the maturity coupling differs; see the module docstring).
    """
    payoffs = list(payoffs)
    out: dict[tuple[int, GreekKind], GreekEstimate] = {}
    for g in greeks:
        spec = (specs or {}).get(g) or FDSpec(_PARAM_FOR_GREEK[g])
        if spec.parameter != _PARAM_FOR_GREEK[g]:
            raise ValueError(
                f"fd parameter must be '{_PARAM_FOR_GREEK[g]}' for {g.value}")
        if g is GreekKind.THETA:
            for style in (ExerciseStyle.EUROPEAN, ExerciseStyle.ASIAN):
                idxs = [i for i, pf in enumerate(payoffs) if pf.style is style]
                if not idxs:
                    continue
                ests = _fd_walk(p, [payoffs[i] for i in idxs], g, cfg, spec,
                                theta_style=style)
                for i, est in zip(idxs, ests):
                    out[(i, g)] = est
        else:
            ests = _fd_walk(p, payoffs, g, cfg, spec, theta_style=None)
            for i, est in enumerate(ests):
                out[(i, g)] = est
    return out


def fd_greek(p: ModelParams, payoff: PayoffSpec, g: GreekKind,
             cfg: RunConfig, fd: FDSpec | None = None) -> GreekEstimate:
    """Central-difference estimate of one Greek with common random numbers."""
    specs = {g: fd} if fd is not None else None
    return fd_greeks_matrix(p, [payoff], [g], cfg, specs)[(0, g)]
