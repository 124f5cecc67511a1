"""Malliavin stochastic weights for Greek estimation.

Each weight is the random factor pi such that

    Greek = mean over paths of exp(-r T) * payoff(path) * pi.

Weights depend only on the path functionals and the model parameters;
discounting and payoff evaluation live in the estimator, so the
per-path algebraic identities between weights can be tested in
isolation.

Sign convention: Theta is the decay rate -dV/dT for every style and
every oracle in this package. The CLI can report the opposite sign,
but it flips the reported number only, never the estimate itself.

The Asian second-order weight (Gamma) ships in four algebraically
distinct forms behind ``GammaVariant``. The repeated integration by
parts admits several arrangements that are not equal as random
variables, and the candidate expressions in circulation disagree; the
engine therefore keeps all of them selectable and adjudicates against
the central finite-difference oracle. ``DERIVED`` is the arrangement
that survives that adjudication and is the default.
"""

from __future__ import annotations

import enum

import numpy as np

from .functionals import PathFunctionals
from .model import ModelParams, effective_drift

__all__ = ["GreekKind", "GammaVariant", "european_weight", "asian_weight"]


class GreekKind(enum.Enum):
    DELTA = "delta"
    VEGA = "vega"
    RHO = "rho"
    THETA = "theta"
    GAMMA = "gamma"
    ALPHA = "alpha_greek"


class GammaVariant(enum.Enum):
    THEOREM = "theorem"
    APPENDIX_A = "appendix_a"
    APPENDIX_B = "appendix_b"
    DERIVED = "derived"


def european_weight(g: GreekKind, f: PathFunctionals, p: ModelParams) -> np.ndarray:
    """Weight for a terminal-value payoff; needs only W_T and sum_Y."""
    w = np.asarray(f.w_T)
    sigma, t = p.sigma, p.T
    if g is GreekKind.DELTA:
        return w / (p.x * sigma * t)
    if g is GreekKind.VEGA:
        return w * w / (sigma * t) - w - 1.0 / sigma
    if g is GreekKind.RHO:
        return t * (w / (sigma * t) - 1.0)
    if g is GreekKind.THETA:
        # The maturity sensitivity dV/dT is estimated by the bracket
        # below with the full log-drift; negation yields the decay rate.
        gamma = effective_drift(p)
        bracket = (w * w / (2.0 * t * t) + gamma * w / (sigma * t)
                   - (1.0 / (2.0 * t) + p.r))
        return -bracket
    if g is GreekKind.GAMMA:
        return (w * w / (sigma * t) - w - 1.0 / sigma) / (p.x * p.x * sigma * t)
    if g is GreekKind.ALPHA:
        return w * np.asarray(f.sum_y) / (sigma * t)
    raise ValueError(f"unsupported greek: {g}")


def asian_weight(g: GreekKind, f: PathFunctionals, p: ModelParams,
                 gamma_variant: GammaVariant = GammaVariant.DERIVED) -> np.ndarray:
    """Weight for an average-value payoff, built from the path integrals."""
    if not f.has_integrals:
        raise ValueError("asian weights need the integral functionals")
    i1 = np.asarray(f.i1)
    if np.any(i1 <= 0.0):
        raise ValueError("i1 = int t*X_t dt must be > 0 for every path")
    w = np.asarray(f.w_T)
    i0 = np.asarray(f.i0)
    i2 = np.asarray(f.i2)
    sigma, t, x = p.sigma, p.T, p.x

    if g is GreekKind.DELTA:
        return (-sigma + (i0 / i1) * w + sigma * i0 * i2 / i1 ** 2) / (sigma * x)
    if g is GreekKind.VEGA:
        xw = np.asarray(f.int_xw)
        txw = np.asarray(f.int_txw)
        return (-(1.0 + sigma * w)
                + (w * xw - sigma * txw) / i1
                + sigma * xw * i2 / i1 ** 2) / sigma
    if g is GreekKind.RHO:
        return w / sigma - t
    if g is GreekKind.THETA:
        x_t = np.asarray(f.x_T)
        return (p.r - 1.0 / t
                + (i0 * w / (sigma * t) - x_t * w / sigma + t * x_t) / i1
                + (i0 * i2 / t - i2 * x_t) / i1 ** 2)
    if g is GreekKind.GAMMA:
        i3 = np.asarray(f.i3)
        return _asian_gamma(gamma_variant, w, i0, i1, i2, i3, sigma, t, x)
    if g is GreekKind.ALPHA:
        j = np.asarray(f.int_sy_x)
        j_t = np.asarray(f.int_t_sy_x)
        return (w * j / sigma - j_t) / i1 + j * i2 / i1 ** 2
    raise ValueError(f"unsupported greek: {g}")


def _asian_gamma(variant: GammaVariant, w, i0, i1, i2, i3,
                 sigma: float, t: float, x: float) -> np.ndarray:
    """The four candidate second-order weights (see module docstring)."""
    if variant is GammaVariant.THEOREM:
        return ((sigma + sigma ** 2)
                - (sigma - sigma * w - w) * i0 / i1
                + (-sigma * i0 * i2 + w ** 2 * i0 ** 2 - 3.0 * sigma ** 2 * i0 * i2) / i1 ** 2
                + (sigma * w * i0 ** 2 * i2 - sigma ** 2 * i0 ** 2 * i3
                   + 2.0 * sigma * i0 ** 2 * i2) / i1 ** 3
                + 3.0 * sigma ** 2 * i0 ** 2 * i2 ** 2 / i1 ** 4) / (sigma * x ** 2)
    if variant is GammaVariant.APPENDIX_A:
        return ((sigma + sigma ** 2)
                - (2.0 * sigma - sigma * w - w) * i0 / i1
                + (-sigma * i0 * i2 + w ** 2 * i0 ** 2 - 3.0 * sigma ** 2 * i0 * i2) / i1 ** 2
                + (sigma * w * i0 ** 2 * i2 - sigma ** 2 * i0 ** 2 * i3
                   + 2.0 * sigma * i0 ** 2 * i2) / i1 ** 3
                + 3.0 * sigma ** 2 * i0 ** 2 * i2 ** 2 / i1 ** 4) / (sigma * x ** 2)
    if variant is GammaVariant.APPENDIX_B:
        return (-3.0 * sigma * w * i0 / i1
                + (3.0 * sigma * i0 * i2 + w ** 2 * i0 ** 2 - i0 ** 2) / i1 ** 2
                + ((2.0 * sigma + 1.0) * w * i0 ** 2 * i2
                   - sigma * i0 ** 2 * i3) / i1 ** 3
                + 3.0 * sigma * i0 ** 2 * i2 ** 2 / i1 ** 4) / (sigma * x ** 2)
    if variant is GammaVariant.DERIVED:
        return (2.0 * sigma ** 2
                - 4.0 * sigma * w * i0 / i1
                + (w ** 2 * i0 ** 2 - t * i0 ** 2 - 4.0 * sigma ** 2 * i0 * i2) / i1 ** 2
                + (3.0 * sigma * w * i0 ** 2 * i2 - sigma ** 2 * i0 ** 2 * i3) / i1 ** 3
                + 3.0 * sigma ** 2 * i0 ** 2 * i2 ** 2 / i1 ** 4) / (sigma ** 2 * x ** 2)
    raise ValueError(f"unsupported gamma variant: {variant}")
