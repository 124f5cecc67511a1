"""Model parameters for an exponential Levy jump-diffusion.

The underlying is

    X_t = x * exp(gamma * t + sigma * W_t + alpha * sum_{i<=N_t} Y_i)

where W is a Brownian motion, N a Poisson process with intensity lam,
Y_i i.i.d. jump marks, and the total log-drift splits as

    gamma = r - sigma**2 / 2 + gamma_tilde.

gamma_tilde is a free drift offset. Choosing it equal to the
compensator -lam * (E[exp(alpha * Y)] - 1) makes the discounted price
a martingale (see ``risk_neutral_compensator``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

__all__ = [
    "NormalMarks",
    "PointMassMarks",
    "UniformMarks",
    "JumpMarks",
    "ModelParams",
    "validate",
    "effective_drift",
    "risk_neutral_compensator",
]


@dataclass(frozen=True)
class NormalMarks:
    """Gaussian jump marks Y ~ N(mean, stddev**2)."""

    mean: float = 0.0
    stddev: float = 1.0

    def __post_init__(self) -> None:
        if not self.stddev > 0.0:
            raise ValueError("jump_marks.stddev must be > 0")

    def exp_moment(self, a: float) -> float:
        """E[exp(a * Y)]."""
        return math.exp(a * self.mean + 0.5 * a * a * self.stddev * self.stddev)

    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return gen.standard_normal(n) * self.stddev + self.mean


@dataclass(frozen=True)
class PointMassMarks:
    """Deterministic jump marks Y = value."""

    value: float = 1.0

    def exp_moment(self, a: float) -> float:
        return math.exp(a * self.value)

    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.value)


@dataclass(frozen=True)
class UniformMarks:
    """Uniform jump marks Y ~ U[a, b]."""

    a: float = -1.0
    b: float = 1.0

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError("jump_marks.a must be < jump_marks.b")

    def exp_moment(self, s: float) -> float:
        if s == 0.0:
            return 1.0
        return (math.exp(s * self.b) - math.exp(s * self.a)) / (s * (self.b - self.a))

    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return self.a + (self.b - self.a) * gen.random(n)


JumpMarks = Union[NormalMarks, PointMassMarks, UniformMarks]


@dataclass(frozen=True)
class ModelParams:
    """Immutable parameter set. Validated on construction."""

    x: float
    r: float
    sigma: float
    T: float
    gamma_tilde: float = 0.0
    lam: float = 0.0
    alpha: float = 0.0
    jump_marks: JumpMarks = NormalMarks()

    def __post_init__(self) -> None:
        validate(self)

    @property
    def mu(self) -> float:
        """Continuous-part drift r - sigma**2 / 2 (derived, never stored)."""
        return self.r - 0.5 * self.sigma * self.sigma

    @classmethod
    def risk_neutral(
        cls,
        x: float,
        r: float,
        sigma: float,
        T: float,
        lam: float = 0.0,
        alpha: float = 0.0,
        jump_marks: JumpMarks = NormalMarks(),
    ) -> "ModelParams":
        """Construct with gamma_tilde set to the martingale compensator."""
        base = cls(x=x, r=r, sigma=sigma, T=T, lam=lam, alpha=alpha,
                   jump_marks=jump_marks)
        comp = risk_neutral_compensator(jump_marks, lam, alpha)
        return replace(base, gamma_tilde=comp)


def validate(p: ModelParams) -> ModelParams:
    """Check parameter constraints; raises ValueError naming the first bad field.

    Idempotent: returns the same (unmodified) instance on success.
    """
    if not _finite(p.x) or not p.x > 0.0:
        raise ValueError("x must be > 0")
    if not _finite(p.r):
        raise ValueError("r must be finite")
    if not _finite(p.sigma) or not p.sigma > 0.0:
        raise ValueError("sigma must be > 0")
    if not _finite(p.T) or not p.T > 0.0:
        raise ValueError("T must be > 0")
    if not _finite(p.gamma_tilde):
        raise ValueError("gamma_tilde must be finite")
    if not _finite(p.lam) or p.lam < 0.0:
        raise ValueError("lam must be >= 0")
    if not _finite(p.alpha):
        raise ValueError("alpha must be finite")
    if not isinstance(p.jump_marks, (NormalMarks, PointMassMarks, UniformMarks)):
        raise ValueError("jump_marks must be a NormalMarks, PointMassMarks or UniformMarks")
    return p


def effective_drift(p: ModelParams) -> float:
    """Total log-drift gamma = r - sigma**2 / 2 + gamma_tilde."""
    return p.r - 0.5 * p.sigma * p.sigma + p.gamma_tilde


def risk_neutral_compensator(jump_marks: JumpMarks, lam: float, alpha: float) -> float:
    """Drift offset -lam * (E[exp(alpha * Y)] - 1) that makes e^{-rt} X_t a martingale."""
    if lam == 0.0:
        return 0.0
    return -lam * (jump_marks.exp_moment(alpha) - 1.0)


def _finite(v: float) -> bool:
    return isinstance(v, (int, float)) and math.isfinite(v)
