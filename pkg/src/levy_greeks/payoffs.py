"""Payoff definitions for European and Asian exercise styles."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = ["PayoffKind", "ExerciseStyle", "PayoffSpec", "payoff_value"]


class PayoffKind(enum.Enum):
    CALL = "call"
    PUT = "put"
    LINEAR = "linear"


class ExerciseStyle(enum.Enum):
    EUROPEAN = "european"
    ASIAN = "asian"


@dataclass(frozen=True)
class PayoffSpec:
    """Payoff applied to the terminal value (European) or to the time
    average of the path (Asian). LINEAR pays the underlying quantity
    itself and ignores the strike; it exists for closed-form checks."""

    kind: PayoffKind
    strike: float = 0.0
    style: ExerciseStyle = ExerciseStyle.EUROPEAN

    def __post_init__(self) -> None:
        if self.strike < 0.0:
            raise ValueError("strike must be >= 0")


def payoff_value(spec: PayoffSpec, s: np.ndarray) -> np.ndarray:
    """Evaluate the payoff on the exercise quantity ``s`` (terminal value
    or path average, chosen by the caller per exercise style)."""
    s = np.asarray(s)
    if spec.kind is PayoffKind.CALL:
        return np.maximum(s - spec.strike, 0.0)
    if spec.kind is PayoffKind.PUT:
        return np.maximum(spec.strike - s, 0.0)
    return s.copy()
