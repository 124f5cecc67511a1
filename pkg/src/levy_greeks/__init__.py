"""Monte Carlo Greeks for exponential jump-diffusions via stochastic weights."""

from .estimator import (Accumulator, EMPTY_ACCUMULATOR, GreekEstimate,
                        PriceEstimate, RunConfig, StatRequest,
                        accumulator_from_values, estimate_greek,
                        estimate_greeks, estimate_price, estimate_requests,
                        merge_accumulators)
from .functionals import PathFunctionals, batch_functionals, compute_functionals
from .model import (JumpMarks, ModelParams, NormalMarks, PointMassMarks,
                    UniformMarks, effective_drift, risk_neutral_compensator,
                    validate)
from .oracles import (FDSpec, asian_linear_delta, asian_linear_theta,
                      bs_price_and_greeks, fd_greek, fd_greeks_matrix,
                      merton_price)
from .payoffs import ExerciseStyle, PayoffKind, PayoffSpec, payoff_value
from .simulate import (BatchPaths, GridSpec, PathSample, PathStreams, RawBatch,
                       RawPath, antithetic_pair, derive_stream, draw_raw_batch,
                       draw_raw_path, iter_batches, materialize,
                       poisson_cdf_table, simulate_path)
from .weights import GammaVariant, GreekKind, asian_weight, european_weight

__version__ = "0.1.0"

__all__ = [
    "Accumulator",
    "BatchPaths",
    "EMPTY_ACCUMULATOR",
    "ExerciseStyle",
    "FDSpec",
    "GammaVariant",
    "GreekEstimate",
    "GreekKind",
    "GridSpec",
    "JumpMarks",
    "ModelParams",
    "NormalMarks",
    "PathFunctionals",
    "PathSample",
    "PathStreams",
    "PayoffKind",
    "PayoffSpec",
    "PointMassMarks",
    "PriceEstimate",
    "RawBatch",
    "RawPath",
    "RunConfig",
    "StatRequest",
    "UniformMarks",
    "accumulator_from_values",
    "antithetic_pair",
    "asian_linear_delta",
    "asian_linear_theta",
    "asian_weight",
    "batch_functionals",
    "bs_price_and_greeks",
    "compute_functionals",
    "derive_stream",
    "draw_raw_batch",
    "draw_raw_path",
    "effective_drift",
    "estimate_greek",
    "estimate_greeks",
    "estimate_price",
    "estimate_requests",
    "european_weight",
    "fd_greek",
    "fd_greeks_matrix",
    "iter_batches",
    "materialize",
    "merge_accumulators",
    "merton_price",
    "payoff_value",
    "poisson_cdf_table",
    "risk_neutral_compensator",
    "simulate_path",
    "validate",
    "__version__",
]
