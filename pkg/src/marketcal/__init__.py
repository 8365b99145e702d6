"""Intraday market simulation and calibration.

A three-trader market model (fundamental, momentum, noise) generates
minute-level price paths; a Kalman smoother extracts the latent
fundamental value from observed prices; calibration minimizes a
stylised-facts distance over (kappa, beta, sigma_n) with a
gradient-boosted-tree surrogate steering the search through a
Sobol-sampled parameter pool.
"""

from . import gbt, hyperopt
from .backend import BACKEND_NAME, available_backends
from .calibrate import (
    CalibrationConfig,
    CalibrationResult,
    calibrate,
    evaluate_point,
    point_seed,
    select_batch,
)
from .errors import (
    ConstantSeriesError,
    DegenerateModelError,
    InputError,
    InsufficientDataError,
    MarketCalError,
    NumericalError,
    SimulationDivergedError,
)
from .io import DayData, ingest_csv, write_csv
from .market import ModelParams, PricePath, SimState, gbm_paths, simulate, step
from .report import load_record, report, save_record, scenario
from .smoother import (
    FundamentalSeries,
    NoiseEstimates,
    em_fit,
    em_log_likelihoods,
    kalman_filter,
    kalman_smooth,
)
from .sobol import ParameterBounds, ParameterPool, scale, sobol_points
from .stylised import (
    ACF1_LAGS,
    ACF2_LAGS,
    DistanceBreakdown,
    DistanceWeights,
    acf,
    distance,
    excess_kurtosis,
    ks_statistic,
    returns,
    volatility,
)

__version__ = "0.1.0"
