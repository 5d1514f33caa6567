"""Top-level package for PyQuboFolio."""
from importlib.metadata import PackageNotFoundError, version

from pyqubofolio import helpers
from pyqubofolio.exceptions import (
    AlignmentError,
    ConfigError,
    DataParseError,
    DimensionMismatchError,
    EmptyPoolError,
    EmptyUniverseError,
    InputRangeError,
    InputTypeError,
    InputValueError,
    InsufficientDataError,
    MissingColumnError,
    NonPositivePriceError,
    OracleSizeError,
)
from pyqubofolio.helpers import synthetic_prices, write_prices
from pyqubofolio.market import (
    AssetStats,
    MarketSnapshot,
    PriceSeries,
    ReturnMatrix,
    asset_stats,
    estimate_snapshot,
    load_prices,
    log_returns,
    market_snapshots,
    read_prices,
    sharpe_order,
)
from pyqubofolio.pipeline import (
    RiskPackage,
    RunConfig,
    run_optimize,
    run_report,
    run_verify,
    sweep_gamma,
)
from pyqubofolio.print_versions import show_versions
from pyqubofolio.qubo import (
    Encoding,
    Holdings,
    QuboProblem,
    StepCostParams,
    auto_rho,
    brute_force_min,
    build_step_qubo,
    decode,
    encode,
    step_cost,
)
from pyqubofolio.reduction import (
    ClusterAssignment,
    ReducedUniverse,
    TrendSeries,
    asset_trends,
    cluster_assets,
    hp_filter,
    reduce_universe,
    risk_filter,
    select_n_clusters,
    trend_distance_matrix,
    variance_curve,
)
from pyqubofolio.sampler import (
    ExhaustiveSampler,
    SamplePool,
    Sampler,
    SamplerConfig,
    SimulatedAnnealingSampler,
    pool_top_by,
    sample,
)
from pyqubofolio.trajectory import (
    HoldingRule,
    Trajectory,
    TrajectoryMetrics,
    build_trajectory,
    check_holding,
    first_violation,
    portfolio_scorer,
    random_baseline,
    step_params,
    trajectory_from_frame,
    trajectory_metrics,
    verify_trajectory,
)

try:
    __version__ = version("pyqubofolio")
except PackageNotFoundError:
    __version__ = "999"

__all__ = [
    "PriceSeries",
    "ReturnMatrix",
    "MarketSnapshot",
    "AssetStats",
    "read_prices",
    "load_prices",
    "log_returns",
    "estimate_snapshot",
    "market_snapshots",
    "asset_stats",
    "sharpe_order",
    "TrendSeries",
    "ClusterAssignment",
    "ReducedUniverse",
    "hp_filter",
    "asset_trends",
    "trend_distance_matrix",
    "cluster_assets",
    "variance_curve",
    "select_n_clusters",
    "risk_filter",
    "reduce_universe",
    "Encoding",
    "Holdings",
    "StepCostParams",
    "QuboProblem",
    "decode",
    "encode",
    "auto_rho",
    "build_step_qubo",
    "step_cost",
    "brute_force_min",
    "Sampler",
    "SamplerConfig",
    "SamplePool",
    "SimulatedAnnealingSampler",
    "ExhaustiveSampler",
    "sample",
    "pool_top_by",
    "HoldingRule",
    "Trajectory",
    "TrajectoryMetrics",
    "portfolio_scorer",
    "step_params",
    "check_holding",
    "build_trajectory",
    "verify_trajectory",
    "first_violation",
    "trajectory_metrics",
    "random_baseline",
    "trajectory_from_frame",
    "RiskPackage",
    "RunConfig",
    "run_optimize",
    "run_verify",
    "run_report",
    "sweep_gamma",
    "helpers",
    "synthetic_prices",
    "write_prices",
    "AlignmentError",
    "ConfigError",
    "DataParseError",
    "DimensionMismatchError",
    "EmptyPoolError",
    "EmptyUniverseError",
    "InputRangeError",
    "InputTypeError",
    "InputValueError",
    "InsufficientDataError",
    "MissingColumnError",
    "NonPositivePriceError",
    "OracleSizeError",
    "show_versions",
    "__version__",
]
