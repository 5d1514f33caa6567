"""End-to-end runs: configuration, optimization of risk packages, and artifacts."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, NamedTuple, Sequence, Union

import numpy as np
import pandas as pd
import ujson as json
from joblib import Parallel, delayed
from scipy import stats as sps

from pyqubofolio.exceptions import (
    ConfigError,
    DataParseError,
    InputRangeError,
    InputTypeError,
    MissingColumnError,
)
from pyqubofolio.helpers import slugify
from pyqubofolio.market import (
    PERIODS_PER_YEAR,
    WINDOW,
    asset_stats,
    load_prices,
    log_returns,
    market_snapshots,
)
from pyqubofolio.qubo import Encoding
from pyqubofolio.reduction import (
    HP_LAMBDA,
    PLATEAU_TOL,
    asset_trends,
    cluster_assets,
    reduce_universe,
    select_n_clusters,
    trend_distance_matrix,
    variance_curve,
)
from pyqubofolio.sampler import N_READS, SWEEPS, SamplerConfig, SimulatedAnnealingSampler
from pyqubofolio.trajectory import (
    MIN_HOLD,
    POOL_LIMIT,
    RANKINGS,
    HoldingRule,
    build_trajectory,
    first_violation,
    random_baseline,
    step_params,
    trajectory_from_frame,
    trajectory_metrics,
)

try:
    import tomllib
except ImportError:
    import tomli as tomllib

if TYPE_CHECKING:
    from pyqubofolio.market import AssetStats, MarketSnapshot, PriceSeries, ReturnMatrix
    from pyqubofolio.reduction import ClusterAssignment, ReducedUniverse
    from pyqubofolio.trajectory import Trajectory, TrajectoryMetrics

    RhoType = Union[float, str]

__all__ = [
    "RiskPackage",
    "RunConfig",
    "Universe",
    "PackageResult",
    "OptimizeResult",
    "GammaSweep",
    "VerifyResult",
    "prepare_universe",
    "run_package",
    "run_baselines",
    "sweep_gamma",
    "run_optimize",
    "run_verify",
    "frontier_percentiles",
    "run_report",
]

logger = logging.getLogger(__name__)

BASELINE_LABEL = "baseline"
BASELINE_COUNT = 1000
MAX_CLUSTERS = 12
TOTAL_BUNDLES = 5
BIT_DEPTH = 2
RISK_SLACK = 0.25
TREND_SOURCES = ("prices", "returns")
FRONTIER_COLUMNS = ["label", "annualized_volatility", "annualized_return", "sharpe"]
_REQUIRED = object()


@dataclass(frozen=True)
class RiskPackage:
    """Investment package: a volatility ceiling and the risk aversion used with it.

    ``risk_cap`` is an annualized volatility; ``None`` skips the risk filter,
    which is meant for a minimum-risk package with a large ``gamma``.
    """

    label: str
    gamma: float
    risk_cap: float | None = None

    @property
    def slug(self) -> str:
        return slugify(self.label)


def _get(section: dict[str, Any], key: str, kind: type, default: Any, prefix: str) -> Any:
    name = f"{prefix}{key}"
    if key not in section:
        if default is _REQUIRED:
            raise ConfigError(name, "is required")
        return default
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if isinstance(value, bool) and kind is not bool or not isinstance(value, kind):
        raise ConfigError(name, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _section(data: dict[str, Any], key: str, allowed: set[str]) -> dict[str, Any]:
    section = data.get(key, {})
    if not isinstance(section, dict):
        raise ConfigError(key, "expected a table")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{key}.{unknown[0]}", "unknown field")
    return section


def _check(ok: bool, name: str, reason: str) -> None:
    if not ok:
        raise ConfigError(name, reason)


@dataclass(frozen=True)
class RunConfig:
    """Settings of an ``optimize`` run.

    The TOML document has top-level keys ``input``, ``output``, ``seed``,
    ``n_jobs``, ``window``, ``periods_per_year`` and ``in_sample``, the tables
    ``[reduction]`` (``hp_lambda``, ``trend_source``, ``max_clusters``,
    ``plateau_tol``, ``risk_slack``, ``n_clusters``), ``[encoding]``
    (``total_bundles``, ``bit_depth`` or ``diversification_cap``, ``rho``),
    ``[holding]`` (``min_hold_days``), ``[selection]`` (``pool_limit``,
    ``rank_by``, ``resample``, ``full_investment``), ``[sampler]``
    (``n_reads``, ``sweeps``, ``beta_initial``, ``beta_final``), ``[baseline]``
    (``count``), and at least one ``[[packages]]`` entry with ``label``, ``gamma`` and an
    optional ``risk_cap``. Relative paths are resolved against the
    directory of the configuration file.
    """

    input: Path
    output: Path
    packages: tuple[RiskPackage, ...]
    window: int = WINDOW
    periods_per_year: int = PERIODS_PER_YEAR
    in_sample: bool = False
    hp_lambda: float = HP_LAMBDA
    trend_source: str = "prices"
    max_clusters: int = MAX_CLUSTERS
    plateau_tol: float = PLATEAU_TOL
    risk_slack: float = 0.0
    n_clusters: int | None = None
    total_bundles: int = TOTAL_BUNDLES
    bit_depth: int | None = BIT_DEPTH
    diversification_cap: float | None = None
    rho: RhoType = "auto"
    min_hold_days: int = MIN_HOLD
    pool_limit: int = POOL_LIMIT
    rank_by: str = "sharpe"
    resample: bool = False
    full_investment: bool = True
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    baseline_count: int = BASELINE_COUNT
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        _check(self.window >= 2, "window", "must be >= 2")
        _check(self.periods_per_year >= 1, "periods_per_year", "must be >= 1")
        _check(self.hp_lambda >= 0, "reduction.hp_lambda", "must be >= 0")
        _check(
            self.trend_source in TREND_SOURCES,
            "reduction.trend_source",
            f"must be one of {', '.join(TREND_SOURCES)}",
        )
        _check(self.max_clusters >= 1, "reduction.max_clusters", "must be >= 1")
        _check(self.plateau_tol > 0, "reduction.plateau_tol", "must be > 0")
        _check(self.risk_slack >= 0, "reduction.risk_slack", "must be >= 0")
        _check(
            self.n_clusters is None or self.n_clusters >= 1, "reduction.n_clusters", "must be >= 1"
        )
        _check(self.total_bundles >= 1, "encoding.total_bundles", "must be >= 1")
        _check(
            (self.bit_depth is None) != (self.diversification_cap is None),
            "encoding.bit_depth",
            "set exactly one of bit_depth and diversification_cap",
        )
        _check(self.bit_depth is None or self.bit_depth >= 1, "encoding.bit_depth", "must be >= 1")
        if self.diversification_cap is not None:
            cap = self.diversification_cap
            _check(0 < cap <= 1, "encoding.diversification_cap", "must be in (0, 1]")
            _check(
                cap * self.total_bundles >= 1,
                "encoding.diversification_cap",
                f"must be >= 1 / total_bundles ({1 / self.total_bundles})",
            )
        _check(
            self.rho == "auto"
            or (isinstance(self.rho, (int, float)) and not isinstance(self.rho, bool) and self.rho > 0),
            "encoding.rho",
            'must be "auto" or a positive number',
        )
        _check(self.min_hold_days >= 1, "holding.min_hold_days", "must be >= 1")
        _check(self.pool_limit >= 1, "selection.pool_limit", "must be >= 1")
        _check(
            self.rank_by in RANKINGS, "selection.rank_by", f"must be one of {', '.join(RANKINGS)}"
        )
        _check(self.baseline_count >= 0, "baseline.count", "must be >= 0")
        _check(0 <= self.seed < 2**64, "seed", "must be in [0, 2**64)")
        _check(self.n_jobs != 0, "n_jobs", "must be nonzero")
        _check(len(self.packages) >= 1, "packages", "at least one package is required")
        slugs = [p.slug for p in self.packages]
        for i, p in enumerate(self.packages):
            name = f"packages[{i}]"
            _check(bool(p.slug), f"{name}.label", "must contain a letter or a digit")
            _check(slugs.count(p.slug) == 1, f"{name}.label", f"duplicate label {p.label!r}")
            _check(p.slug != BASELINE_LABEL, f"{name}.label", "is reserved")
            _check(math.isfinite(p.gamma) and p.gamma >= 0, f"{name}.gamma", "must be >= 0")
            _check(p.risk_cap is None or p.risk_cap > 0, f"{name}.risk_cap", "must be > 0")

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: str | Path = ".") -> RunConfig:
        """Build and validate a configuration from a parsed TOML document."""
        top = {
            "input",
            "output",
            "seed",
            "n_jobs",
            "window",
            "periods_per_year",
            "in_sample",
            "reduction",
            "encoding",
            "holding",
            "selection",
            "sampler",
            "baseline",
            "packages",
        }
        unknown = sorted(set(data) - top)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        red = _section(
            data,
            "reduction",
            {"hp_lambda", "trend_source", "max_clusters", "plateau_tol", "risk_slack", "n_clusters"},
        )
        enc = _section(data, "encoding", {"total_bundles", "bit_depth", "diversification_cap", "rho"})
        hold = _section(data, "holding", {"min_hold_days"})
        sel = _section(data, "selection", {"pool_limit", "rank_by", "resample", "full_investment"})
        smp = _section(data, "sampler", {"n_reads", "sweeps", "beta_initial", "beta_final"})
        base = _section(data, "baseline", {"count"})

        raw_packages = data.get("packages")
        if not isinstance(raw_packages, list) or not raw_packages:
            raise ConfigError("packages", "at least one [[packages]] table is required")
        packages = []
        for i, pkg in enumerate(raw_packages):
            name = f"packages[{i}]."
            if not isinstance(pkg, dict):
                raise ConfigError(f"packages[{i}]", "expected a table")
            extra = sorted(set(pkg) - {"label", "gamma", "risk_cap"})
            if extra:
                raise ConfigError(f"{name}{extra[0]}", "unknown field")
            packages.append(
                RiskPackage(
                    _get(pkg, "label", str, _REQUIRED, name),
                    _get(pkg, "gamma", float, _REQUIRED, name),
                    _get(pkg, "risk_cap", float, None, name),
                )
            )

        seed = _get(data, "seed", int, 0, "")
        n_jobs = _get(data, "n_jobs", int, 1, "")
        _check(0 <= seed < 2**64, "seed", "must be in [0, 2**64)")
        try:
            sampler = SamplerConfig(
                n_reads=_get(smp, "n_reads", int, N_READS, "sampler."),
                sweeps=_get(smp, "sweeps", int, SWEEPS, "sampler."),
                beta_initial=_get(smp, "beta_initial", float, None, "sampler."),
                beta_final=_get(smp, "beta_final", float, None, "sampler."),
                seed=seed,
                n_jobs=1,
            )
        except (InputRangeError, InputTypeError) as ex:
            raise ConfigError("sampler", str(ex)) from ex

        cap = _get(enc, "diversification_cap", float, None, "encoding.")
        depth = _get(enc, "bit_depth", int, None if cap is not None else BIT_DEPTH, "encoding.")
        rho = enc.get("rho", "auto")
        if isinstance(rho, int) and not isinstance(rho, bool):
            rho = float(rho)
        if not (rho == "auto" or isinstance(rho, float)):
            raise ConfigError("encoding.rho", 'must be "auto" or a positive number')

        base_dir = Path(base_dir)
        return cls(
            input=base_dir / _get(data, "input", str, _REQUIRED, ""),
            output=base_dir / _get(data, "output", str, "output", ""),
            packages=tuple(packages),
            window=_get(data, "window", int, WINDOW, ""),
            periods_per_year=_get(data, "periods_per_year", int, PERIODS_PER_YEAR, ""),
            in_sample=_get(data, "in_sample", bool, False, ""),
            hp_lambda=_get(red, "hp_lambda", float, HP_LAMBDA, "reduction."),
            trend_source=_get(red, "trend_source", str, "prices", "reduction."),
            max_clusters=_get(red, "max_clusters", int, MAX_CLUSTERS, "reduction."),
            plateau_tol=_get(red, "plateau_tol", float, PLATEAU_TOL, "reduction."),
            risk_slack=_get(red, "risk_slack", float, 0.0, "reduction."),
            n_clusters=_get(red, "n_clusters", int, None, "reduction."),
            total_bundles=_get(enc, "total_bundles", int, TOTAL_BUNDLES, "encoding."),
            bit_depth=depth,
            diversification_cap=cap,
            rho=rho,
            min_hold_days=_get(hold, "min_hold_days", int, MIN_HOLD, "holding."),
            pool_limit=_get(sel, "pool_limit", int, POOL_LIMIT, "selection."),
            rank_by=_get(sel, "rank_by", str, "sharpe", "selection."),
            resample=_get(sel, "resample", bool, False, "selection."),
            full_investment=_get(sel, "full_investment", bool, True, "selection."),
            sampler=sampler,
            baseline_count=_get(base, "count", int, BASELINE_COUNT, "baseline."),
            seed=seed,
            n_jobs=n_jobs,
        )

    @classmethod
    def from_toml(cls, path: str | Path) -> RunConfig:
        """Read and validate a TOML configuration file."""
        path = Path(path)
        try:
            with path.open("rb") as f:
                data = tomllib.load(f)
        except FileNotFoundError as ex:
            raise ConfigError("config", f"file {path} not found") from ex
        except tomllib.TOMLDecodeError as ex:
            raise ConfigError("config", str(ex)) from ex
        return cls.from_dict(data, path.parent)

    def encoding(self, n_assets: int) -> Encoding:
        """Encoding of a universe of ``n_assets`` assets."""
        if self.diversification_cap is not None:
            return Encoding.from_diversification(n_assets, self.total_bundles, self.diversification_cap)
        return Encoding(n_assets, int(self.bit_depth or BIT_DEPTH), self.total_bundles)


class Universe(NamedTuple):
    """Market data and clustering shared by all packages of a run."""

    series: list[PriceSeries]
    returns: ReturnMatrix
    stats: list[AssetStats]
    distances: pd.DataFrame
    curve: pd.Series
    assignment: ClusterAssignment
    snapshots: list[MarketSnapshot]
    dates: pd.DatetimeIndex


class PackageResult(NamedTuple):
    """Optimized trajectory of one risk package."""

    package: RiskPackage
    reduced: ReducedUniverse
    trajectory: Trajectory
    metrics: TrajectoryMetrics


class OptimizeResult(NamedTuple):
    """Outcome of :func:`run_optimize`."""

    packages: list[PackageResult]
    baselines: list[TrajectoryMetrics]
    artifacts: list[Path]


class GammaSweep(NamedTuple):
    """Realized figures over a grid of risk aversions and the chosen value."""

    label: str
    best_gamma: float
    table: pd.DataFrame


class VerifyResult(NamedTuple):
    """Outcome of :func:`run_verify`; ``date`` and ``asset`` locate the first violation."""

    ok: bool
    date: str | None = None
    asset: str | None = None


def prepare_universe(config: RunConfig) -> Universe:
    """Load prices, compute statistics, and cluster the assets once for all packages.

    Clustering uses the whole input history. ``config.in_sample`` only
    governs the forecasts of the trading steps.
    """
    series = load_prices(config.input)
    returns = log_returns(series)
    stats = asset_stats(returns, config.periods_per_year)
    source = series if config.trend_source == "prices" else returns
    distances = trend_distance_matrix(asset_trends(source, config.hp_lambda))
    n_assets = len(returns.assets)
    max_clusters = min(config.max_clusters, n_assets)
    curve = variance_curve(distances, max_clusters)
    if config.n_clusters is None:
        n_clusters = select_n_clusters(distances, max_clusters, config.plateau_tol)
    else:
        if config.n_clusters > n_assets:
            raise ConfigError("reduction.n_clusters", f"exceeds the number of assets ({n_assets})")
        n_clusters = config.n_clusters
    assignment = cluster_assets(distances, n_clusters, config.seed)
    logger.info("Clustered %d assets into %d clusters.", n_assets, n_clusters)
    snapshots = market_snapshots(returns, config.window, config.in_sample)
    dates = returns.dates[config.window :]
    return Universe(series, returns, stats, distances, curve, assignment, snapshots, dates)


def run_package(
    universe: Universe, config: RunConfig, package: RiskPackage, n_jobs: int = 1
) -> PackageResult:
    """Reduce the universe for one package and build its trajectory."""
    reduced = reduce_universe(
        universe.stats, universe.assignment, package.risk_cap, config.risk_slack, package.label
    )
    returns = universe.returns.select(reduced.selected)
    snapshots = market_snapshots(returns, config.window, config.in_sample)
    enc = config.encoding(len(reduced.selected))
    params = step_params(snapshots, enc, package.gamma, config.rho)
    traj = build_trajectory(
        snapshots,
        enc,
        params,
        SimulatedAnnealingSampler(config.sampler),
        HoldingRule(config.min_hold_days),
        config.pool_limit,
        config.rank_by,
        config.resample,
        n_jobs,
        reduced.selected,
        config.full_investment,
    )
    metrics = trajectory_metrics(traj, snapshots, config.periods_per_year)
    logger.info(
        "Package %s: %d assets, Sharpe %.4f, %d fallbacks.",
        package.label,
        len(reduced.selected),
        metrics.sharpe,
        metrics.fallback_count,
    )
    if package.risk_cap is not None and metrics.annualized_volatility > package.risk_cap * (
        1 + RISK_SLACK
    ):
        logger.warning(
            "Package %s: realized volatility %.4f exceeds its cap %.4f.",
            package.label,
            metrics.annualized_volatility,
            package.risk_cap,
        )
    return PackageResult(package, reduced, traj, metrics)


def run_baselines(universe: Universe, config: RunConfig) -> list[TrajectoryMetrics]:
    """Metrics of random feasible trajectories over the full universe."""
    if config.baseline_count == 0:
        return []
    enc = config.encoding(len(universe.returns.assets))
    pairs = random_baseline(
        universe.snapshots,
        enc,
        HoldingRule(config.min_hold_days),
        config.baseline_count,
        config.seed,
        config.periods_per_year,
        config.n_jobs,
    )
    return [m for _, m in pairs]


def _run_packages(
    universe: Universe, config: RunConfig, packages: Sequence[RiskPackage]
) -> list[PackageResult]:
    if config.n_jobs == 1 or len(packages) == 1:
        return [run_package(universe, config, p, config.n_jobs) for p in packages]
    return Parallel(n_jobs=config.n_jobs)(
        delayed(run_package)(universe, config, p) for p in packages
    )


def sweep_gamma(
    universe: Universe, config: RunConfig, package: RiskPackage, gammas: Sequence[float]
) -> GammaSweep:
    """Pick the risk aversion whose realized volatility is closest to the cap from below.

    When no value of the grid stays under the cap, the one with the lowest
    realized volatility is chosen. Packages without a cap keep their
    ``gamma``.
    """
    grid = sorted({float(g) for g in gammas})
    if not grid or grid[0] < 0:
        raise InputRangeError("gammas", "non-empty lists of values >= 0")
    variants = [dataclasses.replace(package, gamma=g) for g in grid]
    results = _run_packages(universe, config, variants)
    table = pd.DataFrame(
        {
            "gamma": grid,
            "annualized_volatility": [r.metrics.annualized_volatility for r in results],
            "annualized_return": [r.metrics.annualized_return for r in results],
            "sharpe": [r.metrics.sharpe for r in results],
        }
    )
    if package.risk_cap is None:
        return GammaSweep(package.label, package.gamma, table)
    vol = table["annualized_volatility"].to_numpy()
    under = np.flatnonzero(vol <= package.risk_cap)
    if under.size:
        best = int(under[np.argmax(vol[under])])
    else:
        best = int(np.argmin(vol))
    return GammaSweep(package.label, grid[best], table)


def _write_csv(frame: pd.DataFrame, path: Path, artifacts: list[Path]) -> None:
    frame.to_csv(path, index=False, lineterminator="\n")
    artifacts.append(path)
    logger.info("Wrote %s", path)


def _write_artifacts(
    universe: Universe,
    config: RunConfig,
    results: list[PackageResult],
    baselines: list[TrajectoryMetrics],
    sweeps: list[GammaSweep],
) -> list[Path]:
    out = config.output
    out.mkdir(parents=True, exist_ok=True)
    artifacts: list[Path] = []
    for res in results:
        slug = res.package.slug
        _write_csv(res.trajectory.to_frame(universe.dates), out / f"trajectory_{slug}.csv", artifacts)
        path = out / f"metrics_{slug}.json"
        path.write_text(json.dumps(res.metrics.to_dict(), sort_keys=True, indent=2) + "\n")
        artifacts.append(path)

    rows = [
        (r.package.label, r.metrics.annualized_volatility, r.metrics.annualized_return, r.metrics.sharpe)
        for r in results
    ]
    rows += [
        (BASELINE_LABEL, m.annualized_volatility, m.annualized_return, m.sharpe) for m in baselines
    ]
    _write_csv(pd.DataFrame(rows, columns=FRONTIER_COLUMNS), out / "frontier.csv", artifacts)

    clusters = pd.DataFrame(
        {
            "asset_id": [s.asset_id for s in universe.stats],
            "cluster": universe.assignment.labels,
            "hist_volatility": [s.hist_volatility for s in universe.stats],
            "hist_sharpe": [s.hist_sharpe for s in universe.stats],
        }
    )
    for res in results:
        chosen = set(res.reduced.selected)
        clusters[f"selected_{res.package.slug}"] = clusters["asset_id"].isin(chosen).astype(int)
    _write_csv(clusters, out / "clusters.csv", artifacts)
    _write_csv(universe.curve.reset_index(), out / "variance_curve.csv", artifacts)

    for sweep in sweeps:
        _write_csv(sweep.table, out / f"gamma_sweep_{slugify(sweep.label)}.csv", artifacts)
    return artifacts


def run_optimize(config: RunConfig, gammas: Sequence[float] | None = None) -> OptimizeResult:
    """Optimize every risk package, draw baselines, and write the artifacts.

    Parameters
    ----------
    config : RunConfig
        Run settings.
    gammas : list of float, optional
        Grid of risk aversions. When given, the ``gamma`` of every package
        with a risk cap is replaced by the result of :func:`sweep_gamma`.

    Returns
    -------
    OptimizeResult
        Per-package results, baseline metrics, and the written files.
        Written files are byte-identical for a fixed configuration,
        regardless of ``n_jobs``.
    """
    universe = prepare_universe(config)
    packages = list(config.packages)
    sweeps = []
    if gammas:
        for i, p in enumerate(packages):
            if p.risk_cap is None:
                continue
            sweep = sweep_gamma(universe, config, p, gammas)
            logger.info("Package %s: gamma %s chosen by the sweep.", p.label, sweep.best_gamma)
            packages[i] = dataclasses.replace(p, gamma=sweep.best_gamma)
            sweeps.append(sweep)
    results = _run_packages(universe, config, packages)
    baselines = run_baselines(universe, config)
    artifacts = _write_artifacts(universe, config, results, baselines, sweeps)
    return OptimizeResult(results, baselines, artifacts)


def run_verify(path: str | Path, min_hold_days: int) -> VerifyResult:
    """Check a ``date,asset_id,weight`` trajectory file against the holding rule."""
    rule = HoldingRule(min_hold_days)
    try:
        frame = pd.read_csv(path, dtype={"date": str, "asset_id": str}, encoding="utf-8")
    except pd.errors.EmptyDataError as ex:
        raise DataParseError(1, "file is empty") from ex
    except pd.errors.ParserError as ex:
        raise DataParseError(None, str(ex)) from ex
    try:
        traj, dates = trajectory_from_frame(frame)
    except (ValueError, TypeError) as ex:
        raise DataParseError(None, str(ex)) from ex
    found = first_violation(traj, rule)
    if found is None:
        return VerifyResult(True)
    step, n = found
    assets = traj.assets or []
    return VerifyResult(False, dates[step], assets[n])


def frontier_percentiles(frontier: pd.DataFrame) -> pd.DataFrame:
    """Sharpe percentile of every package among the baseline trajectories.

    Percentiles use the mean of the strict and weak definitions, so a
    package equal to the baseline median scores 50. They are ``nan`` when
    there is no baseline with a defined Sharpe ratio.
    """
    missing = [c for c in FRONTIER_COLUMNS if c not in frontier.columns]
    if missing:
        raise MissingColumnError(missing)
    is_base = frontier["label"].astype(str) == BASELINE_LABEL
    base = frontier.loc[is_base, "sharpe"].astype(float).to_numpy()
    base = base[np.isfinite(base)]
    packages = frontier.loc[~is_base, FRONTIER_COLUMNS].reset_index(drop=True)

    def percentile(sharpe: float) -> float:
        if not base.size or not np.isfinite(sharpe):
            return math.nan
        return float(sps.percentileofscore(base, sharpe, kind="mean"))

    packages["percentile"] = [percentile(float(s)) for s in packages["sharpe"]]
    return packages


def run_report(path: str | Path) -> str:
    """Summarize a frontier file: package metrics and Sharpe percentiles."""
    try:
        frontier = pd.read_csv(path, dtype={"label": str}, encoding="utf-8")
    except pd.errors.EmptyDataError as ex:
        raise DataParseError(1, "file is empty") from ex
    table = frontier_percentiles(frontier)
    n_base = int((frontier["label"].astype(str) == BASELINE_LABEL).sum())
    lines = [f"{n_base} baseline trajectories"]
    for row in table.itertuples(index=False):
        pct = "undefined" if math.isnan(row.percentile) else f"{row.percentile:.1f}"
        sharpe = "undefined" if math.isnan(row.sharpe) else f"{row.sharpe:.4f}"
        lines.append(
            f"{row.label}: annualized volatility {row.annualized_volatility:.4f}, "
            f"annualized return {row.annualized_return:.4f}, Sharpe {sharpe}, "
            f"percentile {pct}"
        )
    return "\n".join(lines)
