"""Price ingestion and per-step market statistics."""
from __future__ import annotations

import re
import warnings
from pathlib import Path
from typing import IO, TYPE_CHECKING, NamedTuple, Union

import numpy as np
import pandas as pd

from pyqubofolio.exceptions import (
    AlignmentError,
    DataParseError,
    InputRangeError,
    InsufficientDataError,
    MissingColumnError,
    NonPositivePriceError,
)

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]
    SourceType = Union[str, Path, IO[str]]

__all__ = [
    "PriceSeries",
    "PriceTable",
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
]

T_FMT = "%Y-%m-%d"
WINDOW = 60
PERIODS_PER_YEAR = 252
RIDGE_SCALE = 1e-8
RIDGE_FLOOR = 1e-16
_MISSING = ("", "nan", "na", "null")


class PriceSeries(NamedTuple):
    """Dated close prices of a single asset."""

    asset_id: str
    dates: pd.DatetimeIndex
    prices: FloatArray


class PriceTable(NamedTuple):
    """Aligned price series and the number of rows dropped by the inner join."""

    series: list[PriceSeries]
    n_dropped: int


class ReturnMatrix(NamedTuple):
    """Log-returns with one row per date and one column per asset."""

    assets: list[str]
    dates: pd.DatetimeIndex
    values: FloatArray

    def to_frame(self) -> pd.DataFrame:
        """Return the matrix as a ``pandas.DataFrame`` indexed by date."""
        return pd.DataFrame(self.values, index=self.dates, columns=self.assets)

    def select(self, assets: list[str]) -> ReturnMatrix:
        """Return the sub-matrix of the given assets, in the given order."""
        missing = [a for a in assets if a not in self.assets]
        if missing:
            raise MissingColumnError(missing)
        idx = [self.assets.index(a) for a in assets]
        return ReturnMatrix(list(assets), self.dates, self.values[:, idx])


class MarketSnapshot(NamedTuple):
    """Forecast return vector and covariance matrix for one trading step."""

    t: int
    mu: FloatArray
    sigma: FloatArray


class AssetStats(NamedTuple):
    """Annualized historical volatility and Sharpe ratio of an asset.

    ``hist_sharpe`` is ``nan`` when the volatility is zero.
    """

    asset_id: str
    hist_volatility: float
    hist_sharpe: float

    @property
    def sharpe_defined(self) -> bool:
        """Whether the Sharpe ratio is defined, i.e., volatility is positive."""
        return self.hist_volatility > 0


def _line_of(row: int) -> int:
    """Convert a zero-based data row to a one-based file line, header included."""
    return row + 2


def read_prices(source: SourceType) -> PriceTable:
    """Read a wide price table and align all assets on their common dates.

    Parameters
    ----------
    source : str, pathlib.Path, or file-like
        CSV with a ``date,<asset_1>,...,<asset_N>`` header, ISO-8601 dates and
        ``.`` as the decimal separator. Empty cells are treated as missing.

    Returns
    -------
    PriceTable
        One ``PriceSeries`` per asset column, aligned on the dates where every
        asset has a price, and the number of dropped rows.
    """
    try:
        raw = pd.read_csv(source, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as ex:
        raise DataParseError(1, "file is empty") from ex
    except pd.errors.ParserError as ex:
        found = re.search(r"line (\d+)", str(ex))
        line = int(found.group(1)) if found else None
        raise DataParseError(line, "unexpected number of fields") from ex

    raw.columns = [str(c).strip() for c in raw.columns]
    if not raw.columns.size or raw.columns[0] != "date":
        raise MissingColumnError(["date"])
    assets = raw.columns[1:].tolist()
    if not assets:
        raise MissingColumnError(["<asset_id>"])

    dates = pd.to_datetime(raw["date"].str.strip(), format=T_FMT, errors="coerce")
    bad_dates = np.flatnonzero(dates.isna().to_numpy())
    if bad_dates.size:
        row = int(bad_dates[0])
        raise DataParseError(_line_of(row), f"invalid date {raw['date'].iloc[row]!r}")
    if not dates.is_monotonic_increasing or dates.duplicated().any():
        row = int(np.flatnonzero(~(dates.diff().dt.days.fillna(1) > 0).to_numpy())[0])
        raise DataParseError(_line_of(row), "dates must be strictly increasing")

    cells = raw[assets].apply(lambda c: c.str.strip())
    missing = cells.apply(lambda c: c.str.lower().isin(_MISSING))
    values = cells.where(~missing).apply(pd.to_numeric, errors="coerce")
    malformed = values.isna() & ~missing
    if malformed.to_numpy().any():
        row, col = np.argwhere(malformed.to_numpy())[0]
        cell = cells.iloc[row, col]
        raise DataParseError(_line_of(int(row)), f"invalid price {cell!r} for {assets[col]}")

    nonpositive = (values <= 0).to_numpy()
    if nonpositive.any():
        row, col = np.argwhere(nonpositive)[0]
        raise NonPositivePriceError(assets[col], dates.iloc[row].strftime(T_FMT))

    complete = values.notna().all(axis=1).to_numpy()
    n_dropped = int((~complete).sum())
    if complete.sum() < 2:
        raise InsufficientDataError("common dates", 2, int(complete.sum()))

    index = pd.DatetimeIndex(dates[complete], name="date")
    series = [
        PriceSeries(a, index, values.loc[complete, a].to_numpy("f8")) for a in assets
    ]
    return PriceTable(series, n_dropped)


def load_prices(source: SourceType) -> list[PriceSeries]:
    """Load a wide price CSV as a list of aligned ``PriceSeries``.

    Rows with a missing price for any asset are dropped and reported
    with a ``UserWarning``. See :func:`read_prices` for the file schema.
    """
    table = read_prices(source)
    if table.n_dropped:
        warnings.warn(
            f"Dropped {table.n_dropped} rows with missing prices.", UserWarning, stacklevel=2
        )
    return table.series


def log_returns(series: list[PriceSeries]) -> ReturnMatrix:
    """Compute log-returns ``ln(p_t / p_{t-1})`` of aligned price series.

    Examples
    --------
    >>> import pandas as pd
    >>> dates = pd.DatetimeIndex(["2020-01-01", "2020-01-02"])
    >>> ret = log_returns([PriceSeries("a", dates, np.array([100.0, 110.0]))])
    >>> round(float(ret.values[0, 0]), 5)
    0.09531
    """
    if not series:
        raise InsufficientDataError("price series", 1, 0)
    dates = series[0].dates
    for s in series:
        if len(s.prices) != len(s.dates):
            raise AlignmentError(f"{s.asset_id} has {len(s.prices)} prices for {len(s.dates)} dates")
        if not s.dates.equals(dates):
            raise AlignmentError(f"dates of {s.asset_id} differ from {series[0].asset_id}")
    if len(dates) < 2:
        raise InsufficientDataError("prices per asset", 2, len(dates))

    prices = np.column_stack([s.prices for s in series])
    values = np.diff(np.log(prices), axis=0)
    return ReturnMatrix([s.asset_id for s in series], dates[1:], values)


def _regularize(sigma: FloatArray) -> FloatArray:
    """Symmetrize a covariance matrix and add a trace-scaled ridge to its diagonal."""
    sigma = 0.5 * (sigma + sigma.T)
    n_assets = sigma.shape[0]
    trace = float(np.trace(sigma))
    ridge = RIDGE_SCALE * trace / n_assets if trace > 0 else RIDGE_FLOOR
    return sigma + ridge * np.eye(n_assets)


def estimate_snapshot(returns: ReturnMatrix, t: int, window: int = WINDOW) -> MarketSnapshot:
    """Estimate forecast returns and covariance from a trailing window.

    Parameters
    ----------
    returns : ReturnMatrix
        Log-returns of the asset universe.
    t : int
        Step index; rows ``[t - window, t)`` are used, so ``t`` itself is not seen.
    window : int, optional
        Number of trailing rows, defaults to 60. Must be at least 2.

    Returns
    -------
    MarketSnapshot
        Sample mean and sample covariance (denominator ``window - 1``). The
        covariance is symmetrized and receives a ridge of ``1e-8 * trace / N``
        on its diagonal.
    """
    if window < 2:
        raise InputRangeError("window", ">= 2")
    if t < window:
        raise InsufficientDataError("rows of history", window, t)
    n_rows = returns.values.shape[0]
    if t > n_rows:
        raise InsufficientDataError("return rows", t, n_rows)

    rows = returns.values[t - window : t]
    mu = rows.mean(axis=0)
    sigma = np.atleast_2d(np.cov(rows, rowvar=False, ddof=1))
    return MarketSnapshot(t, mu, _regularize(sigma))


def market_snapshots(
    returns: ReturnMatrix,
    window: int = WINDOW,
    in_sample: bool = False,
) -> list[MarketSnapshot]:
    """Build one snapshot per trading step after the warm-up window.

    Steps are numbered from zero and step ``k`` trades on return row
    ``window + k``. Out of sample, the forecast of that row only uses
    earlier rows. In sample, the window is shifted by one row so that it
    ends with the row being traded.

    Parameters
    ----------
    returns : ReturnMatrix
        Log-returns of the asset universe.
    window : int, optional
        Number of trailing rows, defaults to 60.
    in_sample : bool, optional
        Whether forecasts may see the traded row, defaults to ``False``.

    Returns
    -------
    list of MarketSnapshot
        Snapshots with ``t`` set to the step number.
    """
    n_rows = returns.values.shape[0]
    if n_rows <= window:
        raise InsufficientDataError("return rows", window + 1, n_rows)
    shift = 1 if in_sample else 0
    return [
        estimate_snapshot(returns, row + shift, window)._replace(t=step)
        for step, row in enumerate(range(window, n_rows))
    ]


def asset_stats(returns: ReturnMatrix, periods_per_year: int = PERIODS_PER_YEAR) -> list[AssetStats]:
    """Annualized historical volatility and Sharpe ratio of every asset.

    Parameters
    ----------
    returns : ReturnMatrix
        Log-returns with at least two rows.
    periods_per_year : int, optional
        Annualization constant, defaults to 252.

    Returns
    -------
    list of AssetStats
        One entry per asset, in column order. Constant return columns have
        zero volatility and an undefined (``nan``) Sharpe ratio.
    """
    if periods_per_year < 1:
        raise InputRangeError("periods_per_year", ">= 1")
    values = returns.values
    if values.shape[0] < 2:
        raise InsufficientDataError("return rows", 2, values.shape[0])

    constant = np.ptp(values, axis=0) == 0
    vol = np.where(constant, 0.0, values.std(axis=0, ddof=1)) * np.sqrt(periods_per_year)
    mean = values.mean(axis=0) * periods_per_year
    with np.errstate(divide="ignore", invalid="ignore"):
        sharpe = np.where(vol > 0, mean / np.where(vol > 0, vol, 1.0), np.nan)
    return [
        AssetStats(a, float(v), float(s)) for a, v, s in zip(returns.assets, vol, sharpe)
    ]


def sharpe_order(stats: list[AssetStats]) -> list[AssetStats]:
    """Sort by descending Sharpe ratio; undefined ratios last, ties by asset id."""
    return sorted(
        stats,
        key=lambda s: (not s.sharpe_defined, -s.hist_sharpe if s.sharpe_defined else 0.0, s.asset_id),
    )
