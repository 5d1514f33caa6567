"""Some helper functions for PyQuboFolio."""
from __future__ import annotations

from typing import TYPE_CHECKING, NamedTuple

import numpy as np
import pandas as pd

from pyqubofolio.exceptions import InputRangeError
from pyqubofolio.market import T_FMT

if TYPE_CHECKING:
    from pathlib import Path

__all__ = ["SyntheticMarket", "synthetic_prices", "write_prices", "slugify"]

START_DATE = "2019-05-31"
N_GROUPS = 7
AMPLITUDE = 0.04
NOISE_RANGE = (0.0015, 0.0111)
DRIFT_RANGE = (5e-6, 2.4e-5)


class SyntheticMarket(NamedTuple):
    """Synthetic prices and the planted trend group of every asset."""

    prices: pd.DataFrame
    groups: dict[str, int]


def synthetic_prices(
    seed: int,
    n_assets: int,
    n_days: int,
    n_groups: int = N_GROUPS,
    amplitude: float = AMPLITUDE,
    noise_range: tuple[float, float] = NOISE_RANGE,
    drift_range: tuple[float, float] = DRIFT_RANGE,
    start: str = START_DATE,
) -> SyntheticMarket:
    """Generate seeded daily prices with planted trend groups.

    Asset ``i`` belongs to group ``i % n_groups``. The log-price of an asset
    of group ``g`` is ``m_g * t + amplitude * cos(2 * pi * (g + 1) * t / n_days)``
    plus white noise, so assets of one group share the same trend and the
    trends of different groups are orthogonal. Noise level and drift both
    grow with the group index, which gives riskier groups higher returns.

    Parameters
    ----------
    seed : int
        Random seed.
    n_assets : int
        Number of assets, at least ``n_groups``.
    n_days : int
        Number of business days, at least 3.
    n_groups : int, optional
        Number of trend groups, defaults to 7.
    amplitude : float, optional
        Amplitude of the cyclic log-price component, defaults to 0.04.
    noise_range : tuple of float, optional
        Daily log-price noise of the first and last group.
    drift_range : tuple of float, optional
        Daily log-price drift of the first and last group.
    start : str, optional
        First business date, defaults to ``2019-05-31``.

    Returns
    -------
    SyntheticMarket
        Prices indexed by date with one column per asset (``A00``, ``A01``, ...)
        and the group of every asset.

    Examples
    --------
    >>> market = synthetic_prices(0, n_assets=14, n_days=100)
    >>> market.prices.shape
    (100, 14)
    >>> market.groups["A08"]
    1
    """
    if n_groups < 1:
        raise InputRangeError("n_groups", ">= 1")
    if n_assets < n_groups:
        raise InputRangeError("n_assets", f">= n_groups ({n_groups})")
    if n_days < 3:
        raise InputRangeError("n_days", ">= 3")

    rng = np.random.default_rng(seed)
    t = np.arange(n_days)
    noise = np.linspace(*noise_range, n_groups)
    drift = np.linspace(*drift_range, n_groups)
    width = len(str(n_assets - 1))
    assets = [f"A{i:0{max(width, 2)}d}" for i in range(n_assets)]
    groups = {a: i % n_groups for i, a in enumerate(assets)}

    jitter = rng.uniform(0.85, 1.15, n_assets)
    level = rng.uniform(-0.5, 0.5, n_assets)
    shocks = rng.standard_normal((n_days, n_assets))
    log_prices = np.empty((n_days, n_assets))
    for i, a in enumerate(assets):
        g = groups[a]
        cycle = amplitude * np.cos(2.0 * np.pi * (g + 1) * t / n_days)
        log_prices[:, i] = level[i] + drift[g] * t + cycle + noise[g] * jitter[i] * shocks[:, i]

    dates = pd.bdate_range(start, periods=n_days, name="date")
    prices = pd.DataFrame(100.0 * np.exp(log_prices), index=dates, columns=assets)
    return SyntheticMarket(prices, groups)


def write_prices(prices: pd.DataFrame, path: str | Path) -> None:
    """Write a date-indexed price frame in the ``date,<asset_id>,...`` CSV schema."""
    frame = prices.copy()
    frame.index = pd.DatetimeIndex(frame.index).strftime(T_FMT)
    frame.index.name = "date"
    frame.to_csv(path, float_format="%.6f", lineterminator="\n")


def slugify(label: str) -> str:
    """Lower-case file name fragment of a label.

    Examples
    --------
    >>> slugify("Minimum risk"), slugify("10%")
    ('minimum_risk', '10pct')
    """
    text = label.strip().lower().replace("%", "pct")
    slug = "".join(c if c.isalnum() else "_" for c in text)
    return "_".join(p for p in slug.split("_") if p)
