"""Dimensional reduction of the asset universe.

Assets are grouped by the shape of their Hodrick-Prescott trends and only the
best asset of each group, by historical Sharpe ratio, is kept. Assets whose
historical volatility exceeds the risk cap of an investment package are
discarded beforehand.
"""
from __future__ import annotations

import warnings
from typing import TYPE_CHECKING, NamedTuple, Sequence, Union

import cytoolz.curried as tlz
import numpy as np
import pandas as pd
from scipy import sparse
from scipy.cluster import hierarchy
from scipy.sparse import linalg as spla
from scipy.spatial import distance

from pyqubofolio.exceptions import (
    AlignmentError,
    DimensionMismatchError,
    EmptyUniverseError,
    InputRangeError,
    InputValueError,
)
from pyqubofolio.market import sharpe_order

if TYPE_CHECKING:
    import numpy.typing as npt

    from pyqubofolio.market import AssetStats, PriceSeries, ReturnMatrix

    FloatArray = npt.NDArray[np.float64]
    IntArray = npt.NDArray[np.int64]
    DistanceLike = Union[pd.DataFrame, FloatArray]

__all__ = [
    "TrendSeries",
    "ClusterAssignment",
    "ReducedUniverse",
    "hp_filter",
    "hp_objective",
    "asset_trends",
    "trend_distance_matrix",
    "cluster_assets",
    "variance_curve",
    "select_n_clusters",
    "risk_filter",
    "reduce_universe",
]

HP_LAMBDA = 10000.0
PLATEAU_TOL = 0.05


class TrendSeries(NamedTuple):
    """Hodrick-Prescott trend of a series."""

    asset_id: str
    trend: FloatArray


class ClusterAssignment(NamedTuple):
    """Partition of assets into clusters.

    ``within_variance`` holds, for every cluster, the mean squared distance
    of its members to the cluster medoid. ``mean_within_variance`` is the
    mean over assets of the squared distance to their own medoid, i.e., the
    cluster variances weighted by cluster size.
    """

    n_clusters: int
    assets: tuple[str, ...]
    labels: IntArray
    within_variance: FloatArray
    mean_within_variance: float

    def members(self, cluster: int) -> list[str]:
        """Asset ids of a cluster, in input order."""
        return [a for a, c in zip(self.assets, self.labels) if c == cluster]

    def partition(self) -> frozenset[frozenset[str]]:
        """The clusters as a set of sets, independent of label numbering."""
        return frozenset(frozenset(self.members(c)) for c in range(self.n_clusters))


class ReducedUniverse(NamedTuple):
    """Assets kept after risk filtering and per-cluster selection."""

    selected: list[str]
    risk_cap: float | None
    empty_clusters: tuple[int, ...]


def _second_difference(n: int) -> sparse.csr_matrix:
    return sparse.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(n - 2, n), format="csr")


def hp_objective(series: FloatArray, trend: FloatArray, lamb: float = HP_LAMBDA) -> float:
    """Value of the Hodrick-Prescott objective for a given trend."""
    y = np.asarray(series, dtype="f8")
    tau = np.asarray(trend, dtype="f8")
    curvature = np.diff(tau, n=2)
    return float(np.sum((y - tau) ** 2) + lamb * np.sum(curvature**2))


def hp_filter(series: FloatArray, lamb: float = HP_LAMBDA, asset_id: str = "") -> TrendSeries:
    """Extract the trend of a series with the Hodrick-Prescott filter.

    The trend minimizes ``sum((y - tau)**2) + lamb * sum(diff(tau, 2)**2)`` and
    is obtained exactly by solving the pentadiagonal system
    ``(I + lamb * D.T @ D) tau = y`` where ``D`` is the second-difference operator.

    Parameters
    ----------
    series : array_like
        Series with at least 3 values.
    lamb : float, optional
        Smoothing weight, defaults to 10000 (daily data). ``0`` returns the input.
    asset_id : str, optional
        Identifier carried to the output, defaults to an empty string.

    Returns
    -------
    TrendSeries
        The trend, same length as the input.

    Examples
    --------
    >>> trend = hp_filter(np.array([1.0, 3.0, 5.0, 7.0]), lamb=100.0)
    >>> np.allclose(trend.trend, [1.0, 3.0, 5.0, 7.0])
    True
    """
    y = np.asarray(series, dtype="f8")
    if y.ndim != 1 or y.size < 3:
        raise DimensionMismatchError("series", ">= 3", y.size)
    if lamb < 0:
        raise InputRangeError("lamb", ">= 0")
    if not np.isfinite(y).all():
        raise InputValueError("series", ["finite values"])
    if lamb == 0:
        return TrendSeries(asset_id, y.copy())

    d2 = _second_difference(y.size)
    system = sparse.eye(y.size, format="csc") + lamb * (d2.T @ d2).tocsc()
    return TrendSeries(asset_id, np.asarray(spla.spsolve(system, y), dtype="f8"))


def asset_trends(
    data: list[PriceSeries] | ReturnMatrix,
    lamb: float = HP_LAMBDA,
    assets: Sequence[str] | None = None,
) -> list[TrendSeries]:
    """Hodrick-Prescott trends of price series or of return columns.

    Parameters
    ----------
    data : list of PriceSeries or ReturnMatrix
        Prices (one series per asset) or a matrix of returns.
    lamb : float, optional
        Smoothing weight, defaults to 10000.
    assets : list of str, optional
        Subset of assets to process, defaults to all.

    Returns
    -------
    list of TrendSeries
        One trend per asset, in the order of ``assets`` or of the input.
    """
    if isinstance(data, list):
        columns = {s.asset_id: s.prices for s in data}
    else:
        columns = dict(zip(data.assets, data.values.T))
    keys = list(columns) if assets is None else list(assets)
    missing = [a for a in keys if a not in columns]
    if missing:
        raise InputValueError("assets", list(columns))
    return [hp_filter(columns[a], lamb, a) for a in keys]


def _standardize(trend: FloatArray) -> FloatArray:
    """Z-score a trend; constant trends map to zeros."""
    if np.ptp(trend) == 0:
        return np.zeros_like(trend)
    return (trend - trend.mean()) / trend.std()


def trend_distance_matrix(trends: list[TrendSeries]) -> pd.DataFrame:
    """Euclidean distances between standardized trends.

    Each trend is z-scored first so that price levels do not dominate the
    distance.

    Parameters
    ----------
    trends : list of TrendSeries
        Trends of equal length.

    Returns
    -------
    pandas.DataFrame
        Symmetric distance matrix with a zero diagonal, indexed by asset id.
    """
    if not trends:
        raise DimensionMismatchError("trends", ">= 1", 0)
    sizes = {t.trend.size for t in trends}
    if len(sizes) > 1:
        raise AlignmentError(f"trends have different lengths {sorted(sizes)}")

    z = np.vstack([_standardize(np.asarray(t.trend, dtype="f8")) for t in trends])
    ids = [t.asset_id for t in trends]
    if len(trends) == 1:
        return pd.DataFrame(np.zeros((1, 1)), index=ids, columns=ids)
    dist = distance.squareform(distance.pdist(z, metric="euclidean"))
    return pd.DataFrame(dist, index=ids, columns=ids)


def _as_distances(distances: DistanceLike) -> tuple[FloatArray, tuple[str, ...]]:
    is_frame = isinstance(distances, pd.DataFrame)
    mat = distances.to_numpy("f8") if is_frame else np.asarray(distances, dtype="f8")
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatchError("distances", "a square matrix", mat.shape)
    index = distances.index if is_frame else range(mat.shape[0])
    return mat, tuple(str(i) for i in index)


def _medoid_variance(mat: FloatArray, members: IntArray) -> float:
    """Mean squared distance to the member with the smallest such mean."""
    sq = mat[np.ix_(members, members)] ** 2
    return float(sq.mean(axis=1).min())


def cluster_assets(distances: DistanceLike, n_clusters: int, seed: int = 0) -> ClusterAssignment:
    """Average-linkage agglomerative clustering on a precomputed distance matrix.

    Parameters
    ----------
    distances : pandas.DataFrame or array_like
        Symmetric distance matrix. Asset ids are taken from the frame index.
    n_clusters : int
        Number of clusters, between 1 and the number of assets.
    seed : int, optional
        Reserved for tie-breaking; the linkage is deterministic so the value
        does not change the output. Defaults to 0.

    Returns
    -------
    ClusterAssignment
        Labels are numbered by the first asset of each cluster in input order.
    """
    mat, ids = _as_distances(distances)
    n_assets = mat.shape[0]
    if not 1 <= n_clusters <= n_assets:
        raise DimensionMismatchError("n_clusters", f"between 1 and {n_assets}", n_clusters)
    _ = seed

    if n_assets == 1:
        raw = np.zeros(1, dtype="i8")
    else:
        links = hierarchy.linkage(distance.squareform(mat, checks=False), method="average")
        raw = hierarchy.cut_tree(links, n_clusters=n_clusters).ravel()

    first_seen = list(tlz.unique(raw.tolist()))
    relabel = {c: i for i, c in enumerate(first_seen)}
    labels = np.array([relabel[c] for c in raw.tolist()], dtype="i8")

    groups = [np.flatnonzero(labels == c) for c in range(n_clusters)]
    within = np.array([_medoid_variance(mat, g) for g in groups])
    sizes = np.array([g.size for g in groups])
    mean_within = float((within * sizes).sum() / n_assets)
    return ClusterAssignment(n_clusters, ids, labels, within, mean_within)


def variance_curve(distances: DistanceLike, max_clusters: int) -> pd.Series:
    """Mean within-cluster variance for 1 to ``max_clusters`` clusters."""
    mat, ids = _as_distances(distances)
    if not 1 <= max_clusters <= mat.shape[0]:
        raise DimensionMismatchError("max_clusters", f"between 1 and {mat.shape[0]}", max_clusters)
    frame = pd.DataFrame(mat, index=list(ids), columns=list(ids))
    curve = {k: cluster_assets(frame, k).mean_within_variance for k in range(1, max_clusters + 1)}
    return pd.Series(curve, name="mean_within_variance").rename_axis("n_clusters")


def select_n_clusters(
    distances: DistanceLike, max_clusters: int, plateau_tol: float = PLATEAU_TOL
) -> int:
    """Pick the number of clusters at the elbow of the variance curve.

    The decrease of the mean within-cluster variance from ``k`` to ``k + 1``
    clusters is divided by the variance of a single cluster, the same
    baseline for every ``k``, and not by the variance at ``k`` clusters. The
    first ``k`` whose decrease falls below ``plateau_tol`` is returned.

    Parameters
    ----------
    distances : pandas.DataFrame or array_like
        Symmetric distance matrix.
    max_clusters : int
        Largest number of clusters considered.
    plateau_tol : float, optional
        Relative decrease regarded as insignificant, defaults to 0.05.

    Returns
    -------
    int
        Selected number of clusters, ``max_clusters`` if no plateau is found.
    """
    if plateau_tol <= 0:
        raise InputRangeError("plateau_tol", "> 0")
    curve = variance_curve(distances, max_clusters).to_numpy()
    total = curve[0]
    if total == 0:
        return 1
    drops = (curve[:-1] - curve[1:]) / total
    below = np.flatnonzero(drops < plateau_tol)
    return int(below[0]) + 1 if below.size else max_clusters


def risk_filter(
    stats: list[AssetStats], risk_cap: float | None, slack: float = 0.0
) -> list[AssetStats]:
    """Drop assets whose historical volatility exceeds ``risk_cap * (1 + slack)``."""
    if risk_cap is None:
        return list(stats)
    if risk_cap < 0 or slack < 0:
        raise InputRangeError("risk_cap and slack", ">= 0")
    ceiling = risk_cap * (1.0 + slack)
    return [s for s in stats if s.hist_volatility <= ceiling]


def reduce_universe(
    stats: list[AssetStats],
    assignment: ClusterAssignment,
    risk_cap: float | None,
    slack: float = 0.0,
    label: str | None = None,
) -> ReducedUniverse:
    """Keep the best asset of each cluster among those within the risk cap.

    Parameters
    ----------
    stats : list of AssetStats
        Historical statistics of every clustered asset.
    assignment : ClusterAssignment
        Cluster of every asset.
    risk_cap : float or None
        Annualized volatility ceiling, ``None`` disables the filter.
    slack : float, optional
        Relative tolerance on the cap, defaults to 0.
    label : str, optional
        Package name used in error messages.

    Returns
    -------
    ReducedUniverse
        The highest historical Sharpe asset of every cluster with a survivor,
        ordered by cluster label. Clusters without survivors are reported.
    """
    by_id = {s.asset_id: s for s in stats}
    missing = [a for a in assignment.assets if a not in by_id]
    if missing:
        raise InputValueError("stats", missing)

    survivors = {s.asset_id for s in risk_filter([by_id[a] for a in assignment.assets], risk_cap, slack)}
    if not survivors:
        raise EmptyUniverseError(label)

    selected, empty = [], []
    for c in range(assignment.n_clusters):
        candidates = [by_id[a] for a in assignment.members(c) if a in survivors]
        if candidates:
            selected.append(sharpe_order(candidates)[0].asset_id)
        else:
            empty.append(c)
    if empty:
        warnings.warn(
            f"{len(empty)} of {assignment.n_clusters} clusters have no asset within the risk cap.",
            UserWarning,
            stacklevel=2,
        )
    return ReducedUniverse(selected, risk_cap, tuple(empty))
