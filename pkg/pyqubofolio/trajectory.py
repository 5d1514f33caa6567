"""Trajectory construction by ranked post-selection under a minimal holding period."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Callable, Literal, NamedTuple, Sequence, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from pyqubofolio.exceptions import (
    DataParseError,
    DimensionMismatchError,
    InputRangeError,
    InputValueError,
    MissingColumnError,
)
from pyqubofolio.market import PERIODS_PER_YEAR, T_FMT
from pyqubofolio.qubo import Holdings, StepCostParams, auto_rho, build_step_qubo, decode
from pyqubofolio.sampler import pool_top_by

if TYPE_CHECKING:
    import numpy.typing as npt

    from pyqubofolio.market import MarketSnapshot
    from pyqubofolio.qubo import Encoding
    from pyqubofolio.sampler import Candidate, Sampler, SamplePool

    FloatArray = npt.NDArray[np.float64]
    IntArray = npt.NDArray[np.int64]
    RankBy = Literal["sharpe", "return", "volatility"]
    RhoType = Union[float, Literal["auto"]]

__all__ = [
    "HoldingRule",
    "Trajectory",
    "TrajectoryMetrics",
    "RANKINGS",
    "portfolio_scorer",
    "step_params",
    "check_holding",
    "build_trajectory",
    "verify_trajectory",
    "first_violation",
    "trajectory_metrics",
    "draw_normalized",
    "random_baseline",
    "trajectory_from_frame",
]

MIN_HOLD = 7
POOL_LIMIT = 64
RANKINGS = ("sharpe", "return", "volatility")
NEVER = -(10**9)


@dataclass(frozen=True)
class HoldingRule:
    """Minimal number of trading steps between a purchase and a sale of an asset."""

    min_hold_days: int = MIN_HOLD

    def __post_init__(self) -> None:
        if int(self.min_hold_days) != self.min_hold_days or self.min_hold_days < 1:
            raise InputRangeError("min_hold_days", "integers >= 1")


class Trajectory(NamedTuple):
    """Holdings over consecutive trading steps.

    ``units`` holds one row of integer bundle counts per step and
    ``last_purchase`` the step of the most recent increase of each asset
    after the last step (a large negative number if never bought).
    """

    steps: list[int]
    units: IntArray
    total_bundles: int
    last_purchase: IntArray
    fallback_count: int = 0
    assets: list[str] | None = None

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def weights(self) -> FloatArray:
        return self.units / self.total_bundles

    def holdings(self, k: int) -> Holdings:
        """Holdings at the ``k``-th step."""
        return Holdings(self.units[k].copy(), self.total_bundles)

    def to_frame(self, dates: Sequence[Any] | None = None) -> pd.DataFrame:
        """Long ``date,asset_id,weight`` frame, one row per step and asset.

        Parameters
        ----------
        dates : sequence, optional
            Date of each step. Defaults to the step numbers.
        """
        n_assets = self.units.shape[1]
        assets = self.assets or [str(n) for n in range(n_assets)]
        if dates is None:
            labels = [str(t) for t in self.steps]
        else:
            if len(dates) != self.n_steps:
                raise DimensionMismatchError("dates", self.n_steps, len(dates))
            labels = [pd.Timestamp(d).strftime(T_FMT) for d in dates]
        return pd.DataFrame(
            {
                "date": np.repeat(labels, n_assets),
                "asset_id": np.tile(assets, self.n_steps),
                "weight": self.weights.ravel(),
            }
        )


class TrajectoryMetrics(NamedTuple):
    """Realized figures of a trajectory.

    ``sharpe`` is ``nan`` when ``volatility`` is zero.
    """

    total_return: float
    volatility: float
    sharpe: float
    annualized_return: float
    annualized_volatility: float
    fallback_count: int = 0

    @property
    def sharpe_defined(self) -> bool:
        return self.volatility > 0

    def to_dict(self) -> dict[str, float | int | None]:
        """Plain dictionary with ``None`` in place of an undefined Sharpe ratio."""
        out: dict[str, float | int | None] = dict(self._asdict())
        out["sharpe"] = self.sharpe if self.sharpe_defined else None
        return out


def portfolio_scorer(
    mu: FloatArray, sigma: FloatArray, rank_by: RankBy = "sharpe"
) -> Callable[[Holdings], tuple[float, ...]]:
    """Figure of merit of holdings at one step, larger is better.

    Parameters
    ----------
    mu : numpy.ndarray
        Forecast returns of the step.
    sigma : numpy.ndarray
        Forecast covariance of the step.
    rank_by : {"sharpe", "return", "volatility"}, optional
        ``sharpe`` ranks by ``mu.w / sqrt(w.sigma.w)``, ``return`` by ``mu.w``
        and ``volatility`` by ascending ``sqrt(w.sigma.w)``. Defaults to ``sharpe``.

    Returns
    -------
    callable
        Maps holdings to a sortable tuple. For the Sharpe ratio, holdings
        with zero volatility are ranked by their return, ahead of every
        finite ratio when the return is positive and behind them otherwise.
    """
    if rank_by not in RANKINGS:
        raise InputValueError("rank_by", RANKINGS, rank_by)

    def score(holdings: Holdings) -> tuple[float, ...]:
        w = holdings.weights
        ret = float(mu @ w)
        var = float(w @ sigma @ w)
        if rank_by == "return":
            return (ret,)
        if rank_by == "volatility":
            return (-math.sqrt(max(var, 0.0)),)
        if var <= 0:
            return (2.0, ret) if ret > 0 else (0.0, ret)
        return (1.0, ret / math.sqrt(var))

    return score


def step_params(
    snapshots: Sequence[MarketSnapshot], enc: Encoding, gamma: float, rho: RhoType = "auto"
) -> list[StepCostParams]:
    """Cost parameters of every step, with ``rho="auto"`` computed per step."""
    if rho != "auto" and not (isinstance(rho, (int, float)) and rho > 0):
        raise InputValueError("rho", ["auto", "a positive number"], str(rho))
    return [
        StepCostParams(
            s.mu,
            s.sigma,
            gamma,
            auto_rho(s.mu, s.sigma, gamma, enc) if rho == "auto" else float(rho),
        )
        for s in snapshots
    ]


def _is_legal(
    prev: IntArray, last_purchase: IntArray, candidate: IntArray, t: int, min_hold: int
) -> bool:
    sold = candidate < prev
    return bool(np.all(t - last_purchase[sold] >= min_hold))


def _advance(prev: IntArray, last_purchase: IntArray, chosen: IntArray, t: int) -> IntArray:
    return np.where(chosen > prev, t, last_purchase)


def check_holding(prefix: Trajectory | None, candidate: Holdings, t: int, rule: HoldingRule) -> bool:
    """Check whether ``candidate`` can follow ``prefix`` at step ``t``.

    Parameters
    ----------
    prefix : Trajectory or None
        Trajectory of steps ``0`` to ``t - 1``; ``None`` or empty at ``t = 0``.
    candidate : Holdings
        Holdings proposed for step ``t``.
    t : int
        Step index.
    rule : HoldingRule
        Minimal holding period.

    Returns
    -------
    bool
        ``True`` if every asset sold by ``candidate`` was last bought at
        least ``rule.min_hold_days`` steps before ``t``.
    """
    if prefix is None or prefix.n_steps == 0:
        return True
    if prefix.n_steps != t:
        raise DimensionMismatchError("prefix", t, prefix.n_steps)
    return _is_legal(
        prefix.units[-1],
        prefix.last_purchase,
        np.asarray(candidate.units),
        t,
        rule.min_hold_days,
    )


def _budget_filter(pool: SamplePool, enc: Encoding) -> Callable[[Holdings], bool]:
    k = enc.total_bundles
    if any(decode(x, enc).invested == k for x in pool.states):
        return lambda h: h.invested == k
    return lambda h: h.invested <= k


def _select(
    ranked: list[Candidate], prev: IntArray, last_purchase: IntArray, t: int, min_hold: int
) -> IntArray | None:
    for cand in ranked:
        if _is_legal(prev, last_purchase, cand.holdings.units, t, min_hold):
            return cand.holdings.units
    return None


def build_trajectory(
    snapshots: Sequence[MarketSnapshot],
    enc: Encoding,
    params: Sequence[StepCostParams],
    sampler: Sampler,
    rule: HoldingRule,
    pool_limit: int = POOL_LIMIT,
    rank_by: RankBy = "sharpe",
    resample: bool = False,
    n_jobs: int = 1,
    assets: list[str] | None = None,
    full_investment: bool = True,
) -> Trajectory:
    """Build a trajectory by ranked post-selection.

    The QUBO of every step is sampled first, independently of the other
    steps. Then, step by step, the sampled candidates are ranked by
    ``rank_by`` and the first one that respects the holding rule is
    accepted. When none does, the previous holdings are kept, which never
    sells anything, and the fallback counter is increased.

    With ``full_investment``, a pool that holds fully invested candidates
    only has those ranked, and any other pool only has its candidates that
    invest at most the budget ranked.

    Parameters
    ----------
    snapshots : list of MarketSnapshot
        Forecasts used for ranking, one per step.
    enc : Encoding
        Binary encoding of the holdings.
    params : list of StepCostParams
        Cost parameters of each step.
    sampler : Sampler
        Sampler of the step QUBOs; step ``t`` is sampled with stream ``(t,)``.
    rule : HoldingRule
        Minimal holding period.
    pool_limit : int, optional
        Number of ranked candidates examined per step, defaults to 64.
    rank_by : {"sharpe", "return", "volatility"}, optional
        Figure of merit, defaults to ``sharpe``.
    resample : bool, optional
        Draw a second pool with stream ``(t, 1)`` before falling back,
        defaults to ``False``.
    n_jobs : int, optional
        Number of steps sampled in parallel, defaults to 1.
    assets : list of str, optional
        Asset ids stored in the trajectory.
    full_investment : bool, optional
        Never accept holdings above the budget and prefer fully invested
        ones, defaults to ``True``. ``False`` ranks every pool entry.

    Returns
    -------
    Trajectory
        The accepted holdings of every step.
    """
    if not snapshots:
        raise InputRangeError("snapshots", "non-empty lists")
    if len(params) != len(snapshots):
        raise DimensionMismatchError("params", len(snapshots), len(params))
    if pool_limit < 1:
        raise InputRangeError("pool_limit", ">= 1")
    if rank_by not in RANKINGS:
        raise InputValueError("rank_by", RANKINGS, rank_by)
    if assets is not None and len(assets) != enc.n_assets:
        raise DimensionMismatchError("assets", enc.n_assets, len(assets))

    problems = [build_step_qubo(p, enc) for p in params]
    if n_jobs == 1:
        pools: list[SamplePool] = [sampler.sample(pb, (t,)) for t, pb in enumerate(problems)]
    else:
        pools = Parallel(n_jobs=n_jobs)(
            delayed(sampler.sample)(pb, (t,)) for t, pb in enumerate(problems)
        )

    min_hold = rule.min_hold_days
    prev = np.zeros(enc.n_assets, dtype="i8")
    last_purchase = np.full(enc.n_assets, NEVER, dtype="i8")
    rows = []
    fallbacks = 0
    for t, (snap, pool) in enumerate(zip(snapshots, pools)):
        score = portfolio_scorer(snap.mu, snap.sigma, rank_by)
        keep = _budget_filter(pool, enc) if full_investment else None
        ranked = pool_top_by(pool, score, pool_limit, enc, keep)
        chosen = _select(ranked, prev, last_purchase, t, min_hold)
        if chosen is None and resample:
            extra = sampler.sample(problems[t], (t, 1))
            keep = _budget_filter(extra, enc) if full_investment else None
            ranked = pool_top_by(extra, score, pool_limit, enc, keep)
            chosen = _select(ranked, prev, last_purchase, t, min_hold)
        if chosen is None:
            chosen = prev
            fallbacks += 1
        last_purchase = _advance(prev, last_purchase, chosen, t)
        prev = np.asarray(chosen, dtype="i8")
        rows.append(prev)

    return Trajectory(
        list(range(len(rows))),
        np.vstack(rows),
        enc.total_bundles,
        last_purchase,
        fallbacks,
        assets,
    )


def first_violation(traj: Trajectory, rule: HoldingRule) -> tuple[int, int] | None:
    """Locate the earliest sale that breaks the holding rule.

    Purchases and sales are recomputed from the raw holdings, starting
    from an empty portfolio before the first step.

    Returns
    -------
    tuple of int or None
        ``(step_index, asset_index)`` of the first violation, earliest step
        first and lowest asset index among equal steps, or ``None``.
    """
    units = np.asarray(traj.units)
    if units.ndim != 2:
        raise DimensionMismatchError("units", "a 2-D array", units.shape)
    changes = np.diff(units, axis=0, prepend=np.zeros((1, units.shape[1]), dtype=units.dtype))
    found: list[tuple[int, int]] = []
    for n in range(units.shape[1]):
        buys = np.flatnonzero(changes[:, n] > 0)
        sales = np.flatnonzero(changes[:, n] < 0)
        if not sales.size:
            continue
        pos = np.searchsorted(buys, sales) - 1
        last_buy = np.where(pos >= 0, buys[np.maximum(pos, 0)], NEVER)
        early = sales[sales - last_buy < rule.min_hold_days]
        if early.size:
            found.append((int(early[0]), n))
    return min(found) if found else None


def verify_trajectory(traj: Trajectory, rule: HoldingRule) -> bool:
    """Whether no asset of ``traj`` is sold before its holding period ends."""
    return first_violation(traj, rule) is None


def trajectory_metrics(
    traj: Trajectory, snapshots: Sequence[MarketSnapshot], periods_per_year: int = PERIODS_PER_YEAR
) -> TrajectoryMetrics:
    """Realized return, volatility and Sharpe ratio of a trajectory.

    Parameters
    ----------
    traj : Trajectory
        Holdings over ``N_t`` steps.
    snapshots : list of MarketSnapshot
        Returns and covariances of the same steps.
    periods_per_year : int, optional
        Annualization constant, defaults to 252.

    Returns
    -------
    TrajectoryMetrics
        ``total_return`` is ``sum_t mu_t.w_t`` and ``volatility`` is
        ``sqrt(sum_t w_t.sigma_t.w_t)``. The annualized return is scaled by
        ``periods_per_year / N_t`` and the annualized volatility by its
        square root.

    Examples
    --------
    >>> from pyqubofolio.market import MarketSnapshot
    >>> traj = Trajectory([0], np.array([[1]]), 1, np.array([0]))
    >>> snap = MarketSnapshot(0, np.array([0.1]), np.array([[0.04]]))
    >>> m = trajectory_metrics(traj, [snap])
    >>> round(m.total_return, 6), round(m.volatility, 6), round(m.sharpe, 6)
    (0.1, 0.2, 0.5)
    """
    if len(snapshots) != traj.n_steps:
        raise DimensionMismatchError("snapshots", traj.n_steps, len(snapshots))
    if traj.n_steps == 0:
        raise InputRangeError("trajectory length", ">= 1")
    if periods_per_year < 1:
        raise InputRangeError("periods_per_year", ">= 1")
    weights = traj.weights
    total = math.fsum(float(s.mu @ w) for s, w in zip(snapshots, weights))
    variance = math.fsum(float(w @ s.sigma @ w) for s, w in zip(snapshots, weights))
    vol = math.sqrt(max(variance, 0.0))
    sharpe = total / vol if vol > 0 else math.nan
    scale = periods_per_year / traj.n_steps
    return TrajectoryMetrics(total, vol, sharpe, total * scale, vol * math.sqrt(scale), traj.fallback_count)


def _count_table(enc: Encoding) -> FloatArray:
    """``c[n, k]``: number of ways assets ``n..N_a-1`` can hold ``k`` bundles in total."""
    k, m = enc.total_bundles, enc.max_units
    table = np.zeros((enc.n_assets + 1, k + 1))
    table[-1, 0] = 1.0
    for n in range(enc.n_assets - 1, -1, -1):
        for v in range(min(m, k) + 1):
            table[n, v:] += table[n + 1, : k + 1 - v]
    return table


def draw_normalized(rng: np.random.Generator, enc: Encoding, size: int) -> IntArray:
    """Draw fully invested holdings uniformly from the encoding's feasible set.

    The draws follow the distribution of rejection sampling of uniform bit
    vectors on ``sum(w) == 1``, obtained exactly by sampling the assets one
    after the other with probabilities from a table of completion counts.

    Parameters
    ----------
    rng : numpy.random.Generator
        Random generator.
    enc : Encoding
        Binary encoding of the holdings.
    size : int
        Number of draws.

    Returns
    -------
    numpy.ndarray
        Integer units of shape ``(size, n_assets)`` whose rows sum to
        ``total_bundles``. When the encoding admits no fully invested
        holdings, every row is ``-1``.
    """
    table = _count_table(enc)
    k = enc.total_bundles
    if table[0, k] == 0:
        return np.full((size, enc.n_assets), -1, dtype="i8")
    values = np.arange(min(enc.max_units, k) + 1)
    uniforms = rng.random((size, enc.n_assets))
    remaining = np.full(size, k)
    units = np.zeros((size, enc.n_assets), dtype="i8")
    for n in range(enc.n_assets):
        rest = remaining[:, None] - values[None, :]
        ways = np.where(rest >= 0, table[n + 1, np.clip(rest, 0, k)], 0.0)
        cum = np.cumsum(ways, axis=1)
        pick = (uniforms[:, n, None] * cum[:, -1:] >= cum).sum(axis=1)
        last = values.size - 1 - np.argmax(ways[:, ::-1] > 0, axis=1)
        pick = np.minimum(pick, last)
        units[:, n] = values[pick]
        remaining -= values[pick]
    return units


def _baseline_one(
    snapshots: Sequence[MarketSnapshot],
    enc: Encoding,
    min_hold: int,
    seed: int,
    index: int,
    periods_per_year: int,
) -> tuple[Trajectory, TrajectoryMetrics]:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    draws = draw_normalized(rng, enc, len(snapshots))
    prev = np.zeros(enc.n_assets, dtype="i8")
    last_purchase = np.full(enc.n_assets, NEVER, dtype="i8")
    rows = []
    fallbacks = 0
    for t, cand in enumerate(draws):
        if cand[0] < 0 or not _is_legal(prev, last_purchase, cand, t, min_hold):
            cand = prev
            fallbacks += 1
        last_purchase = _advance(prev, last_purchase, cand, t)
        prev = cand
        rows.append(cand)
    traj = Trajectory(
        list(range(len(rows))), np.vstack(rows), enc.total_bundles, last_purchase, fallbacks
    )
    return traj, trajectory_metrics(traj, snapshots, periods_per_year)


def random_baseline(
    snapshots: Sequence[MarketSnapshot],
    enc: Encoding,
    rule: HoldingRule,
    n_trajectories: int,
    seed: int = 0,
    periods_per_year: int = PERIODS_PER_YEAR,
    n_jobs: int = 1,
) -> list[tuple[Trajectory, TrajectoryMetrics]]:
    """Generate random trajectories that respect the holding rule.

    At every step a fully invested portfolio is drawn uniformly from the
    encoding's feasible set; a draw that would sell an asset too early is
    replaced by the previous holdings. Trajectory ``i`` uses its own random
    stream derived from ``(seed, i)``.

    Parameters
    ----------
    snapshots : list of MarketSnapshot
        Forecasts of every step.
    enc : Encoding
        Binary encoding of the holdings.
    rule : HoldingRule
        Minimal holding period.
    n_trajectories : int
        Number of trajectories.
    seed : int, optional
        Random seed, defaults to 0.
    periods_per_year : int, optional
        Annualization constant, defaults to 252.
    n_jobs : int, optional
        Number of parallel workers, defaults to 1.

    Returns
    -------
    list of tuple
        ``(Trajectory, TrajectoryMetrics)`` pairs.
    """
    if n_trajectories < 1:
        raise InputRangeError("n_trajectories", ">= 1")
    if not snapshots:
        raise InputRangeError("snapshots", "non-empty lists")
    if not enc.admits_full_investment:
        warnings.warn(
            "The encoding admits no fully invested portfolio, random trajectories stay empty.",
            UserWarning,
            stacklevel=2,
        )
    args = (snapshots, enc, rule.min_hold_days, seed)
    if n_jobs == 1:
        return [_baseline_one(*args, i, periods_per_year) for i in range(n_trajectories)]
    return Parallel(n_jobs=n_jobs)(
        delayed(_baseline_one)(*args, i, periods_per_year) for i in range(n_trajectories)
    )


def _check_grid(frame: pd.DataFrame) -> None:
    """Reject blank weights and incomplete or duplicated ``date x asset`` grids.

    Line numbers assume the frame was read from a file with a header row.
    """
    weights = pd.to_numeric(frame["weight"], errors="coerce")
    bad = np.flatnonzero(weights.isna().to_numpy())
    if bad.size:
        raise DataParseError(int(bad[0]) + 2, "missing or non-numeric weight")
    dup = np.flatnonzero(frame.duplicated(["date", "asset_id"]).to_numpy())
    if dup.size:
        row = frame.iloc[int(dup[0])]
        raise DataParseError(int(dup[0]) + 2, f"duplicate row for {row['date']} and {row['asset_id']}")
    dates = pd.unique(frame["date"])
    assets = pd.unique(frame["asset_id"])
    if len(frame) != len(dates) * len(assets):
        present = set(zip(frame["date"], frame["asset_id"]))
        date, asset = next((d, a) for d in dates for a in assets if (d, a) not in present)
        raise DataParseError(None, f"no weight for {date} and {asset}")
    if ((weights < 0) | (weights > 1)).any():
        raise InputRangeError("weight", "[0, 1]")


def trajectory_from_frame(frame: pd.DataFrame) -> tuple[Trajectory, list[str]]:
    """Rebuild a trajectory from its long ``date,asset_id,weight`` frame.

    Every date must list a weight in ``[0, 1]`` for every asset. The bundle
    count is the least common multiple of the weight denominators, so the
    integer holdings are recovered exactly.

    Returns
    -------
    tuple
        The trajectory and the date label of every step.
    """
    missing = [c for c in ("date", "asset_id", "weight") if c not in frame.columns]
    if missing:
        raise MissingColumnError(missing)
    if frame.empty:
        raise InputRangeError("trajectory rows", ">= 1")
    frame = frame.astype({"date": str, "asset_id": str}).reset_index(drop=True)
    _check_grid(frame)
    wide = frame.pivot(index="date", columns="asset_id", values="weight")
    wide = wide.reindex(index=pd.unique(frame["date"]), columns=pd.unique(frame["asset_id"]))
    fractions = [Fraction(str(w)).limit_denominator(10**6) for w in wide.to_numpy().ravel()]
    total = math.lcm(*(f.denominator for f in fractions)) if fractions else 1
    units = np.array([int(f * total) for f in fractions], dtype="i8").reshape(wide.shape)

    changes = np.diff(units, axis=0, prepend=np.zeros((1, units.shape[1]), dtype="i8"))
    last_purchase = np.full(units.shape[1], NEVER, dtype="i8")
    for n in range(units.shape[1]):
        buys = np.flatnonzero(changes[:, n] > 0)
        if buys.size:
            last_purchase[n] = buys[-1]
    traj = Trajectory(
        list(range(units.shape[0])), units, total, last_purchase, 0, [str(a) for a in wide.columns]
    )
    return traj, [str(d) for d in wide.index]
