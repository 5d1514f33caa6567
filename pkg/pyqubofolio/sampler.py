"""Low-energy sampling of QUBO problems."""
from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, NamedTuple

import numpy as np
from joblib import Parallel, delayed

from pyqubofolio.exceptions import (
    EmptyPoolError,
    InputRangeError,
    InputTypeError,
    OracleSizeError,
)
from pyqubofolio.qubo import ORACLE_LIMIT, decode, enumerate_states

if TYPE_CHECKING:
    import numpy.typing as npt

    from pyqubofolio.qubo import Encoding, Holdings, QuboProblem

    FloatArray = npt.NDArray[np.float64]
    IntArray = npt.NDArray[np.int64]
    BitArray = npt.NDArray[np.uint8]
    ScoreFunc = Callable[[Holdings], Any]

__all__ = [
    "SamplerConfig",
    "SamplePool",
    "Candidate",
    "Sampler",
    "SimulatedAnnealingSampler",
    "ExhaustiveSampler",
    "sample",
    "pool_top_by",
]

N_READS = 512
SWEEPS = 1000
BETA_INITIAL_SCALE = 0.1
BETA_FINAL_SCALE = 50.0
_BLOCK = 32


@dataclass(frozen=True)
class SamplerConfig:
    """Settings of the simulated annealer.

    Parameters
    ----------
    n_reads : int, optional
        Number of independent restarts, defaults to 512.
    sweeps : int, optional
        Monte-Carlo sweeps per read, defaults to 1000.
    beta_initial, beta_final : float, optional
        Inverse temperature at the first and the last sweep. When omitted,
        ``0.1 / max|q|`` and ``50 / max|q|`` are used.
    seed : int, optional
        Non-negative seed of the per-read random streams, defaults to 0.
    n_jobs : int, optional
        Number of parallel workers, defaults to 1. Results do not depend on it.
    """

    n_reads: int = N_READS
    sweeps: int = SWEEPS
    beta_initial: float | None = None
    beta_final: float | None = None
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.n_reads < 1:
            raise InputRangeError("n_reads", ">= 1")
        if self.sweeps < 1:
            raise InputRangeError("sweeps", ">= 1")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise InputTypeError("seed", "int")
        if not 0 <= self.seed < 2**64:
            raise InputRangeError("seed", "[0, 2**64)")
        if (self.beta_initial is None) != (self.beta_final is None):
            raise InputTypeError("beta_initial and beta_final", "both float or both None")
        if self.beta_initial is not None and self.beta_final is not None:
            if not 0 < self.beta_initial < self.beta_final:
                raise InputRangeError("beta schedule", "0 < beta_initial < beta_final")

    def schedule(self, problem: QuboProblem) -> FloatArray:
        """Geometric inverse-temperature schedule, one value per sweep."""
        if self.beta_initial is not None and self.beta_final is not None:
            b0, b1 = self.beta_initial, self.beta_final
        else:
            scale = float(np.abs(problem.q).max(initial=0.0))
            scale = scale if scale > 0 else 1.0
            b0, b1 = BETA_INITIAL_SCALE / scale, BETA_FINAL_SCALE / scale
        if self.sweeps == 1:
            return np.array([b1])
        return np.geomspace(b0, b1, self.sweeps)


class SamplePool(NamedTuple):
    """Deduplicated samples sorted by energy, ties by bit-vector value."""

    states: BitArray
    energies: FloatArray
    counts: IntArray

    @property
    def n_entries(self) -> int:
        return self.states.shape[0]

    @classmethod
    def from_states(cls, problem: QuboProblem, states: BitArray) -> SamplePool:
        """Build a pool from raw samples, one per row."""
        unique, counts = np.unique(np.asarray(states, dtype="u1"), axis=0, return_counts=True)
        energies = np.atleast_1d(problem.energy(unique))
        order = np.lexsort((*unique[:, ::-1].T, energies))
        return cls(unique[order], energies[order], counts[order].astype("i8"))

    @property
    def min_energy(self) -> float:
        if not self.n_entries:
            raise EmptyPoolError
        return float(self.energies[0])

    def to_text(self) -> str:
        """Dump as ``energy multiplicity bitstring`` lines in ascending energy."""
        lines = (
            f"{float(e)!r} {int(c)} {''.join(map(str, s.tolist()))}"
            for s, e, c in zip(self.states, self.energies, self.counts)
        )
        return "".join(f"{line}\n" for line in lines)


class Candidate(NamedTuple):
    """A decoded pool entry and its ranking score."""

    state: BitArray
    holdings: Holdings
    energy: float
    score: Any


class Sampler(abc.ABC):
    """Contract of QUBO samplers: a problem in, a :class:`SamplePool` out.

    ``stream`` identifies the call, e.g., the trading step, so that repeated
    calls draw from distinct but reproducible random streams.
    """

    @abc.abstractmethod
    def sample(self, problem: QuboProblem, stream: tuple[int, ...] = ()) -> SamplePool:
        """Sample the low-energy states of ``problem``."""


def _anneal(
    q: FloatArray,
    betas: FloatArray,
    seed: int,
    stream: tuple[int, ...],
    reads: range,
) -> BitArray:
    """Single-bit-flip Metropolis annealing of a batch of reads.

    Arrays are bit-major with one column per read. ``gap[i]`` is the energy
    change of setting bit ``i`` to one, so flipping it costs
    ``(1 - 2 x[i]) * gap[i]``; a flip is accepted when that cost is at most
    ``-log(1 - u) / beta``, the Metropolis rule.
    """
    n_bits = q.shape[0]
    rngs = [
        np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(*stream, r))) for r in reads
    ]
    x = np.stack([rng.integers(0, 2, n_bits) for rng in rngs], axis=1).astype("f8")
    diag = np.diag(q)[:, None]
    q2 = 2.0 * q
    gap = diag + q2 @ x - 2.0 * diag * x
    for start in range(0, betas.size, _BLOCK):
        block = betas[start : start + _BLOCK]
        uniforms = np.stack([rng.random((block.size, n_bits)) for rng in rngs], axis=2)
        thresholds = -np.log1p(-uniforms) / block[:, None, None]
        for thr in thresholds:
            for i in range(n_bits):
                flip = 1.0 - 2.0 * x[i]
                accept = flip * gap[i] <= thr[i]
                if accept.any():
                    idx = np.flatnonzero(accept)
                    step = flip[idx]
                    x[i, idx] += step
                    # gap[i] does not depend on x[i]
                    gap[:, idx] += np.outer(q2[:, i], step)
                    gap[i, idx] -= q2[i, i] * step
    return x.T.astype("u1")


class SimulatedAnnealingSampler(Sampler):
    """Classical simulated annealer.

    Each read starts from a random state and performs ``sweeps`` sweeps of
    single-bit-flip Metropolis updates in fixed bit order along a geometric
    inverse-temperature schedule. Read ``r`` draws from its own stream
    derived from ``(seed, *stream, r)``, so the pool does not depend on how
    the reads are split between workers.

    Parameters
    ----------
    config : SamplerConfig, optional
        Annealer settings, defaults to ``SamplerConfig()``.
    """

    def __init__(self, config: SamplerConfig | None = None) -> None:
        self.config = SamplerConfig() if config is None else config

    def __repr__(self) -> str:
        return f"SimulatedAnnealingSampler({self.config!r})"

    def sample(self, problem: QuboProblem, stream: tuple[int, ...] = ()) -> SamplePool:
        if problem.n_bits < 1:
            raise InputRangeError("number of bits", ">= 1")
        cfg = self.config
        q = np.asarray(problem.q, dtype="f8")
        q = 0.5 * (q + q.T)
        betas = cfg.schedule(problem)
        n_chunks = max(1, min(cfg.n_reads, abs(cfg.n_jobs) if cfg.n_jobs > 0 else 8))
        bounds = np.linspace(0, cfg.n_reads, n_chunks + 1).astype(int)
        chunks = [range(s, e) for s, e in zip(bounds[:-1], bounds[1:]) if e > s]
        if cfg.n_jobs == 1:
            states = [_anneal(q, betas, cfg.seed, stream, c) for c in chunks]
        else:
            states = Parallel(n_jobs=cfg.n_jobs)(
                delayed(_anneal)(q, betas, cfg.seed, stream, c) for c in chunks
            )
        return SamplePool.from_states(problem, np.concatenate(states))


class ExhaustiveSampler(Sampler):
    """Sampler returning every bit vector of a small problem once.

    Parameters
    ----------
    max_bits : int, optional
        Largest number of bits enumerated, defaults to 24.
    """

    def __init__(self, max_bits: int = ORACLE_LIMIT) -> None:
        self.max_bits = max_bits

    def sample(self, problem: QuboProblem, stream: tuple[int, ...] = ()) -> SamplePool:
        if problem.n_bits > self.max_bits:
            raise OracleSizeError(problem.n_bits, self.max_bits)
        return SamplePool.from_states(problem, enumerate_states(problem.n_bits))


def sample(problem: QuboProblem, config: SamplerConfig | None = None) -> SamplePool:
    """Sample ``problem`` with the simulated annealer.

    Examples
    --------
    >>> from pyqubofolio.qubo import QuboProblem
    >>> pool = sample(QuboProblem(np.array([[-1.0]]), 0.0), SamplerConfig(n_reads=4, sweeps=10))
    >>> pool.states[0].tolist(), pool.min_energy
    ([1], -1.0)
    """
    return SimulatedAnnealingSampler(config).sample(problem)


def pool_top_by(
    pool: SamplePool,
    score: ScoreFunc,
    limit: int,
    enc: Encoding,
    keep: Callable[[Holdings], bool] | None = None,
) -> list[Candidate]:
    """Decode pool entries and rank them by descending score.

    Parameters
    ----------
    pool : SamplePool
        Deduplicated samples.
    score : callable
        Maps decoded holdings to a sortable score, larger is better.
    limit : int
        Largest number of candidates returned.
    enc : Encoding
        Encoding used to decode the bit vectors.
    keep : callable, optional
        Only holdings for which it returns ``True`` are ranked. Defaults to
        keeping every entry, and the result may be empty otherwise.

    Returns
    -------
    list of Candidate
        Up to ``limit`` candidates in descending score. Equal scores keep the
        pool order, i.e., ascending energy and then bit-vector value.
    """
    if not pool.n_entries:
        raise EmptyPoolError
    if limit < 1:
        raise InputRangeError("limit", ">= 1")
    candidates = []
    for state, energy in zip(pool.states, pool.energies):
        holdings = decode(state, enc)
        if keep is not None and not keep(holdings):
            continue
        candidates.append(Candidate(state, holdings, float(energy), score(holdings)))
    # sorted is stable with reverse=True, so ties keep the pool order
    ranked = sorted(candidates, key=lambda c: c.score, reverse=True)
    return ranked[:limit]
