"""Per-step QUBO formulation of the penalized mean-variance cost.

Holdings are encoded with ``N_q`` bits per asset, ``w_n = sum_q 2**q x[n, q] / K``,
and bits are laid out asset-major, qubit-minor: ``x[n * N_q + q]`` is bit ``q``
of asset ``n``. Bit vectors are ordered as big-endian integers, i.e., ``x[0]``
is the most significant bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from joblib import Parallel, delayed

from pyqubofolio.exceptions import (
    DimensionMismatchError,
    InputRangeError,
    InputValueError,
    OracleSizeError,
)

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]
    IntArray = npt.NDArray[np.int64]
    BitArray = npt.NDArray[np.uint8]

__all__ = [
    "Encoding",
    "StepCostParams",
    "QuboProblem",
    "Holdings",
    "decode",
    "encode",
    "auto_rho",
    "build_step_qubo",
    "step_cost",
    "brute_force_min",
    "enumerate_states",
    "bits_to_int",
]

BIT_LIMIT = 256
ORACLE_LIMIT = 24
_CHUNK_BITS = 16
RHO_FLOOR = 1e-8


@dataclass(frozen=True)
class Encoding:
    """Binary encoding of integer holdings.

    Parameters
    ----------
    n_assets : int
        Number of assets ``N_a``.
    bit_depth : int
        Bits per asset ``N_q``.
    total_bundles : int
        Investment granularity ``K``; holdings are multiples of ``1 / K``.
    bit_limit : int, optional
        Largest total number of bits accepted, defaults to 256.
    """

    n_assets: int
    bit_depth: int
    total_bundles: int
    bit_limit: int = BIT_LIMIT

    def __post_init__(self) -> None:
        if self.n_assets < 1:
            raise InputRangeError("n_assets", ">= 1")
        if self.bit_depth < 1:
            raise InputRangeError("bit_depth", ">= 1")
        if self.total_bundles < 1:
            raise InputRangeError("total_bundles", ">= 1")
        if self.n_bits > self.bit_limit:
            raise InputRangeError("n_assets * bit_depth", f"<= {self.bit_limit}")

    @classmethod
    def from_diversification(cls, n_assets: int, total_bundles: int, cap: float) -> Encoding:
        """Largest bit depth such that no asset can exceed ``cap`` of the budget.

        Examples
        --------
        >>> Encoding.from_diversification(10, 20, 0.4).bit_depth
        3
        """
        if not 0 < cap <= 1:
            raise InputRangeError("cap", "(0, 1]")
        depth = int(math.floor(math.log2(cap * total_bundles + 1) + 1e-12))
        if depth < 1:
            raise InputValueError("cap", [f">= {1 / total_bundles}"], str(cap))
        return cls(n_assets, depth, total_bundles)

    @classmethod
    def full_concentration(cls, n_assets: int, total_bundles: int) -> Encoding:
        """Smallest bit depth that allows the whole budget in a single asset."""
        return cls(n_assets, max(1, (total_bundles).bit_length()), total_bundles)

    @property
    def n_bits(self) -> int:
        return self.n_assets * self.bit_depth

    @property
    def max_units(self) -> int:
        """Largest number of bundles a single asset can hold."""
        return 2**self.bit_depth - 1

    @property
    def max_weight_per_asset(self) -> float:
        return self.max_units / self.total_bundles

    @property
    def admits_full_investment(self) -> bool:
        """Whether some bit vector decodes to holdings summing to one."""
        return self.total_bundles <= self.n_assets * self.max_units

    def unit_matrix(self) -> FloatArray:
        """Matrix ``A`` with ``w = A @ x``, of shape ``(n_assets, n_bits)``."""
        a = np.zeros((self.n_assets, self.n_bits))
        powers = 2.0 ** np.arange(self.bit_depth)
        for n in range(self.n_assets):
            a[n, n * self.bit_depth : (n + 1) * self.bit_depth] = powers
        return a / self.total_bundles


class StepCostParams(NamedTuple):
    """Inputs of the cost at one trading step."""

    mu: FloatArray
    sigma: FloatArray
    gamma: float
    rho: float


class Holdings(NamedTuple):
    """Holdings as integer bundle counts per asset.

    Weights are ``units / total_bundles``. Comparisons between holdings are
    done on the integer units so they are exact.
    """

    units: IntArray
    total_bundles: int

    @property
    def weights(self) -> FloatArray:
        return self.units / self.total_bundles

    @property
    def invested(self) -> int:
        """Total number of bundles held."""
        return int(self.units.sum())

    @classmethod
    def zeros(cls, n_assets: int, total_bundles: int) -> Holdings:
        return cls(np.zeros(n_assets, dtype="i8"), total_bundles)


class QuboProblem(NamedTuple):
    """Quadratic unconstrained binary problem ``E(x) = x.T @ q @ x + offset``."""

    q: FloatArray
    offset: float

    @property
    def n_bits(self) -> int:
        return self.q.shape[0]

    def energy(self, x: BitArray) -> FloatArray | float:
        """Energy of one bit vector or of a batch of bit vectors (one per row)."""
        states = np.asarray(x, dtype="f8")
        if states.shape[-1] != self.n_bits:
            raise DimensionMismatchError("x", self.n_bits, states.shape[-1])
        if states.ndim == 1:
            return float(states @ self.q @ states + self.offset)
        return np.einsum("ri,ij,rj->r", states, self.q, states) + self.offset

    def to_upper(self) -> FloatArray:
        """Equivalent upper-triangular matrix with the same energies."""
        upper = np.triu(2.0 * self.q)
        np.fill_diagonal(upper, np.diag(self.q))
        return upper

    def to_text(self) -> str:
        """Export as ``i j value`` lines (``i <= j``) after a ``# bits= offset=`` header."""
        upper = self.to_upper()
        rows, cols = np.nonzero(upper)
        lines = [f"# bits={self.n_bits} offset={self.offset!r}"]
        lines += [f"{i} {j} {float(upper[i, j])!r}" for i, j in zip(rows, cols)]
        return "\n".join(lines) + "\n"


def bits_to_int(x: BitArray) -> int:
    """Big-endian integer value of a bit vector, ``x[0]`` being the most significant."""
    return int("".join(str(int(b)) for b in np.asarray(x).ravel()) or "0", 2)


def decode(x: BitArray, enc: Encoding) -> Holdings:
    """Decode a bit vector into holdings.

    Examples
    --------
    >>> enc = Encoding(n_assets=1, bit_depth=2, total_bundles=5)
    >>> decode(np.array([1, 1]), enc).weights
    array([0.6])
    """
    bits = np.asarray(x)
    if bits.ndim != 1 or bits.size != enc.n_bits:
        raise DimensionMismatchError("x", enc.n_bits, bits.size)
    powers = 2 ** np.arange(enc.bit_depth, dtype="i8")
    units = bits.reshape(enc.n_assets, enc.bit_depth).astype("i8") @ powers
    return Holdings(units, enc.total_bundles)


def encode(holdings: Holdings, enc: Encoding) -> BitArray:
    """Bit vector of integer holdings, the inverse of :func:`decode`."""
    units = np.asarray(holdings.units, dtype="i8")
    if units.size != enc.n_assets:
        raise DimensionMismatchError("holdings", enc.n_assets, units.size)
    if (units < 0).any() or (units > enc.max_units).any():
        raise InputRangeError("holdings units", f"[0, {enc.max_units}]")
    shifts = np.arange(enc.bit_depth, dtype="i8")
    return ((units[:, None] >> shifts[None, :]) & 1).astype("u1").ravel()


def _check_params(params: StepCostParams, n_assets: int) -> tuple[FloatArray, FloatArray]:
    mu = np.asarray(params.mu, dtype="f8")
    sigma = np.asarray(params.sigma, dtype="f8")
    if mu.shape != (n_assets,):
        raise DimensionMismatchError("mu", (n_assets,), mu.shape)
    if sigma.shape != (n_assets, n_assets):
        raise DimensionMismatchError("sigma", (n_assets, n_assets), sigma.shape)
    if not (np.isfinite(params.gamma) and np.isfinite(params.rho)):
        raise InputRangeError("gamma and rho", "finite values")
    if params.gamma < 0:
        raise InputRangeError("gamma", ">= 0")
    return mu, 0.5 * (sigma + sigma.T)


def auto_rho(mu: FloatArray, sigma: FloatArray, gamma: float, enc: Encoding) -> float:
    """Budget penalty weight large enough to make full investment optimal.

    The weight is the larger of ``2 * (max|mu| + gamma * max_row_sum|sigma|)``
    and 1.1 times a bound above which moving one bundle towards full
    investment always lowers the cost. With such a weight, the minimizer of
    the step cost is fully invested whenever the encoding admits it.
    """
    mu = np.abs(np.asarray(mu, dtype="f8"))
    sigma = np.abs(np.asarray(sigma, dtype="f8"))
    max_mu = float(mu.max(initial=0.0))
    heuristic = 2.0 * (max_mu + gamma * float(sigma.sum(axis=1).max(initial=0.0)))
    k = enc.total_bundles
    max_total = max(enc.n_assets * enc.max_units, k) / k
    step_gain = max_mu + gamma * float(sigma.max(initial=0.0)) * (max_total + 0.5 / k)
    return max(heuristic, 1.1 * k * step_gain, RHO_FLOOR)


def build_step_qubo(params: StepCostParams, enc: Encoding) -> QuboProblem:
    """Build the QUBO of ``-mu.w + gamma/2 w.Sigma.w + rho (sum(w) - 1)**2``.

    Linear terms are folded onto the diagonal since ``x**2 == x`` for bits,
    and the constant ``rho`` of the expanded penalty goes to the offset.

    Parameters
    ----------
    params : StepCostParams
        Forecast returns, covariance, risk aversion and budget penalty.
    enc : Encoding
        Binary encoding of the holdings.

    Returns
    -------
    QuboProblem
        Symmetric ``q`` of size ``n_bits`` and the constant offset.
    """
    mu, sigma = _check_params(params, enc.n_assets)
    a = enc.unit_matrix()
    ones = a.sum(axis=0)
    q = 0.5 * params.gamma * (a.T @ sigma @ a) + params.rho * np.outer(ones, ones)
    q[np.diag_indices_from(q)] += -(a.T @ mu) - 2.0 * params.rho * ones
    q = 0.5 * (q + q.T)
    return QuboProblem(q, float(params.rho))


def step_cost(holdings: Holdings, params: StepCostParams) -> float:
    """Cost of holdings at one step, evaluated directly on the weights."""
    w = holdings.weights
    mu, sigma = _check_params(params, w.size)
    budget = w.sum() - 1.0
    return float(-mu @ w + 0.5 * params.gamma * (w @ sigma @ w) + params.rho * budget**2)


def _int_bits(values: IntArray, n_bits: int) -> BitArray:
    shifts = np.arange(n_bits - 1, -1, -1, dtype="i8")
    return ((values[:, None] >> shifts[None, :]) & 1).astype("u1")


def enumerate_states(n_bits: int, start: int = 0, stop: int | None = None) -> BitArray:
    """All bit vectors with integer values in ``[start, stop)``, in increasing order."""
    stop = 2**n_bits if stop is None else stop
    return _int_bits(np.arange(start, stop, dtype="i8"), n_bits)


def _chunk_min(problem: QuboProblem, start: int, stop: int) -> tuple[int, float]:
    energies = problem.energy(enumerate_states(problem.n_bits, start, stop))
    i = int(np.argmin(energies))
    return start + i, float(energies[i])


def brute_force_min(
    problem: QuboProblem, max_bits: int = ORACLE_LIMIT, n_jobs: int = 1
) -> tuple[BitArray, float]:
    """Exact minimizer by exhaustive enumeration.

    Parameters
    ----------
    problem : QuboProblem
        Problem with at most ``max_bits`` variables.
    max_bits : int, optional
        Largest number of variables enumerated, defaults to 24.
    n_jobs : int, optional
        Number of parallel workers, defaults to 1. The result does not depend on it.

    Returns
    -------
    tuple
        The minimizing bit vector and its energy. Among equal energies the bit
        vector with the lowest integer value wins.

    Examples
    --------
    >>> x, e = brute_force_min(QuboProblem(np.array([[-1.0]]), 0.0))
    >>> x.tolist(), e
    ([1], -1.0)
    """
    n_bits = problem.n_bits
    if n_bits > max_bits:
        raise OracleSizeError(n_bits, max_bits)
    if n_bits < 1:
        raise DimensionMismatchError("q", ">= 1", n_bits)

    total = 2**n_bits
    size = 2 ** min(n_bits, _CHUNK_BITS)
    bounds = [(s, min(s + size, total)) for s in range(0, total, size)]
    if n_jobs == 1 or len(bounds) == 1:
        results = [_chunk_min(problem, s, e) for s, e in bounds]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(_chunk_min)(problem, s, e) for s, e in bounds)

    best_value, best_energy = results[0]
    for value, energy in results[1:]:
        if energy < best_energy:
            best_value, best_energy = value, energy
    state = _int_bits(np.array([best_value], dtype="i8"), n_bits)[0]
    return state, best_energy
