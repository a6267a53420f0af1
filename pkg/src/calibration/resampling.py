"""
KernelTestLab - Resampling Engine
Pooled-label shuffles, per-block permutations, parametric null draws,
p-values and empirical quantiles

Replicate b draws from a Philox generator keyed by (master seed, stream, b),
so every replicate is a pure function of its index and the output does not
depend on the joblib worker count or evaluation order.
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Iterator, List, Optional, Protocol, Sequence, Union

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from src.config.config_loader import config
from src.utils.errors import (
    CalibrationUnavailableError,
    InvalidInputError,
    InvalidParameterError,
)


class SamplableReference(Protocol):
    """Anything that can produce fresh null samples."""

    def can_sample(self, n: int) -> bool: ...

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray: ...


@dataclass(frozen=True)
class PooledShuffle:
    """Shuffle the N = n + m pooled labels; the first n become the X sample."""
    n: int
    m: int

    @property
    def N(self) -> int:
        return self.n + self.m


@dataclass(frozen=True)
class BlockPermute:
    """Keep block 1 rows fixed and permute each of blocks 2..k independently."""
    n: int
    k: int


@dataclass(frozen=True)
class ParametricDraw:
    """Fresh n-samples from the null reference model."""
    reference: Any
    n: int


ResampleScheme = Union[PooledShuffle, BlockPermute, ParametricDraw]


@dataclass(frozen=True)
class ResamplePlan:
    """Scheme plus replicate count B and 64-bit master seed."""
    scheme: ResampleScheme
    B: int
    seed: int
    stream: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise InvalidParameterError(f"need at least one replicate, got B={self.B}")
        scheme = self.scheme
        if isinstance(scheme, PooledShuffle) and (scheme.n < 1 or scheme.m < 1):
            raise InvalidParameterError(f"invalid pooled sizes n={scheme.n}, m={scheme.m}")
        if isinstance(scheme, BlockPermute) and (scheme.n < 1 or scheme.k < 2):
            raise InvalidParameterError(f"invalid block permutation n={scheme.n}, k={scheme.k}")
        if isinstance(scheme, ParametricDraw):
            if scheme.n < 1:
                raise InvalidParameterError(f"invalid draw size n={scheme.n}")
            can_sample = getattr(scheme.reference, 'can_sample', None)
            if can_sample is None or not can_sample(scheme.n):
                raise CalibrationUnavailableError(
                    f"reference {scheme.reference!r} cannot produce null samples of size {scheme.n}"
                )


# ============================================================================
# RANDOMNESS
# ============================================================================

def replicate_rng(seed: int, replicate: int, stream: int = 0) -> np.random.Generator:
    """
    Counter-based generator for one replicate

    Args:
        seed: Master seed
        replicate: Replicate index b
        stream: Independent stream id (e.g. data generation vs calibration)
    """
    sequence = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream), int(replicate)))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """Child master seed for a nested run (e.g. the calibration of power-study replicate r)."""
    sequence = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def draw_replicate(plan: ResamplePlan, b: int) -> Any:
    """
    Randomness of replicate b

    Returns:
        PooledShuffle: permutation of range(N)
        BlockPermute: list of k-1 permutations of range(n)
        ParametricDraw: fresh (n x d) sample from the reference
    """
    rng = replicate_rng(plan.seed, b, plan.stream)
    scheme = plan.scheme
    if isinstance(scheme, PooledShuffle):
        return rng.permutation(scheme.N)
    if isinstance(scheme, BlockPermute):
        return [rng.permutation(scheme.n) for _ in range(scheme.k - 1)]
    if isinstance(scheme, ParametricDraw):
        return scheme.reference.sample(scheme.n, rng)
    raise InvalidParameterError(f"unknown resample scheme {scheme!r}")


def generate_permutations(plan: ResamplePlan) -> Iterator[Any]:
    """Stream of replicate draws b = 0..B-1."""
    for b in range(plan.B):
        yield draw_replicate(plan, b)


def _evaluate(plan: ResamplePlan, fn: Callable[[Any], Any], indices: Sequence[int]) -> List[Any]:
    return [fn(draw_replicate(plan, b)) for b in indices]


def run_replicates(plan: ResamplePlan, fn: Callable[[Any], Any], n_jobs: Optional[int] = None) -> List[Any]:
    """
    Evaluate fn on every replicate draw, in replicate order

    Args:
        plan: Resample plan
        fn: Statistic of one draw
        n_jobs: joblib workers (defaults to config.parallel_jobs)

    Returns:
        List of B results ordered by replicate index
    """
    n_jobs = config.parallel_jobs if n_jobs is None else n_jobs
    indices = list(range(plan.B))
    if n_jobs == 1 or plan.B == 1:
        return _evaluate(plan, fn, indices)

    n_chunks = min(plan.B, 4 * (n_jobs if n_jobs > 0 else 8))
    chunks = [chunk.tolist() for chunk in np.array_split(np.arange(plan.B), n_chunks) if chunk.size]
    logger.debug(f"Fanning {plan.B} replicates over {len(chunks)} chunks (n_jobs={n_jobs})")
    parts = Parallel(n_jobs=n_jobs)(delayed(_evaluate)(plan, fn, chunk) for chunk in chunks)
    return [result for part in parts for result in part]


# ============================================================================
# P-VALUES AND QUANTILES
# ============================================================================

def _finite_array(values: Sequence[float], what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size < 1:
        raise InvalidParameterError(f"{what}: need at least one null statistic")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what}: null statistics contain non-finite values")
    return arr


def resample_pvalue(observed: float, null_stats: Sequence[float]) -> float:
    """
    Add-one resampling p-value (1 + #{null >= observed}) / (B + 1)

    Null statistics within 1e-12 (relative) of the observed value count as ties.
    """
    if not np.isfinite(observed):
        raise InvalidInputError(f"observed statistic is not finite: {observed}")
    null = _finite_array(null_stats, 'resample_pvalue')
    tol = 1e-12 * max(1.0, abs(observed))
    exceed = int(np.count_nonzero(null >= observed - tol))
    return (1.0 + exceed) / (null.size + 1.0)


def empirical_quantile(null_stats: Sequence[float], alpha: float) -> float:
    """
    Order-statistic estimate of the upper alpha critical value

    Returns the ceil((1 - alpha)(B + 1))-th smallest null statistic, clipped to [1, B].
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    null = np.sort(_finite_array(null_stats, 'empirical_quantile'))
    rank = math.ceil((1.0 - alpha) * (null.size + 1) - 1e-9)
    rank = min(max(rank, 1), null.size)
    return float(null[rank - 1])
