"""
KernelTestLab - Kernel Core
Pairwise distances, Gaussian Gram matrices, median heuristic and scaling grids

All objects here are immutable after construction and safe to share across
joblib workers.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist, pdist, squareform

from src.utils.errors import (
    DegenerateSampleError,
    InvalidInputError,
    InvalidLayoutError,
    InvalidParameterError,
    SampleTooSmallError,
)


@dataclass(frozen=True)
class SampleMatrix:
    """n observations (rows) of dimension d."""
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, np.newaxis]
        if data.ndim != 2:
            raise InvalidInputError(f"sample must be a 2-D array, got shape {data.shape}")
        if data.shape[0] < 2:
            raise SampleTooSmallError(f"sample needs at least 2 rows, got {data.shape[0]}")
        if data.shape[1] < 1:
            raise InvalidInputError("sample needs at least one column")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("sample contains non-finite entries")
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def take(self, rows: np.ndarray) -> 'SampleMatrix':
        """Row subset (used by resampling and subsampling)."""
        return SampleMatrix(self.data[rows])


SampleLike = Union[SampleMatrix, np.ndarray, Sequence[Sequence[float]]]


def as_sample(X: SampleLike) -> SampleMatrix:
    """Coerce arrays and nested lists to a validated SampleMatrix."""
    if isinstance(X, SampleMatrix):
        return X
    return SampleMatrix(np.asarray(X, dtype=float))


@dataclass(frozen=True)
class BlockLayout:
    """Column widths d_1..d_k of the coordinate blocks."""
    widths: Tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2:
            raise InvalidLayoutError(f"need at least 2 blocks, got {len(widths)}")
        if any(w < 1 for w in widths):
            raise InvalidLayoutError(f"block widths must be positive, got {widths}")
        object.__setattr__(self, 'widths', widths)

    @classmethod
    def parse(cls, text: str) -> 'BlockLayout':
        """Parse a comma separated width list such as '1,1,3'."""
        try:
            widths = tuple(int(part) for part in text.split(',') if part.strip())
        except ValueError as exc:
            raise InvalidLayoutError(f"cannot parse block widths '{text}'") from exc
        return cls(widths)

    @classmethod
    def unit(cls, d: int) -> 'BlockLayout':
        """One block per coordinate."""
        return cls(tuple([1] * d))

    @property
    def k(self) -> int:
        return len(self.widths)

    @property
    def d(self) -> int:
        return sum(self.widths)

    def slices(self) -> List[slice]:
        bounds = np.concatenate([[0], np.cumsum(self.widths)])
        return [slice(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]

    def check(self, d: int) -> None:
        if self.d != d:
            raise InvalidLayoutError(f"block widths {self.widths} sum to {self.d}, sample has d={d}")


@dataclass(frozen=True)
class DistMatrix:
    """Symmetric n x n matrix of squared distances with zero diagonal."""
    values: np.ndarray
    rescaled_by_dim: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def permuted(self, perm: np.ndarray) -> 'DistMatrix':
        return DistMatrix(self.values[np.ix_(perm, perm)], self.rescaled_by_dim)


@dataclass(frozen=True)
class GramMatrix:
    """Gaussian kernel evaluations exp(-nu * D) at one scaling value."""
    values: np.ndarray
    nu: float
    rescaled_by_dim: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def permuted(self, perm: np.ndarray) -> 'GramMatrix':
        """Conjugate by a row/column permutation without re-evaluating the kernel."""
        return GramMatrix(self.values[np.ix_(perm, perm)], self.nu, self.rescaled_by_dim)

    def squared(self) -> 'GramMatrix':
        """Gram at 2 nu, which is the elementwise square."""
        return GramMatrix(self.values ** 2, 2.0 * self.nu, self.rescaled_by_dim)


@dataclass(frozen=True)
class ScalingGrid:
    """Strictly increasing scaling values, by default inside [1, n^(2/d)]."""
    values: Tuple[float, ...]
    lo: float = 1.0
    hi: float = field(default=1.0)

    def __post_init__(self):
        if len(self.values) == 0:
            raise InvalidParameterError("scaling grid is empty")
        values = tuple(float(v) for v in self.values)
        if any(b <= a for a, b in zip(values[:-1], values[1:])):
            raise InvalidParameterError("scaling grid must be strictly increasing")
        if any(v <= 0 for v in values):
            raise InvalidParameterError("scaling values must be positive")
        object.__setattr__(self, 'values', values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> 'ScalingGrid':
        values = sorted(set(float(v) for v in values))
        return cls(tuple(values), lo=values[0], hi=values[-1])

    def refined(self, extra: Sequence[float]) -> 'ScalingGrid':
        """Grid with additional points merged in."""
        merged = sorted(set(self.values) | set(float(v) for v in extra))
        return ScalingGrid(tuple(merged), lo=min(self.lo, merged[0]), hi=max(self.hi, merged[-1]))


# ============================================================================
# DISTANCES AND GRAMS
# ============================================================================

def pairwise_sqdist(X: SampleLike, rescale_by_dim: bool = False) -> DistMatrix:
    """
    Squared Euclidean distances between all rows

    Args:
        X: Sample (n x d)
        rescale_by_dim: Divide every squared distance by d

    Returns:
        DistMatrix with zero diagonal
    """
    sample = as_sample(X)
    D = squareform(pdist(sample.data, metric='sqeuclidean'))
    if rescale_by_dim:
        D = D / sample.d
    return DistMatrix(D, rescale_by_dim)


def _as_dist_values(D: Union[DistMatrix, np.ndarray]) -> Tuple[np.ndarray, bool]:
    if isinstance(D, DistMatrix):
        return D.values, D.rescaled_by_dim
    values = np.asarray(D, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InvalidInputError(f"distance matrix must be square, got shape {values.shape}")
    return values, False


def gaussian_gram(D: Union[DistMatrix, np.ndarray], nu: float) -> GramMatrix:
    """
    Gaussian kernel exp(-nu * D) with unit diagonal

    Args:
        D: Squared distances
        nu: Scaling parameter (> 0)

    Returns:
        GramMatrix
    """
    if not np.isfinite(nu) or nu <= 0:
        raise InvalidParameterError(f"scaling parameter must be positive, got {nu}")
    values, rescaled = _as_dist_values(D)
    G = np.exp(-nu * values)
    np.fill_diagonal(G, 1.0)
    return GramMatrix(G, float(nu), rescaled)


def cross_gram(X: SampleLike, Y: SampleLike, nu: float, rescale_by_dim: bool = False) -> np.ndarray:
    """Rectangular kernel matrix between two samples of equal dimension."""
    sx, sy = as_sample(X), as_sample(Y)
    if sx.d != sy.d:
        raise InvalidInputError(f"dimension mismatch: {sx.d} vs {sy.d}")
    D = cdist(sx.data, sy.data, metric='sqeuclidean')
    if rescale_by_dim:
        D = D / sx.d
    return np.exp(-nu * D)


def median_heuristic(D: Union[DistMatrix, np.ndarray]) -> float:
    """
    Inverse median of the strictly-upper-triangle squared distances

    Args:
        D: Squared distances (pooled sample for HOM, full vectors for IND)

    Returns:
        nu_med = 1 / median{D[i, j] : i < j}
    """
    values, _ = _as_dist_values(D)
    upper = values[np.triu_indices(values.shape[0], k=1)]
    positive = upper[upper > 0]
    if positive.size == 0:
        raise DegenerateSampleError("all pairwise distances are zero; median heuristic undefined")
    med = float(np.median(upper))
    if med <= 0:
        # more than half the pairs coincide
        med = float(np.median(positive))
        logger.warning(f"median squared distance is 0, using median of positive distances ({med:.4g})")
    return 1.0 / med


def block_sqdists(X: SampleLike, layout: BlockLayout, rescale_by_dim: bool = False) -> List[DistMatrix]:
    """
    Squared distances restricted to each coordinate block

    With rescaling every block divides by the full dimension d, so the sum of
    block distances equals the full-vector distance.
    """
    sample = as_sample(X)
    layout.check(sample.d)
    divisor = float(sample.d) if rescale_by_dim else 1.0
    dists = []
    for cols in layout.slices():
        D = squareform(pdist(sample.data[:, cols], metric='sqeuclidean')) / divisor
        dists.append(DistMatrix(D, rescale_by_dim))
    return dists


def block_grams(X: SampleLike, layout: BlockLayout, nu: float, rescale_by_dim: bool = False) -> List[GramMatrix]:
    """
    One Gram matrix per coordinate block at a common nu

    Args:
        X: Sample (n x d)
        layout: Block widths summing to d
        nu: Scaling parameter
        rescale_by_dim: Divide squared distances by the full d

    Returns:
        List of k GramMatrix objects whose Hadamard product is the full Gram
    """
    return [gaussian_gram(D, nu) for D in block_sqdists(X, layout, rescale_by_dim)]


# ============================================================================
# SCALING PARAMETERS
# ============================================================================

def scaling_grid(n: int, d: int, points: int = 20, min_upper: Optional[float] = None) -> ScalingGrid:
    """
    Log-uniform grid over [1, n^(2/d)]

    Args:
        n: Sample size
        d: Dimension
        points: Number of grid points (a single point returns the upper end)
        min_upper: Floor on the upper end (dimension-rescaled problems pass
            config.rescaled_grid_upper)

    Returns:
        ScalingGrid
    """
    if points < 1:
        raise InvalidParameterError(f"grid needs at least one point, got {points}")
    if n < 2 or d < 1:
        raise InvalidParameterError(f"invalid grid size parameters n={n}, d={d}")
    if min_upper is not None and min_upper < 1.0:
        raise InvalidParameterError(f"grid upper end must be at least 1, got {min_upper}")
    hi = float(n) ** (2.0 / d)
    if min_upper is not None:
        hi = max(hi, float(min_upper))
    if points == 1:
        return ScalingGrid((hi,), lo=1.0, hi=hi)
    values = np.geomspace(1.0, hi, points)
    values[0], values[-1] = 1.0, hi
    return ScalingGrid(tuple(values), lo=1.0, hi=hi)


def parse_grid(text: str) -> ScalingGrid:
    """Parse 'lo:hi:points' into a log-spaced grid."""
    try:
        lo_text, hi_text, points_text = text.split(':')
        lo, hi, points = float(lo_text), float(hi_text), int(points_text)
    except ValueError as exc:
        raise InvalidParameterError(f"grid must look like lo:hi:points, got '{text}'") from exc
    if lo <= 0 or hi < lo or points < 1:
        raise InvalidParameterError(f"invalid grid bounds '{text}'")
    if points == 1 or hi == lo:
        return ScalingGrid((hi,), lo=lo, hi=hi)
    values = np.geomspace(lo, hi, points)
    return ScalingGrid(tuple(values), lo=lo, hi=hi)


def recommended_nu(n: int, d: int, s: float = 2.0) -> float:
    """Rate-optimal scaling n^(4/(d+4s)) for smoothness s."""
    if s <= 0:
        raise InvalidParameterError(f"smoothness must be positive, got {s}")
    return float(n) ** (4.0 / (d + 4.0 * s))
