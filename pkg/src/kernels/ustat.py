"""
KernelTestLab - U-Statistic Building Blocks
Distinct-index kernel sums reduced to O(n^2) row-sum identities

Notation: A~ is the Gram with zeroed diagonal, r_i its row sums, S = sum r_i,
q_i = sum_j A~[i, j]^2 and F = sum q_i. Each m-index sum is divided by the
falling factorial n (n-1) ... (n-m+1).
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from src.kernels.kernel_core import GramMatrix
from src.utils.errors import InvalidInputError, SampleTooSmallError

MatrixLike = Union[GramMatrix, np.ndarray]


@dataclass(frozen=True)
class UStatMoments:
    """Pair, squared-pair, triple and quadruple U-statistics of one Gram."""
    u_pair: float
    u_pair_sq: float
    u_triple: float
    u_quad: float

    @property
    def centered_second_moment(self) -> float:
        """u_pair_sq - 2 u_triple + u_quad, the estimate of E Gbar^2."""
        return self.u_pair_sq - 2.0 * self.u_triple + self.u_quad


def falling_factorial(n: int, m: int) -> float:
    """n! / (n-m)! evaluated in floating point."""
    return float(np.prod(np.arange(n, n - m, -1, dtype=float)))


def _values(A: MatrixLike) -> np.ndarray:
    values = A.values if isinstance(A, GramMatrix) else np.asarray(A, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InvalidInputError(f"Gram must be square, got shape {values.shape}")
    return values


def _require(n: int, m: int) -> None:
    if n < m:
        raise SampleTooSmallError(f"{m}-index U-statistic needs n >= {m}, got n={n}")


def zero_diagonal(A: MatrixLike) -> np.ndarray:
    """Copy of the Gram with its diagonal set to 0."""
    At = np.array(_values(A), dtype=float, copy=True)
    np.fill_diagonal(At, 0.0)
    return At


def u_pair(A: MatrixLike) -> float:
    """Mean of the off-diagonal entries."""
    At = zero_diagonal(A)
    n = At.shape[0]
    _require(n, 2)
    return float(At.sum() / falling_factorial(n, 2))


def ustat_moments(A: MatrixLike) -> UStatMoments:
    """
    All four single-matrix U-statistics in O(n^2)

    Args:
        A: Gram matrix (n >= 4)

    Returns:
        UStatMoments
    """
    At = zero_diagonal(A)
    n = At.shape[0]
    _require(n, 4)

    r = At.sum(axis=1)
    sq = At * At
    q = sq.sum(axis=1)
    S = r.sum()
    F = q.sum()
    triple_sum = float(np.sum(r * r - q))
    quad_sum = S * S - 2.0 * F - 4.0 * triple_sum

    return UStatMoments(
        u_pair=float(S / falling_factorial(n, 2)),
        u_pair_sq=float(F / falling_factorial(n, 2)),
        u_triple=triple_sum / falling_factorial(n, 3),
        u_quad=float(quad_sum / falling_factorial(n, 4)),
    )


def _cross_parts(A: MatrixLike, B: MatrixLike):
    At, Bt = zero_diagonal(A), zero_diagonal(B)
    if At.shape != Bt.shape:
        raise InvalidInputError(f"Gram shapes differ: {At.shape} vs {Bt.shape}")
    rA, rB = At.sum(axis=1), Bt.sum(axis=1)
    F_AB = float(np.sum(At * Bt))
    return At.shape[0], rA, rB, F_AB


def ustat_triple_cross(A: MatrixLike, B: MatrixLike) -> float:
    """
    Mean over distinct (i, j1, j2) of A[i, j1] * B[i, j2]

    Args:
        A, B: Symmetric matrices of equal shape (n >= 3)
    """
    n, rA, rB, F_AB = _cross_parts(A, B)
    _require(n, 3)
    return float((rA @ rB - F_AB) / falling_factorial(n, 3))


def ustat_quad_cross(A: MatrixLike, B: MatrixLike) -> float:
    """
    Mean over distinct (i1, i2, j1, j2) of A[i1, j1] * B[i2, j2]

    Args:
        A, B: Symmetric matrices of equal shape (n >= 4)
    """
    n, rA, rB, F_AB = _cross_parts(A, B)
    _require(n, 4)
    total = rA.sum() * rB.sum() - 4.0 * (rA @ rB) + 2.0 * F_AB
    return float(total / falling_factorial(n, 4))
