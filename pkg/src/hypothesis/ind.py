"""
KernelTestLab - Joint Independence Test
dHSIC estimators over coordinate blocks, per-block variance ingredients and
block-permutation calibration

For k = 2 the bias-corrected U-statistic is computed exactly in O(n^2). For
k >= 3 the V-statistic is used; its bias cancels in permutation calibration
because every null replicate uses the same statistic.
"""

from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.calibration.resampling import BlockPermute, ResamplePlan
from src.config.config_loader import config
from src.hypothesis.base import KernelTest, PointValues
from src.hypothesis.reports import Calibration, Estimator, IndReport
from src.kernels.kernel_core import (
    BlockLayout,
    DistMatrix,
    GramMatrix,
    SampleLike,
    as_sample,
    block_sqdists,
    gaussian_gram,
    median_heuristic,
)
from src.kernels.ustat import falling_factorial, ustat_moments, zero_diagonal
from src.utils.errors import InvalidInputError, InvalidParameterError, SampleTooSmallError


@dataclass(frozen=True, eq=False)
class BlockGrams:
    """One Gram per coordinate block at a common nu."""
    grams: Tuple[GramMatrix, ...]

    def __post_init__(self):
        grams = tuple(
            g if isinstance(g, GramMatrix) else GramMatrix(np.asarray(g, dtype=float), float('nan'))
            for g in self.grams
        )
        if len(grams) < 2:
            raise InvalidInputError(f"need at least 2 block Grams, got {len(grams)}")
        sizes = {g.n for g in grams}
        if len(sizes) != 1:
            raise InvalidInputError(f"block Grams have different sizes {sorted(sizes)}")
        object.__setattr__(self, 'grams', grams)

    @property
    def k(self) -> int:
        return len(self.grams)

    @property
    def n(self) -> int:
        return self.grams[0].n

    def arrays(self) -> List[np.ndarray]:
        return [g.values for g in self.grams]

    def permuted(self, perms: Sequence[np.ndarray]) -> 'BlockGrams':
        """Block 1 fixed, block j >= 2 conjugated by perms[j - 2]."""
        if len(perms) != self.k - 1:
            raise InvalidInputError(f"need {self.k - 1} permutations, got {len(perms)}")
        return BlockGrams((self.grams[0],) + tuple(g.permuted(p) for g, p in zip(self.grams[1:], perms)))


# ============================================================================
# ESTIMATORS
# ============================================================================

def _hsic2_from_parts(n: int, r1: np.ndarray, r2: np.ndarray, S1: float, S2: float, F: float) -> float:
    cross = float(r1 @ r2)
    t1 = F / falling_factorial(n, 2)
    t2 = (S1 * S2 - 4.0 * cross + 2.0 * F) / falling_factorial(n, 4)
    t3 = (cross - F) / falling_factorial(n, 3)
    return t1 + t2 - 2.0 * t3


def hsic2_gamma2_unbiased(A1: Union[GramMatrix, np.ndarray], A2: Union[GramMatrix, np.ndarray]) -> float:
    """
    Bias-corrected HSIC for two blocks

    Sum of the off-diagonal mean of A1 * A2, the quadruple cross U-statistic,
    minus twice the triple cross U-statistic.

    Args:
        A1, A2: Block Gram matrices (n >= 4)
    """
    At1, At2 = zero_diagonal(A1), zero_diagonal(A2)
    if At1.shape != At2.shape:
        raise InvalidInputError(f"Gram shapes differ: {At1.shape} vs {At2.shape}")
    n = At1.shape[0]
    if n < 4:
        raise SampleTooSmallError(f"unbiased HSIC needs n >= 4, got n={n}")
    r1, r2 = At1.sum(axis=1), At2.sum(axis=1)
    return _hsic2_from_parts(n, r1, r2, r1.sum(), r2.sum(), float(np.sum(At1 * At2)))


def dhsic_gamma2_v(blocks: Union[BlockGrams, Sequence[np.ndarray]]) -> float:
    """
    V-statistic dHSIC for any k >= 2 (diagonals included, nonnegative)

    (1/n^2) sum_ij prod_l A_l + prod_l mean(A_l) - (2/n^(k+1)) sum_i prod_l rowsum_l(i)
    """
    blocks = blocks if isinstance(blocks, BlockGrams) else BlockGrams(tuple(blocks))
    arrays = blocks.arrays()
    return _dhsic_v(arrays, [A.sum(axis=1) / blocks.n for A in arrays], [A.mean() for A in arrays])


def _dhsic_v(arrays: Sequence[np.ndarray], row_means: Sequence[np.ndarray], means: Sequence[float]) -> float:
    joint = arrays[0].copy()
    for A in arrays[1:]:
        joint *= A
    row_product = np.prod(np.vstack(row_means), axis=0)
    return float(joint.mean() + np.prod(means) - 2.0 * row_product.mean())


def _product_except(values: np.ndarray, skip: Sequence[int]) -> float:
    return float(np.prod(np.delete(values, list(skip))))


def general_variance(e1: np.ndarray, e2: np.ndarray, e3: np.ndarray) -> float:
    """
    Division-free variance expansion for k blocks

    Args:
        e1, e2, e3: Per-block pair-squared, triple and quadruple U-statistics

    Returns:
        s_tilde2
    """
    e1, e2, e3 = (np.asarray(e, dtype=float) for e in (e1, e2, e3))
    k = e1.size
    joint = np.prod(e1) - 2.0 * np.prod(e2) + np.prod(e3)

    first_order = (
        sum(e1[j] * _product_except(e2, [j]) for j in range(k))
        - k * np.prod(e2)
        - sum(e2[j] * _product_except(e3, [j]) for j in range(k))
        + k * np.prod(e3)
    )

    centered = e1 - 2.0 * e2 + e3
    gap = e2 - e3
    second_order = sum(centered[j] * _product_except(e3, [j]) for j in range(k))
    second_order += sum(
        gap[j1] * gap[j2] * _product_except(e3, [j1, j2])
        for j1 in range(k) for j2 in range(k) if j1 != j2
    )
    return float(joint - 2.0 * first_order + second_order)


def block_moments(blocks: BlockGrams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-block (e1, e2, e3) = (u_pair_sq, u_triple, u_quad)."""
    moments = [ustat_moments(g) for g in blocks.grams]
    return (
        np.array([mo.u_pair_sq for mo in moments]),
        np.array([mo.u_triple for mo in moments]),
        np.array([mo.u_quad for mo in moments]),
    )


def ind_variance(blocks: Union[BlockGrams, Sequence[np.ndarray]], general_form: Optional[bool] = None) -> Tuple[float, float]:
    """
    Variance estimator of the dHSIC statistic

    Args:
        blocks: Block Grams (n >= 4)
        general_form: Force the general-k expansion (default: only for k >= 3)

    Returns:
        (s_tilde2, s_hat2) with s_hat2 = max(s_tilde2, 1/n^2)
    """
    blocks = blocks if isinstance(blocks, BlockGrams) else BlockGrams(tuple(blocks))
    e1, e2, e3 = block_moments(blocks)
    use_general = blocks.k >= 3 if general_form is None else general_form
    if use_general:
        s_tilde2 = general_variance(e1, e2, e3)
    else:
        s_tilde2 = float(np.prod(e1 - 2.0 * e2 + e3))
    return s_tilde2, max(s_tilde2, 1.0 / blocks.n ** 2)


def resolve_estimator(estimator: Union[None, str, Estimator], k: int) -> Estimator:
    """Unbiased for k = 2, V-statistic for k >= 3 unless requested otherwise."""
    if estimator is None:
        return Estimator.UNBIASED if k == 2 else Estimator.V_STATISTIC
    estimator = Estimator.parse(estimator)
    if estimator is Estimator.UNBIASED and k != 2:
        raise InvalidParameterError(f"the unbiased estimator is only available for k = 2 blocks, got k={k}")
    return estimator


def ind_stat(blocks: Union[BlockGrams, Sequence[np.ndarray]], estimator: Union[None, str, Estimator] = None) -> float:
    """T = (n / sqrt 2) * gamma2_hat / s_hat."""
    blocks = blocks if isinstance(blocks, BlockGrams) else BlockGrams(tuple(blocks))
    estimator = resolve_estimator(estimator, blocks.k)
    if estimator is Estimator.UNBIASED:
        gamma2 = hsic2_gamma2_unbiased(*blocks.grams)
    else:
        gamma2 = dhsic_gamma2_v(blocks)
    _, s_hat2 = ind_variance(blocks)
    return float(blocks.n / np.sqrt(2.0) * gamma2 / np.sqrt(s_hat2))


# ============================================================================
# TEST PROBLEM
# ============================================================================

class IndProblem(KernelTest):
    """
    Joint independence of k coordinate blocks

    Variance ingredients do not depend on the block permutation, so they are
    computed once per nu; replicates only re-index the block Grams.
    """

    name = "ind"
    resample_calibration = Calibration.PERMUTATION

    def __init__(
        self,
        X: SampleLike,
        layout: BlockLayout,
        rescale_by_dim: bool = False,
        estimator: Union[None, str, Estimator] = None,
    ):
        super().__init__(rescale_by_dim)
        self.sample = as_sample(X)
        self.layout = layout
        self.dists = block_sqdists(self.sample, layout, rescale_by_dim)
        self.estimator = resolve_estimator(estimator, layout.k)
        self._per_nu: dict = {}

    @property
    def n(self) -> int:
        return self.sample.n

    @property
    def d(self) -> int:
        return self.sample.d

    @property
    def k(self) -> int:
        return self.layout.k

    def full_distances(self) -> DistMatrix:
        """Block distances share the divisor, so they add up to the full-vector distances."""
        return DistMatrix(np.sum([D.values for D in self.dists], axis=0), self.rescale_by_dim)

    def median_nu(self) -> float:
        return median_heuristic(self.full_distances())

    def block_grams(self, nu: float) -> BlockGrams:
        return BlockGrams(tuple(gaussian_gram(D, nu) for D in self.dists))

    def resample_plan(self, B: int, seed: int) -> ResamplePlan:
        return ResamplePlan(BlockPermute(self.n, self.k), B, seed, stream=1)

    def _nu_state(self, nu: float) -> dict:
        if nu not in self._per_nu:
            blocks = self.block_grams(nu)
            s_tilde2, s_hat2 = ind_variance(blocks)
            state = {'s_tilde2': s_tilde2, 's_hat2': s_hat2}
            if self.estimator is Estimator.UNBIASED:
                zeroed = [zero_diagonal(g) for g in blocks.grams]
                rows = [A.sum(axis=1) for A in zeroed]
                state.update(zeroed=zeroed, rows=rows, totals=[r.sum() for r in rows])
            else:
                arrays = blocks.arrays()
                state.update(
                    arrays=arrays,
                    row_means=[A.mean(axis=1) for A in arrays],
                    means=[float(A.mean()) for A in arrays],
                )
            self._per_nu[nu] = state
        return self._per_nu[nu]

    def _draw_state(self, draw: Any) -> Optional[List[np.ndarray]]:
        return None if draw is None else [np.asarray(p) for p in draw]

    def _evaluate_at(self, nu: float, perms: Optional[List[np.ndarray]]) -> PointValues:
        state = self._nu_state(nu)
        if self.estimator is Estimator.UNBIASED:
            At1, At2 = state['zeroed']
            r1, r2 = state['rows']
            if perms is not None:
                p = perms[0]
                At2, r2 = At2[np.ix_(p, p)], r2[p]
            gamma2 = _hsic2_from_parts(self.n, r1, r2, state['totals'][0], state['totals'][1], float(np.sum(At1 * At2)))
        else:
            arrays, row_means = list(state['arrays']), list(state['row_means'])
            if perms is not None:
                for j, p in enumerate(perms, start=1):
                    arrays[j] = arrays[j][np.ix_(p, p)]
                    row_means[j] = row_means[j][p]
            gamma2 = _dhsic_v(arrays, row_means, state['means'])

        s_hat2 = state['s_hat2']
        t_stat = self.n / np.sqrt(2.0) * gamma2 / np.sqrt(s_hat2)
        return gamma2, state['s_tilde2'], s_hat2, t_stat

    def get_parameters(self):
        params = super().get_parameters()
        params.update(widths=list(self.layout.widths), estimator=self.estimator.value)
        return params


def ind_test(
    X: SampleLike,
    layout: BlockLayout,
    nu: float,
    alpha: Optional[float] = None,
    B: Optional[int] = None,
    seed: Optional[int] = None,
    estimator: Union[None, str, Estimator] = None,
    calibration: Union[str, Calibration] = Calibration.PERMUTATION,
    rescale_by_dim: bool = False,
    n_jobs: Optional[int] = None,
    nu_source: str = "fixed",
) -> IndReport:
    """
    Joint-independence test at a fixed scaling value

    Block 1 rows stay in place; each block j >= 2 gets an independent row
    permutation per replicate.

    Returns:
        IndReport
    """
    alpha = config.alpha if alpha is None else alpha
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    calibration = Calibration.parse(calibration)
    B = config.permutations if B is None else B
    seed = config.seed if seed is None else seed

    problem = IndProblem(X, layout, rescale_by_dim, estimator)
    observed, p_value = problem.calibrate_fixed(nu, calibration, B, seed, n_jobs)
    resampled = calibration is not Calibration.ASYMPTOTIC_NORMAL

    report = IndReport(
        test=problem.name,
        gamma2_hat=float(observed.gamma2[0]),
        s_tilde2=float(observed.s_tilde2[0]),
        s_hat2=float(observed.s_hat2[0]),
        t_stat=float(observed.t_stat[0]),
        p_value=p_value,
        nu=float(nu),
        calibration=calibration,
        alpha=alpha,
        n=problem.n,
        B=B if resampled else None,
        seed=seed if resampled else None,
        rescaled_by_dim=rescale_by_dim,
        nu_source=nu_source,
        estimator=problem.estimator,
        widths=layout.widths,
        extras={**problem.get_parameters(), 'k': problem.k},
    )
    logger.debug(f"IND: T={report.t_stat:.4f}, p={report.p_value:.4f} at nu={nu:.4g} ({problem.estimator.value})")
    return report
