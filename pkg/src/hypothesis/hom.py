"""
KernelTestLab - Homogeneity Test
Two-sample MMD estimator, pooled variance estimator, studentized statistic,
permutation calibration
"""

from dataclasses import dataclass
from typing import Any, Optional, Tuple, Union

import numpy as np
from loguru import logger

from src.calibration.resampling import PooledShuffle, ResamplePlan
from src.config.config_loader import config
from src.hypothesis.base import KernelTest, PointValues
from src.hypothesis.reports import Calibration, HomReport
from src.kernels.kernel_core import (
    SampleLike,
    SampleMatrix,
    as_sample,
    cross_gram,
    gaussian_gram,
    median_heuristic,
    pairwise_sqdist,
)
from src.kernels.ustat import ustat_moments
from src.utils.errors import InvalidInputError, InvalidParameterError


@dataclass(frozen=True, eq=False)
class TwoSample:
    """Samples X (n x d) and Y (m x d) of a common dimension."""
    X: SampleMatrix
    Y: SampleMatrix

    def __post_init__(self):
        X, Y = as_sample(self.X), as_sample(self.Y)
        if X.d != Y.d:
            raise InvalidInputError(f"dimension mismatch: X has d={X.d}, Y has d={Y.d}")
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'Y', Y)

    @property
    def n(self) -> int:
        return self.X.n

    @property
    def m(self) -> int:
        return self.Y.n

    @property
    def d(self) -> int:
        return self.X.d

    @property
    def ratio(self) -> float:
        return self.m / self.n

    def pooled(self) -> SampleMatrix:
        return SampleMatrix(np.vstack([self.X.data, self.Y.data]))


def _off_mean(G: np.ndarray) -> float:
    n = G.shape[0]
    return float((G.sum() - np.trace(G)) / (n * (n - 1.0)))


def hom_gamma2(X: SampleLike, Y: SampleLike, nu: float, rescale_by_dim: bool = False) -> float:
    """
    Bias-corrected squared MMD between the samples

    Off-diagonal mean of Gram(X) + off-diagonal mean of Gram(Y) - 2 * mean of Gram(X, Y)
    """
    pair = TwoSample(X, Y)
    Gxx = gaussian_gram(pairwise_sqdist(pair.X, rescale_by_dim), nu).values
    Gyy = gaussian_gram(pairwise_sqdist(pair.Y, rescale_by_dim), nu).values
    Gxy = cross_gram(pair.X, pair.Y, nu, rescale_by_dim)
    return _off_mean(Gxx) + _off_mean(Gyy) - 2.0 * float(Gxy.mean())


def hom_variance(
    Z: SampleLike,
    nu: float,
    rescale_by_dim: bool = False,
    floor_n: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Variance estimator on the pooled sample Z = (X, Y)

    Args:
        Z: Pooled sample (N >= 4)
        nu: Scaling parameter
        rescale_by_dim: Divide squared distances by d
        floor_n: Size entering the 1/n^2 floor (hom_stat passes min(n, m); defaults to N)

    Returns:
        (s_tilde2, s_hat2)
    """
    pooled = as_sample(Z)
    moments = ustat_moments(gaussian_gram(pairwise_sqdist(pooled, rescale_by_dim), nu))
    s_tilde2 = moments.centered_second_moment
    floor_n = pooled.n if floor_n is None else floor_n
    return s_tilde2, max(s_tilde2, 1.0 / floor_n ** 2)


def _hom_scale(n: int, m: int) -> float:
    return n * m / (np.sqrt(2.0) * (n + m))


def hom_stat(X: SampleLike, Y: SampleLike, nu: float, rescale_by_dim: bool = False) -> float:
    """T = n m / (sqrt 2 (n + m)) * gamma2_hat / s_hat."""
    pair = TwoSample(X, Y)
    gamma2 = hom_gamma2(pair.X, pair.Y, nu, rescale_by_dim)
    _, s_hat2 = hom_variance(pair.pooled(), nu, rescale_by_dim, floor_n=min(pair.n, pair.m))
    return float(_hom_scale(pair.n, pair.m) * gamma2 / np.sqrt(s_hat2))


class HomProblem(KernelTest):
    """
    Two-sample problem on the pooled Gram

    The pooled variance estimate does not depend on the labels, so it is
    computed once per nu; a relabeling only changes the three block sums,
    which come from one matrix-vector product with the label indicator.
    """

    name = "hom"
    resample_calibration = Calibration.PERMUTATION

    def __init__(self, X: SampleLike, Y: SampleLike, rescale_by_dim: bool = False):
        super().__init__(rescale_by_dim)
        self.pair = TwoSample(X, Y)
        self.D = pairwise_sqdist(self.pair.pooled(), rescale_by_dim)
        self._per_nu: dict = {}

    @property
    def n(self) -> int:
        return self.pair.n

    @property
    def m(self) -> int:
        return self.pair.m

    @property
    def d(self) -> int:
        return self.pair.d

    def median_nu(self) -> float:
        return median_heuristic(self.D)

    def resample_plan(self, B: int, seed: int) -> ResamplePlan:
        return ResamplePlan(PooledShuffle(self.n, self.m), B, seed, stream=1)

    def _nu_state(self, nu: float):
        if nu not in self._per_nu:
            gram = gaussian_gram(self.D, nu)
            s_tilde2 = ustat_moments(gram).centered_second_moment
            s_hat2 = max(s_tilde2, 1.0 / min(self.n, self.m) ** 2)
            self._per_nu[nu] = (gram.values, gram.values.sum(axis=1), s_tilde2, s_hat2)
        return self._per_nu[nu]

    def _draw_state(self, draw: Any) -> np.ndarray:
        u = np.zeros(self.n + self.m)
        if draw is None:
            u[:self.n] = 1.0
        else:
            u[np.asarray(draw)[:self.n]] = 1.0
        return u

    def _block_sums(self, G: np.ndarray, rowsum: np.ndarray, u: np.ndarray) -> Tuple[float, float, float]:
        """Off-diagonal sums within X, within Y, and the X-Y cross sum."""
        Gu = G @ u
        w = 1.0 - u
        s_xx = float(u @ Gu) - self.n
        s_xy = float(w @ Gu)
        s_yy = float(w @ (rowsum - Gu)) - self.m
        return s_xx, s_yy, s_xy

    def _evaluate_at(self, nu: float, u: np.ndarray) -> PointValues:
        G, rowsum, s_tilde2, s_hat2 = self._nu_state(nu)
        n, m = self.n, self.m
        s_xx, s_yy, s_xy = self._block_sums(G, rowsum, u)
        gamma2 = s_xx / (n * (n - 1.0)) + s_yy / (m * (m - 1.0)) - 2.0 * s_xy / (n * m)
        t_stat = _hom_scale(n, m) * gamma2 / np.sqrt(s_hat2)
        return gamma2, s_tilde2, s_hat2, t_stat

    def gamma2_v(self, nu: float) -> float:
        """Biased V-statistic on the observed labels."""
        G, rowsum, _, _ = self._nu_state(nu)
        s_xx, s_yy, s_xy = self._block_sums(G, rowsum, self._draw_state(None))
        n, m = self.n, self.m
        return (s_xx + n) / n ** 2 + (s_yy + m) / m ** 2 - 2.0 * s_xy / (n * m)

    def get_parameters(self):
        params = super().get_parameters()
        params['m'] = self.m
        return params


def hom_test(
    X: SampleLike,
    Y: SampleLike,
    nu: float,
    alpha: Optional[float] = None,
    calibration: Union[str, Calibration] = Calibration.PERMUTATION,
    B: Optional[int] = None,
    seed: Optional[int] = None,
    rescale_by_dim: bool = False,
    n_jobs: Optional[int] = None,
    nu_source: str = "fixed",
) -> HomReport:
    """
    Two-sample test at a fixed scaling value

    Permutation calibration shuffles the N = n + m pooled labels, takes the
    first n as X and recomputes the statistic B times.

    Returns:
        HomReport
    """
    alpha = config.alpha if alpha is None else alpha
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    calibration = Calibration.parse(calibration)
    B = config.permutations if B is None else B
    seed = config.seed if seed is None else seed

    problem = HomProblem(X, Y, rescale_by_dim)
    observed, p_value = problem.calibrate_fixed(nu, calibration, B, seed, n_jobs)
    resampled = calibration is not Calibration.ASYMPTOTIC_NORMAL

    report = HomReport(
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
        m=problem.m,
        gamma2_v=problem.gamma2_v(nu),
        extras=problem.get_parameters(),
    )
    logger.debug(f"HOM: T={report.t_stat:.4f}, p={report.p_value:.4f} at nu={nu:.4g}")
    return report
