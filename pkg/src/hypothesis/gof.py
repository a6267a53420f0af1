"""
KernelTestLab - Goodness-of-Fit Test
Kernel centered under the null model, bias-corrected estimator of the squared
MMD to P0, studentized statistic and its calibrations
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist, pdist
from scipy.special import erf

from src.calibration.resampling import ParametricDraw, ResamplePlan
from src.config.config_loader import config
from src.hypothesis.base import KernelTest, PointValues
from src.hypothesis.reports import Calibration, GofReport
from src.kernels.kernel_core import (
    SampleLike,
    SampleMatrix,
    as_sample,
    gaussian_gram,
    median_heuristic,
    pairwise_sqdist,
)
from src.kernels.ustat import ustat_moments
from src.utils.errors import InvalidInputError, InvalidParameterError, InvalidReferenceError


# ============================================================================
# REFERENCE MODELS
# ============================================================================

@dataclass(frozen=True, eq=False)
class AnalyticGaussian:
    """Isotropic Gaussian N(mean, var * I) with closed-form kernel expectations."""
    mean: np.ndarray
    var: float = 1.0

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if mean.ndim != 1 or not np.all(np.isfinite(mean)):
            raise InvalidReferenceError(f"reference mean must be a finite vector, got {self.mean!r}")
        if not np.isfinite(self.var) or self.var <= 0:
            raise InvalidReferenceError(f"reference variance must be positive, got {self.var}")
        mean.setflags(write=False)
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'var', float(self.var))

    @classmethod
    def standard(cls, d: int = 1) -> 'AnalyticGaussian':
        return cls(np.zeros(d), 1.0)

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    def expect_at(self, X: np.ndarray, nu: float) -> np.ndarray:
        """E G_nu(Z, x_i) for Z ~ N(mean, var I), one value per row of X."""
        scale = 1.0 + 2.0 * nu * self.var
        sq = np.sum((X - self.mean) ** 2, axis=1)
        return scale ** (-self.d / 2.0) * np.exp(-nu * sq / scale)

    def expect_double(self, nu: float) -> float:
        """E G_nu(Z, Z') for independent Z, Z'."""
        return float((1.0 + 4.0 * nu * self.var) ** (-self.d / 2.0))

    def can_sample(self, n: int) -> bool:
        return True

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.mean + np.sqrt(self.var) * rng.standard_normal((n, self.d))

    def describe(self) -> str:
        if np.all(self.mean == self.mean[0]):
            return f"N({self.mean[0]:g}, {self.var:g} I_{self.d})"
        return f"N(mu, {self.var:g} I_{self.d})"


@dataclass(frozen=True, eq=False)
class EmpiricalReference:
    """Reference sample of size R standing in for P0."""
    sample: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.sample.data if isinstance(self.sample, SampleMatrix) else self.sample, dtype=float)
        if data.ndim == 1:
            data = data[:, np.newaxis]
        if data.ndim != 2 or data.shape[0] < 2:
            raise InvalidReferenceError(f"reference sample needs at least 2 rows, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidReferenceError("reference sample contains non-finite entries")
        data.setflags(write=False)
        object.__setattr__(self, 'sample', data)

    @property
    def R(self) -> int:
        return self.sample.shape[0]

    @property
    def d(self) -> int:
        return self.sample.shape[1]

    @cached_property
    def _condensed(self) -> np.ndarray:
        return pdist(self.sample, metric='sqeuclidean')

    def expect_at(self, X: np.ndarray, nu: float) -> np.ndarray:
        return np.exp(-nu * cdist(X, self.sample, metric='sqeuclidean')).mean(axis=1)

    def expect_double(self, nu: float) -> float:
        """Off-diagonal mean of the reference Gram."""
        return float(np.exp(-nu * self._condensed).mean())

    def can_sample(self, n: int) -> bool:
        return self.R >= n

    def sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.sample[rng.choice(self.R, size=n, replace=False)]

    def describe(self) -> str:
        return f"empirical(R={self.R}, d={self.d})"


# ParametricDraw calls reference.sample(n, rng); the empirical model keeps its
# data in the `sample` field, so it is adapted here.
class _EmpiricalDraws:
    def __init__(self, reference: EmpiricalReference):
        self.reference = reference

    def can_sample(self, n: int) -> bool:
        return self.reference.can_sample(n)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.reference.sample_rows(n, rng)

    def __repr__(self) -> str:
        return self.reference.describe()


@dataclass(frozen=True)
class UniformCube:
    """Uniform density on [0, 1]^d, the base of the bump perturbations."""
    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise InvalidReferenceError(f"dimension must be positive, got {self.d}")

    def expect_at(self, X: np.ndarray, nu: float) -> np.ndarray:
        root = np.sqrt(nu)
        per_axis = 0.5 * np.sqrt(np.pi / nu) * (erf(root * (1.0 - X)) + erf(root * X))
        return np.prod(per_axis, axis=1)

    def expect_double(self, nu: float) -> float:
        per_axis = np.sqrt(np.pi / nu) * erf(np.sqrt(nu)) - (1.0 - np.exp(-nu)) / nu
        return float(per_axis ** self.d)

    def can_sample(self, n: int) -> bool:
        return True

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((n, self.d))

    def describe(self) -> str:
        return f"U[0,1]^{self.d}"


ReferenceModel = Union[AnalyticGaussian, EmpiricalReference, UniformCube]


def reference_size(n: int, multiplier: Optional[int] = None) -> int:
    """Default empirical reference size R = multiplier * n."""
    return (multiplier or config.reference_multiplier) * n


def _check_reference(ref: ReferenceModel, d: int) -> None:
    if not hasattr(ref, 'expect_at'):
        raise InvalidReferenceError(f"unsupported reference model {ref!r}")
    if ref.d != d:
        raise InvalidInputError(f"reference dimension {ref.d} does not match sample dimension {d}")


def _effective_nu(nu: float, d: int, rescale_by_dim: bool) -> float:
    if not np.isfinite(nu) or nu <= 0:
        raise InvalidParameterError(f"scaling parameter must be positive, got {nu}")
    return nu / d if rescale_by_dim else nu


# ============================================================================
# ESTIMATORS
# ============================================================================

def centered_gram_gof(X: SampleLike, nu: float, ref: ReferenceModel, rescale_by_dim: bool = False) -> np.ndarray:
    """
    Kernel centered under P0

    Gbar(x, y) = G(x, y) - E G(Z, y) - E G(x, Z) + E G(Z, Z')

    Args:
        X: Sample (n x d)
        nu: Scaling parameter
        ref: Null reference model
        rescale_by_dim: Divide squared distances by d

    Returns:
        n x n matrix of centered kernel values
    """
    sample = as_sample(X)
    _check_reference(ref, sample.d)
    nu_eff = _effective_nu(nu, sample.d, rescale_by_dim)
    G = gaussian_gram(pairwise_sqdist(sample), nu_eff).values
    e = ref.expect_at(sample.data, nu_eff)
    return G - e[:, np.newaxis] - e[np.newaxis, :] + ref.expect_double(nu_eff)


def gof_gamma2(X: SampleLike, nu: float, ref: ReferenceModel, rescale_by_dim: bool = False) -> float:
    """Off-diagonal mean of the centered kernel (unbiased, may be negative)."""
    Gbar = centered_gram_gof(X, nu, ref, rescale_by_dim)
    n = Gbar.shape[0]
    return float((Gbar.sum() - np.trace(Gbar)) / (n * (n - 1.0)))


def gof_gamma2_v(X: SampleLike, nu: float, ref: ReferenceModel, rescale_by_dim: bool = False) -> float:
    """Biased V-statistic: mean of the centered kernel including the diagonal."""
    return float(centered_gram_gof(X, nu, ref, rescale_by_dim).mean())


def gof_variance(X: SampleLike, nu: float, rescale_by_dim: bool = False) -> Tuple[float, float]:
    """
    Variance estimator of the GOF statistic

    Returns:
        (s_tilde2, s_hat2) with s_hat2 = max(s_tilde2, 1/n^2)
    """
    sample = as_sample(X)
    nu_eff = _effective_nu(nu, sample.d, rescale_by_dim)
    moments = ustat_moments(gaussian_gram(pairwise_sqdist(sample), nu_eff))
    s_tilde2 = moments.centered_second_moment
    return s_tilde2, max(s_tilde2, 1.0 / sample.n ** 2)


def gof_stat(X: SampleLike, nu: float, ref: ReferenceModel, rescale_by_dim: bool = False) -> float:
    """T = (n / sqrt 2) * gamma2_hat / s_hat."""
    sample = as_sample(X)
    gamma2 = gof_gamma2(sample, nu, ref, rescale_by_dim)
    _, s_hat2 = gof_variance(sample, nu, rescale_by_dim)
    return float(sample.n / np.sqrt(2.0) * gamma2 / np.sqrt(s_hat2))


# ============================================================================
# TEST PROBLEM
# ============================================================================

class GofProblem(KernelTest):
    """Goodness-of-fit of X to a fixed reference model."""

    name = "gof"
    resample_calibration = Calibration.MONTE_CARLO

    def __init__(self, X: SampleLike, ref: ReferenceModel, rescale_by_dim: bool = False):
        super().__init__(rescale_by_dim)
        self.sample = as_sample(X)
        _check_reference(ref, self.sample.d)
        self.ref = ref
        self._double: dict = {}

    @property
    def n(self) -> int:
        return self.sample.n

    @property
    def d(self) -> int:
        return self.sample.d

    def median_nu(self) -> float:
        return median_heuristic(pairwise_sqdist(self.sample, self.rescale_by_dim))

    def resample_plan(self, B: int, seed: int) -> ResamplePlan:
        source = _EmpiricalDraws(self.ref) if isinstance(self.ref, EmpiricalReference) else self.ref
        return ResamplePlan(ParametricDraw(source, self.n), B, seed, stream=1)

    def _expect_double(self, nu_eff: float) -> float:
        if nu_eff not in self._double:
            self._double[nu_eff] = self.ref.expect_double(nu_eff)
        return self._double[nu_eff]

    def _draw_state(self, draw: Any) -> Any:
        data = self.sample.data if draw is None else np.asarray(draw, dtype=float)
        return data, pairwise_sqdist(data).values

    def _evaluate_at(self, nu: float, state: Any) -> PointValues:
        data, D = state
        n = data.shape[0]
        nu_eff = _effective_nu(nu, self.d, self.rescale_by_dim)
        gram = gaussian_gram(D, nu_eff)
        e = self.ref.expect_at(data, nu_eff)
        c = self._expect_double(nu_eff)
        off_sum = gram.values.sum() - n
        gamma2 = (off_sum - 2.0 * (n - 1.0) * e.sum()) / (n * (n - 1.0)) + c

        s_tilde2 = ustat_moments(gram).centered_second_moment
        s_hat2 = max(s_tilde2, 1.0 / n ** 2)
        t_stat = n / np.sqrt(2.0) * gamma2 / np.sqrt(s_hat2)
        return gamma2, s_tilde2, s_hat2, t_stat

    def get_parameters(self):
        params = super().get_parameters()
        params['reference'] = self.ref.describe()
        return params


def gof_test(
    X: SampleLike,
    nu: float,
    ref: ReferenceModel,
    alpha: Optional[float] = None,
    calibration: Union[str, Calibration] = Calibration.ASYMPTOTIC_NORMAL,
    B: Optional[int] = None,
    seed: Optional[int] = None,
    rescale_by_dim: bool = False,
    n_jobs: Optional[int] = None,
    nu_source: str = "fixed",
) -> GofReport:
    """
    Goodness-of-fit test at a fixed scaling value

    Args:
        X: Sample (n x d, n >= 4)
        nu: Scaling parameter
        ref: Null reference model
        alpha: Significance level (defaults to config.alpha)
        calibration: asymptotic-normal (p = 1 - Phi(T)) or monte-carlo (fresh P0 draws)
        B: Monte-Carlo draws (defaults to config.permutations)
        seed: Master seed (defaults to config.seed)
        rescale_by_dim: Divide squared distances by d
        n_jobs: joblib workers for the Monte-Carlo replicates

    Returns:
        GofReport
    """
    alpha = config.alpha if alpha is None else alpha
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    calibration = Calibration.parse(calibration)
    B = config.permutations if B is None else B
    seed = config.seed if seed is None else seed

    problem = GofProblem(X, ref, rescale_by_dim)
    observed, p_value = problem.calibrate_fixed(nu, calibration, B, seed, n_jobs)
    nu_eff = _effective_nu(nu, problem.d, rescale_by_dim)
    gamma2_v = gof_gamma2_v(problem.sample, nu, ref, rescale_by_dim)

    report = GofReport(
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
        B=None if calibration is Calibration.ASYMPTOTIC_NORMAL else B,
        seed=None if calibration is Calibration.ASYMPTOTIC_NORMAL else seed,
        rescaled_by_dim=rescale_by_dim,
        nu_source=nu_source,
        gamma2_v=gamma2_v,
        reference=ref.describe(),
        extras={**problem.get_parameters(), 'nu_effective': nu_eff},
    )
    logger.debug(f"GOF: T={report.t_stat:.4f}, p={report.p_value:.4f} at nu={nu:.4g}")
    return report
