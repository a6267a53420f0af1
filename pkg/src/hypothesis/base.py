"""
KernelTestLab - Kernel Test Base Class
Shared machinery for the goodness-of-fit, homogeneity and independence problems

A problem knows how to evaluate its statistic along a list of scaling values,
both on the observed data and on one resampled draw. Fixed-nu tests are the
single-point case of the adaptive max-over-grid tests.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.stats import norm

from src.calibration.resampling import ResamplePlan, resample_pvalue, run_replicates
from src.config.config_loader import config
from src.hypothesis.reports import AdaptiveMode, Calibration
from src.kernels.kernel_core import ScalingGrid, scaling_grid
from src.utils.errors import (
    GridEvaluationError,
    InvalidConfigError,
    InvalidParameterError,
    KernelTestError,
)

# (gamma2_hat, s_tilde2, s_hat2, t_stat) at one scaling value
PointValues = Tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class GridValues:
    """Estimator, variance and studentized statistic at every grid point."""
    nus: np.ndarray
    gamma2: np.ndarray
    s_tilde2: np.ndarray
    s_hat2: np.ndarray
    t_stat: np.ndarray

    def path(self, mode: AdaptiveMode = AdaptiveMode.SELF_NORMALIZED) -> np.ndarray:
        return self.t_stat if mode is AdaptiveMode.SELF_NORMALIZED else self.gamma2

    def maximum(self, mode: AdaptiveMode = AdaptiveMode.SELF_NORMALIZED) -> Tuple[float, float]:
        """(max value, its nu); np.argmax keeps the first, i.e. smallest, nu on ties."""
        values = self.path(mode)
        idx = int(np.argmax(values))
        return float(values[idx]), float(self.nus[idx])


class GridMaximum:
    """Picklable replicate statistic: max over a fixed grid for one draw."""

    def __init__(self, problem: 'KernelTest', nus: Sequence[float], mode: AdaptiveMode, label_errors: bool = False):
        self.problem = problem
        self.nus = tuple(float(nu) for nu in nus)
        self.mode = mode
        self.label_errors = label_errors

    def __call__(self, draw: Any) -> float:
        values = self.problem.evaluate(self.nus, draw, label_errors=self.label_errors)
        return values.maximum(self.mode)[0]


class KernelTest(ABC):
    """
    Base class for Gaussian-kernel test problems

    Subclasses provide the per-draw state, the per-nu computation and the
    resampling scheme that is exact under their null hypothesis.
    """

    name: str = "kernel"
    resample_calibration: Calibration = Calibration.PERMUTATION

    def __init__(self, rescale_by_dim: bool = False):
        self.rescale_by_dim = bool(rescale_by_dim)

    # ------------------------------------------------------------------
    # Problem-specific hooks
    # ------------------------------------------------------------------

    @property
    @abstractmethod
    def n(self) -> int:
        """Sample size used for the variance floor and the grid."""

    @property
    @abstractmethod
    def d(self) -> int:
        """Dimension of the observations."""

    @abstractmethod
    def median_nu(self) -> float:
        """Median-heuristic scaling on this problem's distances."""

    @abstractmethod
    def resample_plan(self, B: int, seed: int) -> ResamplePlan:
        """Null resampling scheme for B replicates."""

    @abstractmethod
    def _draw_state(self, draw: Any) -> Any:
        """Per-draw precomputation shared by every nu (None = observed data)."""

    @abstractmethod
    def _evaluate_at(self, nu: float, state: Any) -> PointValues:
        """Estimator, variance and statistic at one nu."""

    # ------------------------------------------------------------------
    # Shared machinery
    # ------------------------------------------------------------------

    @property
    def grid_n(self) -> int:
        return self.n

    def default_grid(self, points: Optional[int] = None) -> ScalingGrid:
        """Log-spaced grid over [1, n^(2/d)], widened to config.rescaled_grid_upper when rescaling."""
        min_upper = config.rescaled_grid_upper if self.rescale_by_dim else None
        return scaling_grid(self.grid_n, self.d, points or config.grid_points, min_upper)

    def evaluate(self, nus: Sequence[float], draw: Any = None, label_errors: bool = False) -> GridValues:
        """
        Statistic path along nus for the observed data (draw=None) or one null draw

        Args:
            nus: Scaling values
            draw: Output of the resample plan for one replicate
            label_errors: Wrap failures in GridEvaluationError carrying the nu

        Returns:
            GridValues
        """
        state = self._draw_state(draw)
        rows = []
        for nu in nus:
            nu = float(nu)
            if not np.isfinite(nu) or nu <= 0:
                raise InvalidParameterError(f"scaling parameter must be positive, got {nu}")
            try:
                rows.append(self._evaluate_at(nu, state))
            except (KernelTestError, ArithmeticError, ValueError) as exc:
                if not label_errors or isinstance(exc, GridEvaluationError):
                    raise
                raise GridEvaluationError(nu, exc) from exc
        table = np.array(rows, dtype=float).reshape(-1, 4)
        return GridValues(
            nus=np.array([float(nu) for nu in nus]),
            gamma2=table[:, 0],
            s_tilde2=table[:, 1],
            s_hat2=table[:, 2],
            t_stat=table[:, 3],
        )

    def statistic(self, nu: float) -> float:
        """Studentized statistic at one nu on the observed data."""
        return float(self.evaluate([nu]).t_stat[0])

    def gamma2(self, nu: float) -> float:
        """Bias-corrected estimator at one nu on the observed data."""
        return float(self.evaluate([nu]).gamma2[0])

    def check_calibration(self, calibration: Calibration) -> None:
        if calibration not in (Calibration.ASYMPTOTIC_NORMAL, self.resample_calibration):
            raise InvalidConfigError(
                f"{self.name} supports {Calibration.ASYMPTOTIC_NORMAL.value} or "
                f"{self.resample_calibration.value} calibration, got {calibration.value}"
            )

    def calibrate_fixed(
        self,
        nu: float,
        calibration: Calibration,
        B: int,
        seed: int,
        n_jobs: Optional[int] = None,
    ) -> Tuple[GridValues, float]:
        """
        Observed values at nu and the p-value under the requested calibration

        Returns:
            (observed GridValues with one row, p-value)
        """
        self.check_calibration(calibration)
        observed = self.evaluate([nu])
        t_obs = float(observed.t_stat[0])
        if calibration is Calibration.ASYMPTOTIC_NORMAL:
            return observed, float(norm.sf(t_obs))

        plan = self.resample_plan(B, seed)
        logger.debug(f"{self.name}: {calibration.value} calibration at nu={nu:.4g} with B={B}")
        null = run_replicates(plan, GridMaximum(self, [nu], AdaptiveMode.SELF_NORMALIZED), n_jobs)
        return observed, resample_pvalue(t_obs, null)

    def get_parameters(self) -> Dict[str, Any]:
        """Configuration echo for reports."""
        return {
            'test': self.name,
            'n': self.n,
            'd': self.d,
            'rescale_by_dim': self.rescale_by_dim,
        }

    def __repr__(self) -> str:
        return f"<{type(self).__name__}: n={self.n}, d={self.d}, rescale_by_dim={self.rescale_by_dim}>"
