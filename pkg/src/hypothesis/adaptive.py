"""
KernelTestLab - Adaptive Tests
Maximum of the studentized statistic over a scaling grid, calibrated by
recomputing the full grid maximum on every resample
"""

from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from src.calibration.resampling import empirical_quantile, resample_pvalue, run_replicates
from src.config.config_loader import config
from src.hypothesis.base import GridMaximum, KernelTest
from src.hypothesis.reports import AdaptiveMode, AdaptiveReport
from src.kernels.kernel_core import ScalingGrid
from src.utils.errors import GridEvaluationError, InvalidParameterError

GridLike = Union[ScalingGrid, List[float], Tuple[float, ...]]


def _grid_values(grid: GridLike) -> Tuple[float, ...]:
    values = tuple(grid.values) if isinstance(grid, ScalingGrid) else tuple(float(v) for v in grid)
    if not values:
        raise InvalidParameterError("scaling grid is empty")
    return values


def adaptive_stat(
    stat_fn: Callable[[float], float],
    grid: GridLike,
) -> Tuple[float, float, List[Tuple[float, float]]]:
    """
    Maximum of stat_fn over the grid

    Args:
        stat_fn: nu -> statistic
        grid: Scaling values in increasing order

    Returns:
        (t_max, nu_argmax, per_nu); ties go to the smallest nu
    """
    per_nu = []
    for nu in _grid_values(grid):
        try:
            value = float(stat_fn(nu))
        except GridEvaluationError:
            raise
        except Exception as exc:
            raise GridEvaluationError(nu, exc) from exc
        per_nu.append((nu, value))

    t_max, nu_argmax = per_nu[0][1], per_nu[0][0]
    for nu, value in per_nu[1:]:
        if value > t_max:
            t_max, nu_argmax = value, nu
    return t_max, nu_argmax, per_nu


def unnormalized_adaptive_stat(problem: KernelTest, grid: Optional[GridLike] = None) -> Tuple[float, float]:
    """
    Maximum of the raw estimator gamma2_nu over the grid

    Returns:
        (max gamma2, argmax nu)
    """
    nus = _grid_values(grid if grid is not None else problem.default_grid())
    values = problem.evaluate(nus, label_errors=True)
    return values.maximum(AdaptiveMode.UNNORMALIZED)


def adaptive_test(
    problem: KernelTest,
    grid: Optional[GridLike] = None,
    alpha: Optional[float] = None,
    B: Optional[int] = None,
    seed: Optional[int] = None,
    mode: AdaptiveMode = AdaptiveMode.SELF_NORMALIZED,
    n_jobs: Optional[int] = None,
) -> AdaptiveReport:
    """
    Adaptive test over a scaling grid

    Each of the B resamples (fresh P0 draws for GOF, pooled shuffles for HOM,
    block permutations for IND) recomputes the maximum over the same grid.

    Args:
        problem: GofProblem, HomProblem or IndProblem
        grid: Scaling values (defaults to the problem's [1, n^(2/d)] grid)
        alpha: Significance level for q_hat and the decision
        B: Number of resamples
        seed: Master seed
        mode: Maximize the studentized statistic or the raw estimator
        n_jobs: joblib workers

    Returns:
        AdaptiveReport
    """
    alpha = config.alpha if alpha is None else alpha
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    B = config.permutations if B is None else B
    seed = config.seed if seed is None else seed
    nus = _grid_values(grid if grid is not None else problem.default_grid())

    observed = problem.evaluate(nus, label_errors=True)
    t_max, nu_argmax = observed.maximum(mode)
    path = observed.path(mode)

    plan = problem.resample_plan(B, seed)
    null_maxima = np.asarray(run_replicates(plan, GridMaximum(problem, nus, mode, label_errors=True), n_jobs))
    p_value = resample_pvalue(t_max, null_maxima)
    q_hat = empirical_quantile(null_maxima, alpha)

    logger.debug(
        f"{problem.name} adaptive ({mode.value}): max={t_max:.4f} at nu={nu_argmax:.4g}, "
        f"p={p_value:.4f}, q_hat={q_hat:.4f} over {len(nus)} grid points"
    )
    return AdaptiveReport(
        test=problem.name,
        t_max=t_max,
        nu_argmax=nu_argmax,
        per_nu=[(float(nu), float(v)) for nu, v in zip(observed.nus, path)],
        p_value=p_value,
        q_hat=q_hat,
        mode=mode,
        calibration=problem.resample_calibration,
        alpha=alpha,
        B=B,
        seed=seed,
        n=problem.n,
        rescaled_by_dim=problem.rescale_by_dim,
        extras=problem.get_parameters(),
    )
