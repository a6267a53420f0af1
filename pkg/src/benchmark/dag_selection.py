"""
KernelTestLab - DAG Selection
Ranks every DAG on up to four variables by how independent its regression
residuals are, using the joint-independence tester
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from tqdm import tqdm

from src.calibration.resampling import replicate_rng
from src.config.config_loader import config
from src.hypothesis.adaptive import adaptive_test
from src.hypothesis.ind import IndProblem
from src.hypothesis.reports import AdaptiveMode, Calibration
from src.kernels.kernel_core import BlockLayout
from src.utils.errors import (
    DegenerateRegressorError,
    InvalidConfigError,
    InvalidParameterError,
    SampleTooSmallError,
    UnsupportedSizeError,
)

REGRESSION_METHOD = "nadaraya-watson (product gaussian, silverman bandwidth)"
TESTERS = ('sa', 'ua', 'median')


# ============================================================================
# ENUMERATION
# ============================================================================

def is_acyclic(adjacency: np.ndarray) -> bool:
    """Kahn's algorithm on adjacency[i, j] = edge i -> j."""
    indegree = adjacency.sum(axis=0).astype(int)
    queue = [j for j in range(adjacency.shape[0]) if indegree[j] == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for child in np.flatnonzero(adjacency[node]):
            indegree[child] -= 1
            if indegree[child] == 0:
                queue.append(int(child))
    return seen == adjacency.shape[0]


def enumerate_dags(p: int) -> List[np.ndarray]:
    """
    Every DAG on p labelled nodes

    Candidate edge sets run over all subsets of the p(p-1) ordered pairs in
    binary order; cyclic ones are dropped.

    Returns:
        Boolean adjacency matrices (3, 25, 543 of them for p = 2, 3, 4)
    """
    if p < 1 or p > config.dag_max_nodes:
        raise UnsupportedSizeError(f"DAG enumeration supports 1..{config.dag_max_nodes} nodes, got {p}")
    pairs = [(i, j) for i in range(p) for j in range(p) if i != j]
    dags = []
    for mask in range(1 << len(pairs)):
        adjacency = np.zeros((p, p), dtype=bool)
        for bit, (i, j) in enumerate(pairs):
            if mask >> bit & 1:
                adjacency[i, j] = True
        if is_acyclic(adjacency):
            dags.append(adjacency)
    return dags


# ============================================================================
# RESIDUALS
# ============================================================================

def silverman_bandwidths(parents: np.ndarray) -> np.ndarray:
    """h_l = sigma_l (4 / ((q + 2) n))^(1 / (q + 4)) for q covariates."""
    n, q = parents.shape
    sigma = parents.std(axis=0, ddof=1)
    if np.any(sigma <= 0):
        raise DegenerateRegressorError(f"parent column(s) {np.flatnonzero(sigma <= 0).tolist()} are constant")
    return sigma * (4.0 / ((q + 2.0) * n)) ** (1.0 / (q + 4.0))


def nadaraya_watson(parents: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Fitted values of target on parents with product Gaussian weights."""
    parents = np.atleast_2d(parents.T).T
    h = silverman_bandwidths(parents)
    scaled = parents / h
    sq = np.sum((scaled[:, np.newaxis, :] - scaled[np.newaxis, :, :]) ** 2, axis=2)
    weights = np.exp(-0.5 * sq)
    return weights @ target / weights.sum(axis=1)


def nadaraya_watson_residuals(Z: np.ndarray, adjacency: np.ndarray) -> np.ndarray:
    """
    Residual of every node regressed on its parents

    Args:
        Z: Standardized data (n x p)
        adjacency: adjacency[i, j] = edge i -> j

    Returns:
        (n x p) residuals; root nodes keep their values
    """
    residuals = np.array(Z, dtype=float, copy=True)
    for j in range(Z.shape[1]):
        parents = np.flatnonzero(adjacency[:, j])
        if parents.size:
            residuals[:, j] = Z[:, j] - nadaraya_watson(Z[:, parents], Z[:, j])
    return residuals


def standardize(data: np.ndarray, names: Sequence[str]) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    sd = data.std(axis=0, ddof=1)
    constant = [names[j] for j in np.flatnonzero(sd <= 0)]
    if constant:
        raise DegenerateRegressorError(f"column(s) {constant} are constant and cannot be regressed on")
    return (data - data.mean(axis=0)) / sd


# ============================================================================
# SELECTION
# ============================================================================

@dataclass(frozen=True, eq=False)
class DagCandidate:
    """One DAG and the p-value of its residual joint-independence test."""
    adjacency: np.ndarray
    p_value: float
    statistic: float
    names: Tuple[str, ...]
    index: int

    @property
    def edges(self) -> List[Tuple[str, str]]:
        return [(self.names[i], self.names[j]) for i, j in zip(*np.nonzero(self.adjacency))]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def describe(self) -> str:
        return ', '.join(f"{a}->{b}" for a, b in self.edges) or '(empty)'

    def to_dict(self) -> dict:
        return {
            'dag': self.describe(),
            'edges': [list(edge) for edge in self.edges],
            'p_value': self.p_value,
            'statistic': self.statistic,
            'regression': REGRESSION_METHOD,
        }


def _residual_pvalue(residuals: np.ndarray, method: str, alpha: float, B: int, seed: int) -> Tuple[float, float]:
    p = residuals.shape[1]
    layout = BlockLayout.unit(p)
    if method == 'median':
        problem = IndProblem(residuals, layout, config.rescale_by_dim)
        observed, p_value = problem.calibrate_fixed(problem.median_nu(), Calibration.PERMUTATION, B, seed, n_jobs=1)
        return p_value, float(observed.t_stat[0])

    mode = AdaptiveMode.SELF_NORMALIZED if method == 'sa' else AdaptiveMode.UNNORMALIZED
    problem = IndProblem(residuals, layout, True if method == 'ua' else config.rescale_by_dim)
    report = adaptive_test(problem, problem.default_grid(), alpha, B, seed, mode=mode, n_jobs=1)
    return report.p_value, report.t_max


def dag_select(
    data: np.ndarray,
    names: Optional[Sequence[str]] = None,
    method: str = 'sa',
    alpha: Optional[float] = None,
    B: Optional[int] = None,
    seed: Optional[int] = None,
    n_jobs: Optional[int] = None,
) -> List[DagCandidate]:
    """
    Rank all DAGs on the columns of data

    Args:
        data: (n x p) observations, p in 2..4
        names: Column names
        method: 'sa', 'ua' or 'median'
        alpha: Level passed to the adaptive tester
        B: Permutations per candidate
        seed: Master seed shared by every candidate
        n_jobs: joblib workers over candidates

    Returns:
        DagCandidates sorted by p-value descending, then fewer edges, then
        enumeration order
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise InvalidParameterError(f"data must be a 2-D array, got shape {data.shape}")
    n, p = data.shape
    if p < 2 or p > config.dag_max_nodes:
        raise UnsupportedSizeError(f"DAG selection supports 2..{config.dag_max_nodes} variables, got {p}")
    if n < config.dag_min_samples:
        raise SampleTooSmallError(f"DAG selection needs n >= {config.dag_min_samples}, got {n}")
    if method not in TESTERS:
        raise InvalidConfigError(f"unknown DAG tester '{method}', expected one of {TESTERS}")
    names = tuple(names) if names is not None else tuple(f"X{j + 1}" for j in range(p))
    alpha = config.alpha if alpha is None else alpha
    B = config.permutations if B is None else B
    seed = config.seed if seed is None else seed
    n_jobs = config.parallel_jobs if n_jobs is None else n_jobs

    Z = standardize(data, names)
    dags = enumerate_dags(p)
    logger.info(f"Scoring {len(dags)} DAGs on {p} variables (n={n}, tester={method}, B={B})")

    def score(adjacency: np.ndarray) -> Tuple[float, float]:
        return _residual_pvalue(nadaraya_watson_residuals(Z, adjacency), method, alpha, B, seed)

    if n_jobs == 1:
        scores = [score(a) for a in dags]
    else:
        scores = Parallel(n_jobs=n_jobs)(delayed(score)(a) for a in dags)

    candidates = [
        DagCandidate(adjacency, float(pv), float(stat), names, index)
        for index, (adjacency, (pv, stat)) in enumerate(zip(dags, scores))
    ]
    candidates.sort(key=lambda c: (-c.p_value, c.n_edges, c.index))
    logger.success(f"Best DAG: {candidates[0].describe()} (p={candidates[0].p_value:.4f})")
    return candidates


def dag_selection_frequencies(
    data: np.ndarray,
    names: Optional[Sequence[str]] = None,
    subsample: Optional[int] = None,
    reps: int = 20,
    method: str = 'sa',
    alpha: Optional[float] = None,
    B: Optional[int] = None,
    seed: Optional[int] = None,
    n_jobs: Optional[int] = None,
    progress: bool = True,
) -> pd.DataFrame:
    """
    How often each DAG ranks first over repeated subsamples

    Returns:
        DataFrame with columns dag, count, frequency (descending frequency)
    """
    data = np.asarray(data, dtype=float)
    subsample = subsample or int(config.get_yaml('dag', 'subsample', default=150))
    if subsample > data.shape[0]:
        raise InvalidParameterError(f"subsample {subsample} exceeds the {data.shape[0]} available rows")
    if reps < 1:
        raise InvalidParameterError(f"need reps >= 1, got {reps}")
    seed = config.seed if seed is None else seed
    n_jobs = config.parallel_jobs if n_jobs is None else n_jobs

    def winner(r: int) -> str:
        rows = replicate_rng(seed, r, stream=300).choice(data.shape[0], size=subsample, replace=False)
        return dag_select(data[rows], names, method, alpha, B, seed + r, n_jobs=1)[0].describe()

    indices = tqdm(range(reps), desc='dag subsamples', disable=not progress, leave=False)
    if n_jobs == 1:
        winners = [winner(r) for r in indices]
    else:
        winners = Parallel(n_jobs=n_jobs)(delayed(winner)(r) for r in indices)

    counts = pd.Series(winners).value_counts()
    frame = pd.DataFrame({'dag': counts.index, 'count': counts.to_numpy()})
    frame['frequency'] = frame['count'] / reps
    return frame.sort_values(['frequency', 'dag'], ascending=[False, True]).reset_index(drop=True)

