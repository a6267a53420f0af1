"""
KernelTestLab - Power Engine
Monte-Carlo power and size studies for the median-heuristic, fixed-nu,
unnormalized-adaptive and self-normalized-adaptive testers
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from tabulate import tabulate
from tqdm import tqdm

from src.calibration.resampling import derive_seed
from src.config.config_loader import config
from src.data.experiments import ExperimentSample, ExperimentSetting, experiment_sampler
from src.data.perturbation import PerturbationSpec, sample_perturbed
from src.hypothesis.adaptive import adaptive_test
from src.hypothesis.base import KernelTest
from src.hypothesis.gof import GofProblem, UniformCube
from src.hypothesis.hom import HomProblem
from src.hypothesis.ind import IndProblem
from src.hypothesis.reports import AdaptiveMode, Calibration
from src.kernels.kernel_core import recommended_nu
from src.utils.errors import InvalidConfigError, InvalidParameterError


class Method(Enum):
    """Tester compared in a power study"""
    MEDIAN = "median"
    UA = "ua"
    SA = "sa"
    FIXED = "fixed"


@dataclass(frozen=True)
class MethodSpec:
    """A tester, with its log-nu for the fixed-nu variant."""
    kind: Method
    log_nu: Optional[float] = None

    def __post_init__(self):
        if (self.kind is Method.FIXED) != (self.log_nu is not None):
            raise InvalidConfigError("a fixed-nu method needs exactly one log nu value")

    @classmethod
    def parse(cls, text: str) -> 'MethodSpec':
        """'median', 'ua', 'sa' or 'fixed:<log nu>'."""
        name, _, value = text.partition(':')
        try:
            kind = Method(name.strip().lower())
        except ValueError as exc:
            raise InvalidConfigError(f"unknown method '{text}'") from exc
        if kind is Method.FIXED:
            try:
                return cls(kind, float(value))
            except ValueError as exc:
                raise InvalidConfigError(f"fixed method needs a log nu, e.g. fixed:2.5, got '{text}'") from exc
        return cls(kind)

    @property
    def label(self) -> str:
        return self.kind.value


def fixed_methods(log_nus: Iterable[float]) -> List[MethodSpec]:
    return [MethodSpec(Method.FIXED, float(v)) for v in log_nus]


# ============================================================================
# POWER TABLE
# ============================================================================

class PowerTable:
    """Rows of (method, param, power, se, reps)."""

    COLUMNS = ['method', 'param', 'power', 'se', 'reps']

    def __init__(self, rows: Optional[List[Dict]] = None):
        self.rows: List[Dict] = list(rows or [])

    @staticmethod
    def standard_error(power: float, reps: int) -> float:
        return float(np.sqrt(power * (1.0 - power) / reps)) if reps > 0 else float('nan')

    def add(self, method: str, param: float, rejections: int, reps: int) -> None:
        if reps < 1 or not 0 <= rejections <= reps:
            raise InvalidParameterError(f"invalid rejection count {rejections}/{reps}")
        power = rejections / reps
        self.rows.append({
            'method': method,
            'param': float(param),
            'power': power,
            'se': self.standard_error(power, reps),
            'reps': int(reps),
        })

    @property
    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.COLUMNS)

    def methods(self) -> List[str]:
        return list(dict.fromkeys(row['method'] for row in self.rows))

    def series(self, method: str) -> pd.DataFrame:
        frame = self.frame
        return frame[frame['method'] == method].sort_values('param')

    def power_of(self, method: str, param: Optional[float] = None) -> float:
        rows = self.series(method)
        if param is not None:
            rows = rows[np.isclose(rows['param'], param)]
        if rows.empty:
            raise KeyError(f"no row for method={method}, param={param}")
        return float(rows['power'].iloc[0])

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame.to_csv(path, index=False)
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'PowerTable':
        frame = pd.read_csv(path)
        return cls(frame[cls.COLUMNS].to_dict('records'))

    def __len__(self) -> int:
        return len(self.rows)


# ============================================================================
# ENGINE
# ============================================================================

# (rejected, log of the nu the tester used) for one replicate
Decision = Tuple[bool, float]


class PowerEngine:
    """
    Power-study engine

    Every replicate draws fresh data from (seed, replicate) and calibrates each
    tester with its own derived seed, so all testers see the same data sets
    and the whole study is reproducible regardless of the worker count.
    """

    def __init__(
        self,
        alpha: Optional[float] = None,
        B: Optional[int] = None,
        seed: Optional[int] = None,
        n_jobs: Optional[int] = None,
        grid_points: Optional[int] = None,
        rescale_by_dim: Optional[bool] = None,
        progress: bool = True,
    ):
        """
        Initialize power engine

        Args:
            alpha: Significance level
            B: Permutations / Monte-Carlo draws per test
            seed: Master seed
            n_jobs: joblib workers over replicates
            grid_points: Adaptive grid size
            rescale_by_dim: Override the per-experiment rescaling flag
            progress: Show a tqdm bar
        """
        self.alpha = config.alpha if alpha is None else alpha
        self.B = config.permutations if B is None else B
        self.seed = config.seed if seed is None else seed
        self.n_jobs = config.parallel_jobs if n_jobs is None else n_jobs
        self.grid_points = grid_points or config.grid_points
        self.rescale_by_dim = rescale_by_dim
        self.progress = progress
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.B < 1:
            raise InvalidParameterError(f"need B >= 1, got {self.B}")

        logger.info(f"Power engine: alpha={self.alpha}, B={self.B}, seed={self.seed}, n_jobs={self.n_jobs}")

    # ------------------------------------------------------------------
    # One replicate
    # ------------------------------------------------------------------

    def _rescale_for(self, tag: str) -> bool:
        if self.rescale_by_dim is not None:
            return self.rescale_by_dim
        return bool(config.experiment_defaults(tag).get('rescale_by_dim', config.rescale_by_dim))

    def build_problem(self, sample: ExperimentSample, rescale_by_dim: bool) -> KernelTest:
        if sample.Y is not None:
            return HomProblem(sample.X, sample.Y, rescale_by_dim)
        return IndProblem(sample.X, sample.layout, rescale_by_dim)

    def decide(self, problem: KernelTest, method: MethodSpec, seed: int, unnormalized: Optional[KernelTest] = None) -> Decision:
        """Run one tester on one data set."""
        if method.kind is Method.SA:
            report = adaptive_test(problem, problem.default_grid(self.grid_points), self.alpha, self.B, seed, n_jobs=1)
            return report.reject, float(np.log(report.nu_argmax))
        if method.kind is Method.UA:
            target = unnormalized or problem
            report = adaptive_test(
                target, target.default_grid(self.grid_points), self.alpha, self.B, seed,
                mode=AdaptiveMode.UNNORMALIZED, n_jobs=1,
            )
            return report.reject, float(np.log(report.nu_argmax))

        nu = problem.median_nu() if method.kind is Method.MEDIAN else float(np.exp(method.log_nu))
        _, p_value = problem.calibrate_fixed(nu, problem.resample_calibration, self.B, seed, n_jobs=1)
        return p_value <= self.alpha, float(np.log(nu))

    def run_replicate(self, setting: ExperimentSetting, methods: Sequence[MethodSpec], replicate: int, data_seed: int) -> List[Decision]:
        sample = experiment_sampler(setting, data_seed, replicate)
        rescale = self._rescale_for(setting.tag)
        problem = self.build_problem(sample, rescale)
        unnormalized = None
        if any(m.kind is Method.UA for m in methods):
            unnormalized = problem if rescale else self.build_problem(sample, True)

        decisions = []
        for index, method in enumerate(methods):
            calib_seed = derive_seed(data_seed, replicate, index)
            decisions.append(self.decide(problem, method, calib_seed, unnormalized))
        return decisions

    def _replicates(self, job, reps: int, desc: str) -> List:
        indices = range(reps)
        if self.n_jobs == 1:
            iterator = tqdm(indices, desc=desc, disable=not self.progress, leave=False)
            return [job(r) for r in iterator]
        results = Parallel(n_jobs=self.n_jobs, return_as='generator')(delayed(job)(r) for r in indices)
        return list(tqdm(results, total=reps, desc=desc, disable=not self.progress, leave=False))

    # ------------------------------------------------------------------
    # Studies
    # ------------------------------------------------------------------

    def run_point(self, setting: ExperimentSetting, methods: Sequence[MethodSpec], reps: int, data_seed: int) -> List[Tuple[int, float]]:
        """
        Rejection counts at one design point

        Returns:
            (rejections, mean log nu) per method
        """
        desc = f"{setting.tag} n={setting.n}{' null' if setting.null else ''}"

        def job(r: int) -> List[Decision]:
            return self.run_replicate(setting, methods, r, data_seed)

        per_rep = self._replicates(job, reps, desc)
        summary = []
        for index in range(len(methods)):
            rejected = [per_rep[r][index][0] for r in range(reps)]
            log_nus = [per_rep[r][index][1] for r in range(reps)]
            summary.append((int(np.sum(rejected)), float(np.mean(log_nus))))
        return summary

    def run_experiment(
        self,
        tag: str,
        methods: Sequence[MethodSpec],
        reps: Optional[int] = None,
        params: Optional[Dict] = None,
        null: bool = False,
    ) -> PowerTable:
        """
        Power (or size, with null=True) of each method on an experiment

        Args:
            tag: I, II, III or IV
            methods: Testers to compare
            reps: Replicates per point (defaults to config.benchmark_reps)
            params: Overrides of the YAML experiment defaults (n, m, d, sweep_n)
            null: Generate from the null counterpart

        Returns:
            PowerTable; param is n for sweeps over n, otherwise log nu
            (the mean log nu chosen, for data-driven testers)
        """
        reps = config.benchmark_reps if reps is None else reps
        if reps < 1:
            raise InvalidParameterError(f"need reps >= 1, got {reps}")
        if not methods:
            raise InvalidConfigError("no methods selected")

        defaults = dict(config.experiment_defaults(tag))
        defaults.update(params or {})
        base = ExperimentSetting(tag, int(defaults['n']), defaults.get('m'), defaults.get('d'), null)
        sweep = [int(v) for v in defaults.get('sweep_n') or []]

        logger.info(
            f"Experiment {tag}{' (null)' if null else ''}: {len(methods)} method(s), "
            f"{reps} reps, {'n in ' + str(sweep) if sweep else 'n=' + str(base.n)}"
        )

        table = PowerTable()
        points = [base.with_n(n) for n in sweep] if sweep else [base]
        for point_index, setting in enumerate(points):
            data_seed = derive_seed(self.seed, 1000 + point_index)
            summary = self.run_point(setting, methods, reps, data_seed)
            for method, (rejections, mean_log_nu) in zip(methods, summary):
                param = float(setting.n) if sweep else (method.log_nu if method.kind is Method.FIXED else mean_log_nu)
                table.add(method.label, param, rejections, reps)

        logger.success(f"Experiment {tag} finished: {len(table)} rows")
        return table

    def run_size_check(self, tag: str, methods: Sequence[MethodSpec], reps: Optional[int] = None, params: Optional[Dict] = None) -> PowerTable:
        """Rejection rates under the experiment's null."""
        return self.run_experiment(tag, methods, reps, params, null=True)

    def run_detection_boundary(
        self,
        n: int,
        b: int,
        deltas: Sequence[float],
        reps: Optional[int] = None,
        s: Optional[float] = None,
    ) -> PowerTable:
        """
        GOF power against bump perturbations of U[0,1] at nu = n^(4/(1+4s))

        Args:
            n: Sample size
            b: Bumps on [0, 1]
            deltas: L2 separations r * b^(1/2)
            reps: Replicates per separation
            s: Smoothness entering the scaling choice

        Returns:
            PowerTable with method 'fixed' and param = delta
        """
        reps = config.benchmark_reps if reps is None else reps
        s = config.smoothness if s is None else s
        nu = recommended_nu(n, 1, s)
        reference = UniformCube(1)
        logger.info(f"Detection boundary: n={n}, b={b}, nu={nu:.3f}, deltas={list(deltas)}")

        table = PowerTable()
        for point_index, delta in enumerate(deltas):
            spec = PerturbationSpec.alternating(1, b, delta / np.sqrt(b), s=s)
            data_seed = derive_seed(self.seed, 2000 + point_index)

            def job(r: int, spec=spec, data_seed=data_seed) -> bool:
                problem = GofProblem(sample_perturbed(spec, n, data_seed, stream=r), reference)
                _, p_value = problem.calibrate_fixed(nu, Calibration.MONTE_CARLO, self.B, derive_seed(self.seed, r), n_jobs=1)
                return p_value <= self.alpha

            rejections = int(np.sum(self._replicates(job, reps, f"delta={delta:g}")))
            table.add('fixed', float(delta), rejections, reps)

        logger.success(f"Detection boundary finished: {len(table)} rows")
        return table

    @staticmethod
    def print_results(table: PowerTable, title: str = "POWER STUDY") -> None:
        """Print the table to the console."""
        print("\n" + "=" * 60)
        print(title)
        print("=" * 60)
        frame = table.frame
        if frame.empty:
            print("(no rows)")
        else:
            print(tabulate(frame, headers='keys', tablefmt='github', showindex=False, floatfmt='.4f'))
        print("=" * 60 + "\n")
