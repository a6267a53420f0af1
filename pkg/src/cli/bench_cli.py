"""
KernelTestLab - Command Line Interface
Single tests on CSV data, adaptive tests, power studies, size checks and DAG selection

Usage:
    python run.py hom data.csv --group label --median
    python run.py ind data.csv --blocks 1,1 --nu 2.0 --permutations 200
    python run.py adaptive ind data.csv --blocks 2,2 --sa
    python run.py bench I --median --sa --reps 100 --out exp1 --format svg
    python run.py size II --median --sa --reps 500
    python run.py dag weather.csv --sa --subsample 150 --reps 20
"""

import argparse
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger
from tabulate import tabulate

from src.benchmark.dag_selection import dag_select, dag_selection_frequencies
from src.benchmark.outputs import emit_outputs, emit_reports, output_path, print_report
from src.benchmark.power_engine import Method, MethodSpec, PowerEngine, PowerTable, fixed_methods
from src.config.config_loader import config
from src.data.csv_loader import load_csv, load_sample, split_groups
from src.hypothesis.adaptive import adaptive_test
from src.hypothesis.base import KernelTest
from src.hypothesis.gof import AnalyticGaussian, EmpiricalReference, GofProblem, gof_test, reference_size
from src.hypothesis.hom import HomProblem, hom_test
from src.hypothesis.ind import IndProblem, ind_test
from src.hypothesis.reports import AdaptiveMode, Calibration, Estimator
from src.kernels.kernel_core import BlockLayout, ScalingGrid, parse_grid, recommended_nu, scaling_grid
from src.utils.errors import EXIT_DATA_ERROR, EXIT_OK, InvalidConfigError, KernelTestError
from src.utils.logging_setup import setup_logging

TEST_NAMES = ('gof', 'hom', 'ind')


# ============================================================================
# PARSER
# ============================================================================

def _on_off(value: str) -> bool:
    value = value.lower()
    if value not in ('on', 'off'):
        raise argparse.ArgumentTypeError(f"expected on or off, got '{value}'")
    return value == 'on'


def _float_list(value: str) -> List[float]:
    try:
        return [float(v) for v in value.split(',') if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got '{value}'") from exc


def _int_list(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(',') if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got '{value}'") from exc


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--alpha', type=float, default=None, help='significance level')
    common.add_argument('--permutations', '-B', dest='B', type=int, default=None, help='permutations / Monte-Carlo draws')
    common.add_argument('--seed', type=int, default=None, help='master seed')
    common.add_argument('--out', default=None, help='output file (reports are appended as JSON lines)')
    common.add_argument('--format', dest='fmt', choices=('csv', 'svg'), default='csv')
    common.add_argument('--rescale-dim', dest='rescale_dim', type=_on_off, default=None, help='on|off')
    common.add_argument('--jobs', type=int, default=None, help='joblib workers')
    common.add_argument('--log-level', default=None)
    return common


def _data_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('file', help='CSV file with a header row')
    parser.add_argument('file2', nargs='?', default=None, help='second sample for hom')
    parser.add_argument('--columns', type=lambda v: [c.strip() for c in v.split(',')], default=None)
    parser.add_argument('--group', default=None, help='label column splitting one file into two samples (hom)')
    parser.add_argument('--blocks', type=BlockLayout.parse, default=None, help='block widths d1,d2,... (ind)')
    parser.add_argument('--estimator', type=Estimator.parse, default=None, help='unbiased or v (ind)')
    parser.add_argument('--ref-mean', type=_float_list, default=None, help='reference mean (gof)')
    parser.add_argument('--ref-var', type=float, default=1.0, help='reference variance (gof)')
    parser.add_argument('--ref-file', default=None, help='CSV sample used as empirical reference (gof)')


def _scaling_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--nu', type=float, default=None, help='fixed scaling parameter')
    group.add_argument('--median', action='store_true', help='median-heuristic scaling')
    group.add_argument('--smoothness', type=float, default=None, help='use nu = n^(4/(d+4s))')
    parser.add_argument('--calibration', type=Calibration.parse, default=None)


def _method_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--median', action='store_true', help='median-heuristic tester')
    parser.add_argument('--ua', action='store_true', help='unnormalized adaptive tester')
    parser.add_argument('--sa', action='store_true', help='self-normalized adaptive tester')
    parser.add_argument('--log-nu', type=_float_list, default=None, help='fixed log nu values, e.g. 0,1,2')
    parser.add_argument('--fixed', action='store_true', help='fixed-nu testers at the configured log nu list')


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog='kerneltestlab',
        description='Gaussian-kernel goodness-of-fit, two-sample and independence tests',
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest='command', required=True)

    for name in TEST_NAMES:
        p = sub.add_parser(name, parents=[common], help=f'fixed-scaling {name} test on CSV data')
        _data_options(p)
        _scaling_options(p)

    p = sub.add_parser('adaptive', parents=[common], help='max-over-grid test on CSV data')
    p.add_argument('test', choices=TEST_NAMES)
    _data_options(p)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument('--nu-grid', type=parse_grid, default=None, help='lo:hi:points')
    grid.add_argument('--grid-default', action='store_true', help='log grid over exactly [1, n^(2/d)], without the rescaled widening')
    p.add_argument('--grid-points', type=int, default=None)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument('--sa', action='store_true', help='self-normalized statistic (default)')
    mode.add_argument('--ua', action='store_true', help='unnormalized estimator')

    for name, helptext in (('bench', 'power study'), ('size', 'rejection rates under the null')):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument('experiment', choices=('I', 'II', 'III', 'IV') + (('boundary',) if name == 'bench' else ()))
        _method_options(p)
        p.add_argument('--reps', type=int, default=None)
        p.add_argument('--n', type=int, default=None, help='sample size (disables the n sweep)')
        p.add_argument('--d', type=int, default=None, help='dimension (III and IV)')
        p.add_argument('--sweep-n', type=_int_list, default=None, help='sample sizes to sweep')
        p.add_argument('--grid-points', type=int, default=None)
        if name == 'bench':
            p.add_argument('--null', action='store_true', help='generate from the null (size check)')
            p.add_argument('--bumps', type=int, default=4, help='bumps on [0, 1] (boundary)')
            p.add_argument('--deltas', type=_float_list, default=[0.0, 0.1, 0.2, 0.4], help='separations (boundary)')
            p.add_argument('--smoothness', type=float, default=None, help='s for nu = n^(4/(1+4s)) (boundary)')

    p = sub.add_parser('dag', parents=[common], help='rank DAGs by residual independence')
    p.add_argument('file')
    p.add_argument('--columns', type=lambda v: [c.strip() for c in v.split(',')], default=None)
    tester = p.add_mutually_exclusive_group()
    tester.add_argument('--sa', action='store_true')
    tester.add_argument('--ua', action='store_true')
    tester.add_argument('--median', action='store_true')
    p.add_argument('--subsample', type=int, default=None, help='rows per repetition')
    p.add_argument('--reps', type=int, default=None, help='subsampling repetitions (frequencies)')
    p.add_argument('--top', type=int, default=10, help='candidates to print')

    return parser


# ============================================================================
# SINGLE TESTS
# ============================================================================

def _rescale(args: argparse.Namespace, nu_source: str) -> bool:
    if args.rescale_dim is not None:
        return args.rescale_dim
    return config.rescale_by_dim if nu_source != 'fixed' else False


def _gof_reference(args: argparse.Namespace, d: int, n: int):
    if args.ref_file:
        reference = EmpiricalReference(load_csv(args.ref_file, args.columns).to_numpy())
        if reference.R < reference_size(n):
            logger.warning(f"empirical reference has R={reference.R} rows, below the suggested {reference_size(n)}")
        return reference
    mean = np.zeros(d) if args.ref_mean is None else np.asarray(args.ref_mean, dtype=float)
    if mean.size == 1 and d > 1:
        mean = np.full(d, float(mean[0]))
    return AnalyticGaussian(mean, args.ref_var)


def _load_inputs(test: str, args: argparse.Namespace) -> Dict[str, Any]:
    """Samples (and reference or layout) for one test."""
    if test == 'hom':
        if args.file2:
            return {'X': load_sample(args.file, args.columns), 'Y': load_sample(args.file2, args.columns)}
        if not args.group:
            raise InvalidConfigError("hom needs a second file or --group <column>")
        X, Y, labels = split_groups(args.file, args.group)
        logger.info(f"Groups: X='{labels[0]}' (n={X.n}), Y='{labels[1]}' (m={Y.n})")
        return {'X': X, 'Y': Y}

    X = load_sample(args.file, args.columns)
    if test == 'ind':
        if args.blocks is None:
            raise InvalidConfigError("ind needs --blocks d1,d2,...")
        return {'X': X, 'layout': args.blocks}
    return {'X': X, 'ref': _gof_reference(args, X.d, X.n)}


def build_problem(test: str, inputs: Dict[str, Any], rescale: bool, estimator: Optional[Estimator] = None) -> KernelTest:
    if test == 'gof':
        return GofProblem(inputs['X'], inputs['ref'], rescale)
    if test == 'hom':
        return HomProblem(inputs['X'], inputs['Y'], rescale)
    return IndProblem(inputs['X'], inputs['layout'], rescale, estimator)


def _choose_nu(args: argparse.Namespace, problem: KernelTest) -> float:
    if args.nu is not None:
        return args.nu
    if args.smoothness is not None:
        return recommended_nu(problem.n, problem.d, args.smoothness)
    return problem.median_nu()


def run_test(test: str, args: argparse.Namespace):
    """
    One fixed-scaling test on CSV data

    Returns:
        GofReport, HomReport or IndReport
    """
    inputs = _load_inputs(test, args)
    nu_source = 'fixed' if args.nu is not None else ('recommended' if args.smoothness is not None else 'median')
    rescale = _rescale(args, nu_source)
    nu = _choose_nu(args, build_problem(test, inputs, rescale, args.estimator))
    common = dict(alpha=args.alpha, B=args.B, seed=args.seed, rescale_by_dim=rescale, n_jobs=args.jobs, nu_source=nu_source)

    if test == 'gof':
        calibration = args.calibration or Calibration.ASYMPTOTIC_NORMAL
        return gof_test(inputs['X'], nu, inputs['ref'], calibration=calibration, **common)
    if test == 'hom':
        calibration = args.calibration or Calibration.PERMUTATION
        return hom_test(inputs['X'], inputs['Y'], nu, calibration=calibration, **common)
    calibration = args.calibration or Calibration.PERMUTATION
    return ind_test(inputs['X'], inputs['layout'], nu, estimator=args.estimator, calibration=calibration, **common)


def run_adaptive(args: argparse.Namespace):
    mode = AdaptiveMode.UNNORMALIZED if args.ua else AdaptiveMode.SELF_NORMALIZED
    # the unnormalized maximum is only comparable across nu on rescaled distances
    rescale = True if mode is AdaptiveMode.UNNORMALIZED else _rescale(args, 'adaptive')
    problem = build_problem(args.test, _load_inputs(args.test, args), rescale, args.estimator)
    if args.nu_grid is not None:
        grid: ScalingGrid = args.nu_grid
    elif args.grid_default:
        grid = scaling_grid(problem.grid_n, problem.d, args.grid_points or config.grid_points)
    else:
        grid = problem.default_grid(args.grid_points)
    return adaptive_test(problem, grid, args.alpha, args.B, args.seed, mode=mode, n_jobs=args.jobs)


# ============================================================================
# POWER STUDIES
# ============================================================================

def selected_methods(args: argparse.Namespace) -> List[MethodSpec]:
    methods = []
    if args.median:
        methods.append(MethodSpec(Method.MEDIAN))
    if args.ua:
        methods.append(MethodSpec(Method.UA))
    if args.sa:
        methods.append(MethodSpec(Method.SA))
    if args.log_nu:
        methods.extend(fixed_methods(args.log_nu))
    elif args.fixed:
        methods.extend(fixed_methods(config.fixed_log_nu(args.experiment)))
    if not methods:
        raise InvalidConfigError("select at least one of --median, --ua, --sa, --fixed, --log-nu")
    return methods


def _experiment_params(args: argparse.Namespace) -> Dict[str, Any]:
    params: Dict[str, Any] = {}
    if args.n is not None:
        params.update(n=args.n, sweep_n=None)
        if args.experiment in ('I', 'III'):
            params['m'] = args.n
    if args.d is not None:
        params['d'] = args.d
    if args.sweep_n is not None:
        params['sweep_n'] = args.sweep_n
    return params


def run_bench(args: argparse.Namespace, null: bool = False) -> PowerTable:
    engine = PowerEngine(
        alpha=args.alpha,
        B=args.B,
        seed=args.seed,
        n_jobs=args.jobs,
        grid_points=args.grid_points,
        rescale_by_dim=args.rescale_dim,
    )
    if args.experiment == 'boundary':
        n = args.n or 500
        return engine.run_detection_boundary(n, args.bumps, args.deltas, args.reps, args.smoothness)
    return engine.run_experiment(args.experiment, selected_methods(args), args.reps, _experiment_params(args), null=null)


def _xlabel(args: argparse.Namespace) -> str:
    if args.experiment == 'boundary':
        return 'separation'
    sweeping = args.n is None and (args.sweep_n or config.experiment_defaults(args.experiment).get('sweep_n'))
    return 'n' if sweeping else 'log nu'


# ============================================================================
# DAG SELECTION
# ============================================================================

def run_dag(args: argparse.Namespace) -> None:
    frame = load_csv(args.file, args.columns)
    method = 'ua' if args.ua else ('median' if args.median else str(config.get_yaml('dag', 'method', default='sa')))
    names = list(frame.columns)
    data = frame.to_numpy()

    if args.reps:
        frequencies = dag_selection_frequencies(
            data, names, args.subsample, args.reps, method, args.alpha, args.B, args.seed, args.jobs,
        )
        print(tabulate(frequencies, headers='keys', tablefmt='github', showindex=False, floatfmt='.3f'))
        if args.out:
            path = output_path(args.out).with_suffix(".csv")
            path.parent.mkdir(parents=True, exist_ok=True)
            frequencies.to_csv(path, index=False)
            logger.info(f"Selection frequencies saved to: {path}")
        return

    candidates = dag_select(data, names, method, args.alpha, args.B, args.seed, args.jobs)
    rows = [(rank + 1, c.describe(), c.p_value, c.statistic) for rank, c in enumerate(candidates[:args.top])]
    print(tabulate(rows, headers=['rank', 'dag', 'p_value', 'statistic'], tablefmt='github', floatfmt='.4f'))
    if args.out:
        emit_reports(candidates, args.out)


# ============================================================================
# ENTRY POINT
# ============================================================================

def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and dispatch

    Returns:
        0 on success, 2 on invalid configuration, 3 on data errors
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        if args.command in TEST_NAMES:
            report = run_test(args.command, args)
            print_report(report)
            emit_reports([report], args.out, args.fmt)
        elif args.command == 'adaptive':
            report = run_adaptive(args)
            print_report(report)
            emit_reports([report], args.out, args.fmt)
        elif args.command in ('bench', 'size'):
            null = args.command == 'size' or getattr(args, 'null', False)
            table = run_bench(args, null=null)
            title = f"{'SIZE' if null else 'POWER'} - EXPERIMENT {args.experiment}"
            PowerEngine.print_results(table, title)
            if args.out:
                emit_outputs(table, args.out, args.fmt, xlabel=_xlabel(args), title=title)
        else:
            run_dag(args)
    except KernelTestError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    except OSError as exc:
        logger.error(f"I/O error: {exc}")
        return EXIT_DATA_ERROR

    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
