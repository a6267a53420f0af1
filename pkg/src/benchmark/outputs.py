"""
KernelTestLab - Output Writers
CSV and SVG power curves, JSON-lines test reports
"""

import json
from pathlib import Path
from typing import Iterable, Optional, Union

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
from loguru import logger  # noqa: E402
from tabulate import tabulate  # noqa: E402

from src.benchmark.power_engine import PowerTable  # noqa: E402
from src.config.config_loader import config  # noqa: E402
from src.hypothesis.reports import AdaptiveReport, TestReport  # noqa: E402
from src.utils.errors import InvalidConfigError  # noqa: E402

FORMATS = ('csv', 'svg')
Report = Union[TestReport, AdaptiveReport]


def output_path(out: Union[str, Path]) -> Path:
    """Relative output paths are placed under config.results_dir."""
    path = Path(out)
    return path if path.is_absolute() else config.results_dir / path


def write_power_csv(table: PowerTable, path: Union[str, Path]) -> Path:
    """Header method,param,power,se,reps; an empty table writes the header only."""
    path = table.to_csv(path)
    logger.info(f"Power table saved to: {path}")
    return path


def write_power_svg(table: PowerTable, path: Union[str, Path], xlabel: str = 'param', title: Optional[str] = None) -> Path:
    """One line per method with +/- one standard error bars."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in table.methods():
        series = table.series(method)
        if len(series) == 1:
            ax.errorbar(series['param'], series['power'], yerr=series['se'], fmt='o', capsize=3, label=method)
        else:
            ax.errorbar(series['param'], series['power'], yerr=series['se'], marker='o', capsize=3, label=method)
    ax.set_xlabel(xlabel)
    ax.set_ylabel('power')
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    if table.rows:
        ax.legend(loc='best')
    fig.tight_layout()
    fig.savefig(path, format='svg')
    plt.close(fig)
    logger.info(f"Power curve saved to: {path}")
    return path


def emit_outputs(
    table: PowerTable,
    out: Union[str, Path],
    fmt: str = 'csv',
    xlabel: str = 'param',
    title: Optional[str] = None,
) -> Path:
    """
    Write a power table in the requested format

    Args:
        table: PowerTable
        out: Target file (suffix is replaced to match the format; relative paths go under results_dir)
        fmt: 'csv' or 'svg'

    Returns:
        Path written
    """
    if fmt not in FORMATS:
        raise InvalidConfigError(f"unknown output format '{fmt}', expected one of {FORMATS}")
    path = output_path(out).with_suffix(f".{fmt}")
    if fmt == 'csv':
        return write_power_csv(table, path)
    return write_power_svg(table, path, xlabel, title)


def report_lines(reports: Iterable[Report]) -> str:
    """One JSON object per report."""
    return '\n'.join(json.dumps(report.to_dict(), sort_keys=False) for report in reports) + '\n'


def emit_reports(reports: Iterable[Report], out: Optional[Union[str, Path]] = None, fmt: str = 'csv') -> Optional[Path]:
    """
    Print JSON-lines reports, or append them to a file

    Reports have no SVG rendering; 'csv' here means the default text output.
    """
    if fmt == 'svg':
        raise InvalidConfigError("test reports can only be written as JSON lines; use --format csv")
    text = report_lines(reports)
    if out is None:
        print(text, end='')
        return None
    path = output_path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'a') as f:
        f.write(text)
    logger.info(f"Report appended to: {path}")
    return path


def print_report(report: Report) -> None:
    """Human-readable summary on the console."""
    data = report.to_dict()
    rows = [(k, v) for k, v in data.items() if k != 'per_nu']
    print("\n" + "=" * 60)
    print(f"{data['test'].upper()} TEST")
    print("=" * 60)
    print(tabulate(rows, tablefmt='simple', floatfmt='.6g'))
    print("=" * 60 + "\n")
