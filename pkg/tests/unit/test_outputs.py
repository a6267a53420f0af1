"""
Unit tests for CSV/SVG writers and JSON-lines reports
"""

import json

import numpy as np
import pytest

from src.benchmark.outputs import emit_outputs, emit_reports, report_lines
from src.benchmark.power_engine import PowerTable
from src.hypothesis.hom import hom_test
from src.utils.errors import InvalidConfigError


@pytest.fixture
def table():
    table = PowerTable()
    table.add('sa', 25.0, 4, 10)
    table.add('sa', 50.0, 8, 10)
    table.add('median', 25.0, 2, 10)
    return table


def test_csv_suffix_follows_format(tmp_path, table):
    path = emit_outputs(table, tmp_path / 'power.out', 'csv')
    assert path.suffix == '.csv'
    assert path.read_text().splitlines()[0] == 'method,param,power,se,reps'


def test_empty_table_csv(tmp_path):
    path = emit_outputs(PowerTable(), tmp_path / 'empty', 'csv')
    assert path.read_text().strip() == 'method,param,power,se,reps'


def test_svg_is_written(tmp_path, table):
    path = emit_outputs(table, tmp_path / 'curve.csv', 'svg', xlabel='n', title='III')
    assert path.suffix == '.svg'
    assert '<svg' in path.read_text()


def test_unknown_format(tmp_path, table):
    with pytest.raises(InvalidConfigError):
        emit_outputs(table, tmp_path / 'x', 'png')


def test_reports_as_json_lines(tmp_path, rng):
    report = hom_test(rng.standard_normal((8, 1)), rng.standard_normal((8, 1)), 1.0, B=9, seed=1, n_jobs=1)
    line = json.loads(report_lines([report]).strip())
    assert line['test'] == 'hom'
    assert line['calibration'] == 'permutation'
    path = emit_reports([report, report], tmp_path / 'reports.jsonl')
    assert len(path.read_text().splitlines()) == 2


def test_reports_cannot_be_svg(rng):
    report = hom_test(np.zeros((4, 1)), np.ones((4, 1)), 1.0, B=9, seed=1, n_jobs=1)
    with pytest.raises(InvalidConfigError):
        emit_reports([report], fmt='svg')


def test_relative_output_goes_under_results_dir(tmp_path, table, monkeypatch):
    monkeypatch.setenv('KTL_RESULTS_DIR', str(tmp_path / 'results'))
    path = emit_outputs(table, 'exp1', 'csv')
    assert path == tmp_path / 'results' / 'exp1.csv'
    assert path.exists()
