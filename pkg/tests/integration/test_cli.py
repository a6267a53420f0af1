"""
Integration tests for the command line entry point
"""

import json

import numpy as np
import pytest

from src.cli.bench_cli import main
from src.utils.errors import EXIT_DATA_ERROR, EXIT_INVALID_CONFIG, EXIT_OK


def _column(csv_file, name, values, header='x'):
    return csv_file(header + '\n' + '\n'.join(f"{v:.10g}" for v in values) + '\n', name)


def _last_json(text):
    return json.loads([line for line in text.splitlines() if line.startswith('{')][-1])


def test_hom_on_identical_constant_files(csv_file, capsys):
    a = _column(csv_file, 'a.csv', [5.0] * 8)
    b = _column(csv_file, 'b.csv', [5.0] * 8)
    assert main(['hom', str(a), str(b), '--nu', '1.0', '-B', '99', '--seed', '1', '--jobs', '1']) == EXIT_OK
    record = _last_json(capsys.readouterr().out)
    assert record['p_value'] == pytest.approx(1.0)
    assert record['B'] == 99


def test_hom_from_group_column(csv_file, rng, capsys):
    rows = ['g,x'] + [f"a,{v}" for v in rng.standard_normal(15)] + [f"b,{v + 3}" for v in rng.standard_normal(15)]
    path = csv_file('\n'.join(rows) + '\n')
    assert main(['hom', str(path), '--group', 'g', '--median', '-B', '49', '--jobs', '1']) == EXIT_OK
    record = _last_json(capsys.readouterr().out)
    assert record['nu_source'] == 'median'
    assert record['p_value'] == pytest.approx(0.02)


def test_ind_constant_block_on_fixed_nu(csv_file, rng, capsys):
    rows = ['a,b'] + [f"{v},1.0" for v in rng.standard_normal(12)]
    path = csv_file('\n'.join(rows) + '\n')
    assert main(['ind', str(path), '--blocks', '1,1', '--nu', '1.0', '-B', '19', '--jobs', '1']) == EXIT_OK
    assert _last_json(capsys.readouterr().out)['p_value'] == pytest.approx(1.0)


def test_ind_constant_data_on_median_path(csv_file):
    path = csv_file("a,b\n" + "1,2\n" * 12)
    assert main(['ind', str(path), '--blocks', '1,1', '--median', '--jobs', '1']) == EXIT_DATA_ERROR


def test_ind_without_blocks_is_a_config_error(csv_file):
    path = csv_file("a,b\n1,2\n3,4\n5,6\n7,8\n")
    assert main(['ind', str(path), '--nu', '1']) == EXIT_INVALID_CONFIG


def test_non_numeric_cell_is_a_data_error(csv_file):
    path = csv_file("x\n1\n2\nthree\n4\n")
    assert main(['gof', str(path), '--nu', '1']) == EXIT_DATA_ERROR


def test_missing_file_is_a_data_error(tmp_path):
    assert main(['gof', str(tmp_path / 'absent.csv'), '--nu', '1']) == EXIT_DATA_ERROR


def test_report_cannot_be_svg(csv_file):
    path = _column(csv_file, 'x.csv', np.linspace(-1, 1, 10))
    assert main(['gof', str(path), '--nu', '1', '--format', 'svg']) == EXIT_INVALID_CONFIG


def test_unknown_flag_exits_with_usage_error():
    with pytest.raises(SystemExit) as info:
        main(['gof', '--no-such-flag'])
    assert info.value.code == 2


def test_gof_monte_carlo_appends_json(csv_file, rng, tmp_path):
    path = _column(csv_file, 'x.csv', rng.standard_normal(30))
    out = tmp_path / 'reports' / 'gof.jsonl'
    args = ['gof', str(path), '--smoothness', '2', '--calibration', 'mc', '-B', '19', '--out', str(out), '--jobs', '1']
    assert main(args) == EXIT_OK
    assert main(args) == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])['calibration'] == 'monte-carlo'
    assert lines[0] == lines[1]


def test_adaptive_with_explicit_grid(csv_file, rng, capsys):
    x = rng.standard_normal(20)
    rows = ['a,b'] + [f"{u},{u + 0.01 * v}" for u, v in zip(x, rng.standard_normal(20))]
    path = csv_file('\n'.join(rows) + '\n')
    args = ['adaptive', 'ind', str(path), '--blocks', '1,1', '--nu-grid', '1:4:3', '-B', '19', '--jobs', '1']
    assert main(args) == EXIT_OK
    record = _last_json(capsys.readouterr().out)
    assert len(record['per_nu']) == 3
    assert record['p_value'] == pytest.approx(0.05)


def test_bench_writes_csv(tmp_path):
    out = tmp_path / 'exp1'
    args = ['bench', 'I', '--median', '--log-nu', '0', '--reps', '2', '--n', '10', '-B', '9', '--jobs', '1', '--out', str(out)]
    assert main(args) == EXIT_OK
    text = (tmp_path / 'exp1.csv').read_text().splitlines()
    assert text[0] == 'method,param,power,se,reps'
    assert len(text) == 3


def test_bench_without_methods_is_a_config_error():
    assert main(['bench', 'II', '--reps', '1']) == EXIT_INVALID_CONFIG


def test_dag_ranking(csv_file, rng, capsys):
    x = rng.uniform(-2, 2, 40)
    rows = ['x,y'] + [f"{u},{u ** 3 - u + 0.4 * e}" for u, e in zip(x, rng.standard_normal(40))]
    path = csv_file('\n'.join(rows) + '\n')
    assert main(['dag', str(path), '--median', '-B', '9', '--jobs', '1']) == EXIT_OK
    assert 'rank' in capsys.readouterr().out


def test_adaptive_grid_default_keeps_the_unwidened_range(csv_file, rng, capsys):
    # 4 columns, n=16: n^(2/d) = 4, below the rescaled upper end of 20
    rows = ['a,b,c,e'] + [','.join(f"{v:.6f}" for v in row) for row in rng.standard_normal((16, 4))]
    path = csv_file('\n'.join(rows) + '\n')
    base = ['adaptive', 'ind', str(path), '--blocks', '2,2', '--grid-points', '3', '-B', '9', '--jobs', '1']
    assert main(base + ['--grid-default']) == EXIT_OK
    literal = _last_json(capsys.readouterr().out)
    assert [row['nu'] for row in literal['per_nu']] == pytest.approx([1.0, 2.0, 4.0])
    assert main(base) == EXIT_OK
    widened = _last_json(capsys.readouterr().out)
    assert widened['per_nu'][-1]['nu'] == pytest.approx(20.0)


def test_report_echoes_problem_and_calibration_settings(csv_file, rng, capsys):
    a = _column(csv_file, 'a.csv', rng.standard_normal(10))
    b = _column(csv_file, 'b.csv', rng.standard_normal(12))
    assert main(['hom', str(a), str(b), '--nu', '0.5', '-B', '19', '--seed', '7', '--jobs', '1']) == EXIT_OK
    record = _last_json(capsys.readouterr().out)
    assert (record['n'], record['m'], record['d']) == (10, 12, 1)
    assert record['rescale_by_dim'] is False
    assert (record['calibration'], record['B'], record['seed'], record['alpha']) == ('permutation', 19, 7, 0.05)


def test_relative_bench_output_goes_under_results_dir(tmp_path, monkeypatch):
    monkeypatch.setenv('KTL_RESULTS_DIR', str(tmp_path / 'results'))
    args = ['bench', 'I', '--log-nu', '0', '--reps', '2', '--n', '10', '-B', '9', '--jobs', '1', '--out', 'exp1']
    assert main(args) == EXIT_OK
    assert (tmp_path / 'results' / 'exp1.csv').exists()
