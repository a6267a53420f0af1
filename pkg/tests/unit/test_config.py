"""
Unit tests for the configuration loader
"""

from src.config.config_loader import ConfigLoader, config


def test_project_yaml_defaults():
    assert config.alpha == 0.05
    assert config.grid_points == 20
    assert config.rescaled_grid_upper == 20.0
    assert config.dag_max_nodes == 4
    assert config.experiment_defaults('III')['d'] == 1000
    assert config.fixed_log_nu('I')[0] == -1.0


def test_missing_yaml_falls_back_to_builtins(tmp_path):
    loader = ConfigLoader(project_root=str(tmp_path))
    assert loader.yaml_config == {}
    assert loader.permutations == 100
    assert loader.rescaled_grid_upper == 20.0
    assert loader.experiment_defaults('I') == {}
    assert loader.get_yaml('testing', 'alpha', default=0.1) == 0.1


def test_yaml_values_are_read(tmp_path):
    (tmp_path / 'global_config.yaml').write_text("testing:\n  alpha: 0.01\n  permutations: 500\n")
    loader = ConfigLoader(project_root=str(tmp_path))
    assert loader.alpha == 0.01
    assert loader.permutations == 500


def test_environment_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv('KTL_SEED', '7')
    monkeypatch.setenv('KTL_PARALLEL_JOBS', '3')
    loader = ConfigLoader(project_root=str(tmp_path))
    assert loader.seed == 7
    assert loader.parallel_jobs == 3
