"""
KernelTestLab - Configuration Loader
Loads environment variables and YAML configuration files
"""

import os
import yaml
from pathlib import Path
from typing import Any, Dict, List, Optional
from dotenv import load_dotenv
from loguru import logger


class ConfigLoader:
    """
    Central configuration management for KernelTestLab

    Loads configuration from:
    1. .env file (optional overrides: KTL_LOG_LEVEL, KTL_PARALLEL_JOBS, ...)
    2. global_config.yaml (testing and benchmark defaults)
    """

    def __init__(self, project_root: Optional[str] = None, yaml_name: str = 'global_config.yaml'):
        """
        Initialize configuration loader

        Args:
            project_root: Project root directory (auto-detected if None)
            yaml_name: Name of the YAML file under the project root
        """
        if project_root is None:
            self.project_root = Path(__file__).parent.parent.parent
        else:
            self.project_root = Path(project_root)

        env_path = self.project_root / '.env'
        if env_path.exists():
            load_dotenv(env_path)
            logger.debug(f"Loaded .env from: {env_path}")

        yaml_path = self.project_root / yaml_name
        if yaml_path.exists():
            with open(yaml_path, 'r') as f:
                self.yaml_config = yaml.safe_load(f) or {}
            logger.debug(f"Loaded YAML config from: {yaml_path}")
        else:
            logger.warning(f"YAML config not found: {yaml_path}, using built-in defaults")
            self.yaml_config = {}

    def get_env(self, key: str, default: Any = None) -> Any:
        """
        Get environment variable

        Args:
            key: Environment variable name
            default: Default value if not found

        Returns:
            Environment variable value or default
        """
        return os.getenv(key, default)

    def get_yaml(self, *keys: str, default: Any = None) -> Any:
        """
        Get nested YAML configuration value

        Args:
            *keys: Nested keys (e.g., 'testing', 'permutations')
            default: Default value if not found

        Returns:
            Configuration value or default

        Example:
            config.get_yaml('testing', 'alpha')
            config.get_yaml('benchmark', 'experiments', 'I', 'n')
        """
        value = self.yaml_config
        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default
        return value

    # ========================================================================
    # SYSTEM
    # ========================================================================

    @property
    def parallel_jobs(self) -> int:
        """Number of joblib workers for replicate fan-out"""
        env_value = self.get_env('KTL_PARALLEL_JOBS')
        if env_value is not None:
            return int(env_value)
        return int(self.get_yaml('system', 'parallel_jobs', default=1))

    @property
    def results_dir(self) -> Path:
        """Directory for CSV/SVG outputs"""
        default = self.project_root / 'results'
        results_dir = Path(self.get_env('KTL_RESULTS_DIR', self.get_yaml('system', 'results_dir', default=default)))
        return results_dir

    @property
    def log_dir(self) -> Path:
        """Directory for the optional file log sink"""
        return Path(self.get_yaml('system', 'logs_dir', default=self.project_root / 'logs'))

    # ========================================================================
    # LOGGING
    # ========================================================================

    @property
    def log_level(self) -> str:
        """Console log level"""
        return self.get_env('KTL_LOG_LEVEL', self.get_yaml('logging', 'level', default='INFO'))

    @property
    def log_format(self) -> str:
        """loguru format string"""
        return self.get_yaml(
            'logging', 'format',
            default="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"
        )

    @property
    def log_file_settings(self) -> Dict[str, Any]:
        """Rotation settings for the file sink"""
        return {
            'enabled': bool(self.get_yaml('logging', 'file_sink', default=False)),
            'rotation': self.get_yaml('logging', 'rotation', default='50 MB'),
            'retention': self.get_yaml('logging', 'retention', default='14 days'),
            'compression': self.get_yaml('logging', 'compression', default='zip'),
        }

    # ========================================================================
    # TESTING DEFAULTS
    # ========================================================================

    @property
    def alpha(self) -> float:
        """Default significance level"""
        return float(self.get_yaml('testing', 'alpha', default=0.05))

    @property
    def permutations(self) -> int:
        """Default number of permutation / Monte-Carlo replicates B"""
        return int(self.get_yaml('testing', 'permutations', default=100))

    @property
    def seed(self) -> int:
        """Default master seed"""
        env_value = self.get_env('KTL_SEED')
        if env_value is not None:
            return int(env_value)
        return int(self.get_yaml('testing', 'seed', default=20190101))

    @property
    def grid_points(self) -> int:
        """Default number of log-spaced scaling values"""
        return int(self.get_yaml('testing', 'grid_points', default=20))

    @property
    def rescaled_grid_upper(self) -> float:
        """Smallest upper end of the default grid on dimension-rescaled problems"""
        return float(self.get_yaml('testing', 'rescaled_grid_upper', default=20.0))

    @property
    def rescale_by_dim(self) -> bool:
        """Whether adaptive/median paths divide squared distances by d"""
        return bool(self.get_yaml('testing', 'rescale_by_dim', default=True))

    @property
    def reference_multiplier(self) -> int:
        """Empirical GOF reference size as a multiple of n"""
        return int(self.get_yaml('testing', 'reference_multiplier', default=10))

    @property
    def smoothness(self) -> float:
        """Nominal smoothness s for the recommended scaling helper"""
        return float(self.get_yaml('testing', 'smoothness', default=2.0))

    # ========================================================================
    # BENCHMARK
    # ========================================================================

    @property
    def benchmark_reps(self) -> int:
        """Default replicate count for power estimates"""
        return int(self.get_yaml('benchmark', 'reps', default=100))

    def experiment_defaults(self, tag: str) -> Dict[str, Any]:
        """Per-experiment parameter defaults (tag in I, II, III, IV)"""
        return dict(self.get_yaml('benchmark', 'experiments', tag, default={}) or {})

    def fixed_log_nu(self, tag: str) -> List[float]:
        """Default log-nu sweep for fixed-scaling methods"""
        return [float(v) for v in self.experiment_defaults(tag).get('log_nu', [])]

    # ========================================================================
    # DAG WORKFLOW
    # ========================================================================

    @property
    def dag_max_nodes(self) -> int:
        """Largest node count accepted for DAG enumeration"""
        return int(self.get_yaml('dag', 'max_nodes', default=4))

    @property
    def dag_min_samples(self) -> int:
        """Smallest sample size accepted for DAG selection"""
        return int(self.get_yaml('dag', 'min_samples', default=20))

    def __repr__(self) -> str:
        """String representation"""
        return f"ConfigLoader(project_root='{self.project_root}', parallel_jobs={self.parallel_jobs})"


# Global configuration instance
config = ConfigLoader()
