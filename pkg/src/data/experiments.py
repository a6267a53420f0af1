"""
KernelTestLab - Experiment Generators
Data for the four simulation experiments (and their null counterparts) plus a
planted three-variable DAG for the structure-selection workflow
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from src.calibration.resampling import replicate_rng
from src.kernels.kernel_core import BlockLayout, SampleMatrix
from src.utils.errors import InvalidSettingError

EXPERIMENT_TAGS = ('I', 'II', 'III', 'IV')

# Experiment I alternative: 0.5 N(0,1) + 0.1 sum_mu N(mu, 0.05^2)
MIXTURE_MEANS = (-1.0, -0.5, 0.0, 0.5, 1.0)
MIXTURE_SD = 0.05
MIXTURE_WEIGHTS = (0.5,) + (0.1,) * len(MIXTURE_MEANS)


@dataclass(frozen=True)
class ExperimentSetting:
    """
    One simulation design

    Attributes:
        tag: I (two-sample, d=1), II (independence of 5 coordinates),
             III (two-sample, variance shift in d), IV (independence of two halves)
        n: Sample size (X sample for two-sample designs)
        m: Y sample size for I and III (defaults to n)
        d: Dimension for III and IV
        null: Draw from the null counterpart instead
    """
    tag: str
    n: int
    m: Optional[int] = None
    d: Optional[int] = None
    null: bool = False

    def __post_init__(self):
        if self.tag not in EXPERIMENT_TAGS:
            raise InvalidSettingError(f"unknown experiment '{self.tag}', expected one of {EXPERIMENT_TAGS}")
        if self.n < 4:
            raise InvalidSettingError(f"experiment {self.tag} needs n >= 4, got {self.n}")
        if self.problem == 'hom':
            m = self.n if self.m is None else self.m
            if m < 4:
                raise InvalidSettingError(f"experiment {self.tag} needs m >= 4, got {m}")
            object.__setattr__(self, 'm', m)
        elif self.m is not None:
            raise InvalidSettingError(f"experiment {self.tag} is a one-sample design; m is not used")

        if self.tag == 'I' and self.d not in (None, 1):
            raise InvalidSettingError("experiment I is one-dimensional")
        if self.tag == 'II' and self.d not in (None, 5):
            raise InvalidSettingError("experiment II has exactly 5 coordinates")
        if self.tag in ('III', 'IV'):
            if self.d is None or self.d < 1:
                raise InvalidSettingError(f"experiment {self.tag} needs a dimension d >= 1")
            if self.tag == 'IV' and self.d % 2:
                raise InvalidSettingError(f"experiment IV splits d into halves; d must be even, got {self.d}")
        object.__setattr__(self, 'd', self.dimension)

    @property
    def problem(self) -> str:
        return 'hom' if self.tag in ('I', 'III') else 'ind'

    @property
    def dimension(self) -> int:
        return {'I': 1, 'II': 5}.get(self.tag, self.d)

    @property
    def layout(self) -> Optional[BlockLayout]:
        if self.tag == 'II':
            return BlockLayout.unit(5)
        if self.tag == 'IV':
            return BlockLayout((self.d // 2, self.d // 2))
        return None

    def with_n(self, n: int) -> 'ExperimentSetting':
        """Same design at another sample size (m follows n for two-sample designs)."""
        return replace(self, n=n, m=n if self.problem == 'hom' else None)

    def as_null(self) -> 'ExperimentSetting':
        return replace(self, null=True)


@dataclass(frozen=True, eq=False)
class ExperimentSample:
    """Generated data: X and Y for two-sample designs, X and its layout otherwise."""
    setting: ExperimentSetting
    X: SampleMatrix
    Y: Optional[SampleMatrix] = None
    layout: Optional[BlockLayout] = None


def mixture_sample(size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from 0.5 N(0,1) + 0.1 sum_mu N(mu, 0.05^2)."""
    component = rng.choice(len(MIXTURE_WEIGHTS), size=size, p=MIXTURE_WEIGHTS)
    means = np.concatenate([[0.0], MIXTURE_MEANS])[component]
    sds = np.where(component == 0, 1.0, MIXTURE_SD)
    return means + sds * rng.standard_normal(size)


def variance_ratio(setting: ExperimentSetting) -> float:
    """Variance inflation of the alternative component."""
    if setting.tag == 'III':
        return 1.0 + 2.0 * setting.d ** -0.5
    if setting.tag == 'IV':
        return 1.0 + 6.0 * setting.d ** -0.6
    raise InvalidSettingError(f"experiment {setting.tag} has no variance ratio")


def _scale_mixture(size: int, d: int, ratio: float, rng: np.random.Generator) -> np.ndarray:
    inflated = rng.random(size) < 0.5
    scale = np.where(inflated, np.sqrt(ratio), 1.0)
    return scale[:, np.newaxis] * rng.standard_normal((size, d))


def experiment_sampler(setting: ExperimentSetting, seed: int, replicate: int = 0) -> ExperimentSample:
    """
    Draw one data set for a setting

    Args:
        setting: Experiment design
        seed: Master seed
        replicate: Replicate index; draws are a pure function of (seed, replicate)

    Returns:
        ExperimentSample
    """
    rng = replicate_rng(seed, replicate, stream=100 + EXPERIMENT_TAGS.index(setting.tag))
    n = setting.n

    if setting.tag == 'I':
        X = rng.standard_normal(n)
        Y = rng.standard_normal(setting.m) if setting.null else mixture_sample(setting.m, rng)
        return ExperimentSample(setting, SampleMatrix(X[:, np.newaxis]), SampleMatrix(Y[:, np.newaxis]))

    if setting.tag == 'II':
        data = rng.standard_normal((n, 5))
        if not setting.null:
            sign = np.sign(np.prod(data[:, :4], axis=1))
            sign[sign == 0] = 1.0
            data[:, 4] = np.abs(data[:, 4]) * sign
        return ExperimentSample(setting, SampleMatrix(data), layout=setting.layout)

    if setting.tag == 'III':
        X = rng.standard_normal((n, setting.d))
        ratio = 1.0 if setting.null else variance_ratio(setting)
        Y = np.sqrt(ratio) * rng.standard_normal((setting.m, setting.d))
        return ExperimentSample(setting, SampleMatrix(X), SampleMatrix(Y))

    # IV: both halves share the mixture label; the null draws each half independently
    half = setting.d // 2
    ratio = variance_ratio(setting)
    if setting.null:
        data = np.hstack([_scale_mixture(n, half, ratio, rng), _scale_mixture(n, half, ratio, rng)])
    else:
        data = _scale_mixture(n, setting.d, ratio, rng)
    return ExperimentSample(setting, SampleMatrix(data), layout=setting.layout)


def planted_dag_sample(n: int, seed: int, replicate: int = 0, noise: float = 0.3) -> np.ndarray:
    """
    Three variables with a planted DAG A -> B, A -> C, B -> C

    Nonlinear additive-noise mechanisms with Gaussian noise; column order (A, B, C).
    """
    if n < 4:
        raise InvalidSettingError(f"need n >= 4, got {n}")
    rng = replicate_rng(seed, replicate, stream=200)
    a = rng.uniform(-2.0, 2.0, n)
    b = np.tanh(1.5 * a) + 0.5 * a ** 2 + noise * rng.standard_normal(n)
    c = np.sin(1.5 * a) + 0.8 * b ** 3 / (1.0 + np.abs(b) ** 2) + noise * rng.standard_normal(n)
    return np.column_stack([a, b, c])


def two_variable_anm_sample(n: int, seed: int, replicate: int = 0, noise: float = 0.4) -> np.ndarray:
    """X -> Y with Y = X^3 - X + noise; column order (X, Y)."""
    if n < 4:
        raise InvalidSettingError(f"need n >= 4, got {n}")
    rng = replicate_rng(seed, replicate, stream=201)
    x = rng.uniform(-2.0, 2.0, n)
    y = x ** 3 - x + noise * rng.standard_normal(n)
    return np.column_stack([x, y])
