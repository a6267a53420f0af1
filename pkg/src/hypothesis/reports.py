"""
KernelTestLab - Test Reports
Result records returned by the goodness-of-fit, homogeneity, independence
and adaptive tests
"""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from src.utils.errors import InvalidParameterError


class Calibration(Enum):
    """How the null distribution of a statistic is obtained"""
    ASYMPTOTIC_NORMAL = "asymptotic-normal"
    MONTE_CARLO = "monte-carlo"
    PERMUTATION = "permutation"

    @classmethod
    def parse(cls, value: Any) -> 'Calibration':
        if isinstance(value, cls):
            return value
        aliases = {'asymptotic': cls.ASYMPTOTIC_NORMAL, 'normal': cls.ASYMPTOTIC_NORMAL, 'mc': cls.MONTE_CARLO}
        text = str(value).lower()
        if text in aliases:
            return aliases[text]
        try:
            return cls(text)
        except ValueError as exc:
            raise InvalidParameterError(f"unknown calibration '{value}'") from exc


class Estimator(Enum):
    """dHSIC estimator flavour"""
    UNBIASED = "unbiased-U"
    V_STATISTIC = "v-statistic"

    @classmethod
    def parse(cls, value: Any) -> 'Estimator':
        if isinstance(value, cls):
            return value
        text = str(value).lower()
        if text in ('u', 'unbiased', 'unbiased-u'):
            return cls.UNBIASED
        if text in ('v', 'v-statistic', 'vstat'):
            return cls.V_STATISTIC
        raise InvalidParameterError(f"unknown estimator '{value}'")


class AdaptiveMode(Enum):
    """Statistic maximized over the scaling grid"""
    SELF_NORMALIZED = "self-normalized"
    UNNORMALIZED = "unnormalized"


def _jsonable(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, 'item'):
        return value.item()
    return value


@dataclass
class TestReport:
    """Fixed-nu test outcome"""
    __test__ = False  # not a pytest class

    test: str
    gamma2_hat: float
    s_tilde2: float
    s_hat2: float
    t_stat: float
    p_value: float
    nu: float
    calibration: Calibration
    alpha: float
    n: int
    B: Optional[int] = None
    seed: Optional[int] = None
    rescaled_by_dim: bool = False
    nu_source: str = "fixed"
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def reject(self) -> bool:
        return self.p_value <= self.alpha

    def to_dict(self) -> Dict[str, Any]:
        """Flat dictionary for JSON lines / CSV"""
        record = _jsonable(asdict(self))
        extras = record.pop('extras')
        record['reject'] = self.reject
        record.update(extras)
        return record


@dataclass
class GofReport(TestReport):
    """Goodness-of-fit outcome; gamma2_v is the biased V-statistic for comparison"""
    gamma2_v: Optional[float] = None
    reference: str = ""


@dataclass
class HomReport(TestReport):
    """Two-sample outcome"""
    m: int = 0
    gamma2_v: Optional[float] = None


@dataclass
class IndReport(TestReport):
    """Joint-independence outcome"""
    estimator: Estimator = Estimator.UNBIASED
    widths: Tuple[int, ...] = ()


@dataclass
class AdaptiveReport:
    """Outcome of a max-over-grid test"""
    test: str
    t_max: float
    nu_argmax: float
    per_nu: List[Tuple[float, float]]
    p_value: float
    q_hat: float
    mode: AdaptiveMode
    calibration: Calibration
    alpha: float
    B: int
    seed: int
    n: int
    rescaled_by_dim: bool = True
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def reject(self) -> bool:
        return self.p_value <= self.alpha

    @property
    def grid(self) -> List[float]:
        return [nu for nu, _ in self.per_nu]

    def to_dict(self) -> Dict[str, Any]:
        record = _jsonable(asdict(self))
        extras = record.pop('extras')
        record['per_nu'] = [{'nu': nu, 'value': value} for nu, value in self.per_nu]
        record['reject'] = self.reject
        record.update(extras)
        return record
