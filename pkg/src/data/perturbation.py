"""
KernelTestLab - Bump Perturbations
Densities on [0, 1]^d made of a grid of disjoint, mean-zero smooth bumps added
to the uniform density, with known L2 separation from the uniform
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy import integrate
from scipy.fft import rfft, rfftfreq

from src.calibration.resampling import replicate_rng
from src.kernels.kernel_core import SampleMatrix
from src.utils.errors import InvalidParameterError, InvalidSpecError


# ============================================================================
# BUMP FUNCTION
# ============================================================================

def bump_phi0(t: np.ndarray) -> np.ndarray:
    """
    One-dimensional mean-zero bump on [0, 1]

    exp(-1 / (1 - (4t - 1)^2)) on (0, 1/2), -exp(-1 / (1 - (4t - 3)^2)) on (1/2, 1), 0 elsewhere.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    left = (t > 0.0) & (t < 0.5)
    right = (t > 0.5) & (t < 1.0)
    u = 4.0 * t[left] - 1.0
    out[left] = np.exp(-1.0 / (1.0 - u * u))
    u = 4.0 * t[right] - 3.0
    out[right] = -np.exp(-1.0 / (1.0 - u * u))
    return out


def bump_phi(x: np.ndarray) -> np.ndarray:
    """Tensorized bump prod_l phi0(x_l); rows of x are points in R^d."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.prod(bump_phi0(x), axis=1)


@lru_cache(maxsize=None)
def phi0_l2_norm() -> float:
    """||phi0||_{L2} by adaptive quadrature on each half."""
    def square(t):
        return float(bump_phi0(np.array([t]))[0] ** 2)

    left, _ = integrate.quad(square, 0.0, 0.5, epsabs=1e-14, epsrel=1e-12, limit=200)
    right, _ = integrate.quad(square, 0.5, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
    return float(np.sqrt(left + right))


def phi_sup_norm(d: int) -> float:
    """||phi||_inf = exp(-d), reached at the bump centres."""
    return float(np.exp(-d))


def phi_l2_norm(d: int) -> float:
    return phi0_l2_norm() ** d


@lru_cache(maxsize=None)
def phi0_spectral_moments(max_order: int, points: int = 2 ** 16, window: float = 4.0) -> Tuple[float, ...]:
    """
    int omega^(2j) |F phi0(omega)|^2 d omega for j = 0..max_order

    The bump is sampled on a zero-padded window and transformed with an FFT;
    its spectrum decays faster than any power, so the truncation is negligible.
    """
    h = window / points
    x = np.arange(points) * h
    spectrum = rfft(bump_phi0(x)) * h / np.sqrt(2.0 * np.pi)
    omega = 2.0 * np.pi * rfftfreq(points, d=h)
    power = np.abs(spectrum) ** 2
    weights = np.full(power.shape, 2.0)
    weights[0] = 1.0
    if points % 2 == 0:
        weights[-1] = 1.0
    d_omega = 2.0 * np.pi / window
    return tuple(float(np.sum(weights * omega ** (2 * j) * power) * d_omega) for j in range(max_order + 1))


def phi_sobolev_norm_sq(d: int, s: int) -> float:
    """
    ||phi||^2_{W^{s,2}} for integer s

    Expands (1 + |omega|^2)^s multinomially; every term factorizes into
    one-dimensional spectral moments of phi0.
    """
    if s < 0 or int(s) != s:
        raise InvalidParameterError(f"Sobolev order must be a non-negative integer, got {s}")
    s = int(s)
    moments = phi0_spectral_moments(s)
    total = 0.0
    for powers in itertools.product(range(s + 1), repeat=d):
        rest = s - sum(powers)
        if rest < 0:
            continue
        coef = factorial(s) / (factorial(rest) * np.prod([factorial(k) for k in powers]))
        total += coef * np.prod([moments[k] for k in powers])
    return float(total)


# ============================================================================
# PERTURBED DENSITY
# ============================================================================

@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """
    p(x) = 1 + r * sum_k a_k * (b^(d/2) / ||phi||) * phi(b x - x_k) on [0, 1]^d

    Attributes:
        d: Dimension
        b: Bumps per axis
        r: Amplitude
        signs: b^d values in {-1, +1}, cell order is C order over the cell index
        s: Nominal smoothness
        M: Nominal Sobolev radius
    """
    d: int
    b: int
    r: float
    signs: np.ndarray
    s: float = 2.0
    M: Optional[float] = None

    def __post_init__(self):
        if self.d < 1 or self.b < 1:
            raise InvalidSpecError(f"need d >= 1 and b >= 1, got d={self.d}, b={self.b}")
        if self.r < 0 or not np.isfinite(self.r):
            raise InvalidSpecError(f"amplitude must be non-negative, got {self.r}")
        signs = np.asarray(self.signs, dtype=float).ravel()
        if signs.size != self.b ** self.d:
            raise InvalidSpecError(f"need {self.b ** self.d} signs, got {signs.size}")
        if not np.all(np.isin(signs, (-1.0, 1.0))):
            raise InvalidSpecError("signs must be -1 or +1")
        if self.envelope_excess > 1.0 + 1e-12:
            raise InvalidSpecError(
                f"density would be negative: r * b^(d/2) * ||phi||_inf / ||phi|| = {self.envelope_excess:.4f} > 1"
            )
        signs.setflags(write=False)
        object.__setattr__(self, 'signs', signs)
        if self.M is not None:
            if self.M <= 0 or not float(self.s).is_integer():
                raise InvalidSpecError(f"a Sobolev radius needs M > 0 and integer s, got M={self.M}, s={self.s}")
            if self.sobolev_bound_sq() > self.M ** 2 * (1.0 + 1e-9):
                raise InvalidSpecError(
                    f"perturbation leaves the Sobolev ball: bound {self.sobolev_bound_sq() ** 0.5:.4g} > M={self.M}"
                )

    @classmethod
    def with_random_signs(cls, d: int, b: int, r: float, seed: int, s: float = 2.0, M: Optional[float] = None) -> 'PerturbationSpec':
        rng = replicate_rng(seed, 0, stream=7)
        return cls(d, b, r, rng.choice([-1.0, 1.0], size=b ** d), s, M)

    @classmethod
    def alternating(cls, d: int, b: int, r: float, s: float = 2.0, M: Optional[float] = None) -> 'PerturbationSpec':
        """Signs +1, -1, +1, ... in cell order."""
        signs = np.where(np.arange(b ** d) % 2 == 0, 1.0, -1.0)
        return cls(d, b, r, signs, s, M)

    @property
    def n_bumps(self) -> int:
        return self.b ** self.d

    @property
    def bump_scale(self) -> float:
        """b^(d/2) / ||phi||_{L2}, the normalization of each bump."""
        return self.b ** (self.d / 2.0) / phi_l2_norm(self.d)

    @property
    def envelope_excess(self) -> float:
        """r * b^(d/2) * ||phi||_inf / ||phi||_{L2}."""
        return self.r * self.bump_scale * phi_sup_norm(self.d)

    @property
    def envelope(self) -> float:
        """Upper bound of the density, used by the rejection sampler."""
        return 1.0 + self.envelope_excess

    def sobolev_bound_sq(self) -> float:
        """r^2 b^(d+2s) ||phi||^2_W / ||phi||^2, bounding ||p - 1||^2_W (integer s only)."""
        return self.r ** 2 * self.b ** (self.d + 2 * self.s) * phi_sobolev_norm_sq(self.d, int(self.s)) / phi_l2_norm(self.d) ** 2


def perturbed_density(spec: PerturbationSpec, x: np.ndarray) -> np.ndarray:
    """
    Density values at the rows of x

    Exactly one bump can be nonzero at a point, the one of the cell it falls in.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != spec.d:
        x = x.reshape(-1, spec.d)
    inside = np.all((x >= 0.0) & (x <= 1.0), axis=1)
    values = np.zeros(x.shape[0])
    if not np.any(inside):
        return values

    scaled = spec.b * x[inside]
    cells = np.clip(np.floor(scaled), 0, spec.b - 1).astype(int)
    local = scaled - cells
    flat = np.ravel_multi_index(tuple(cells.T), (spec.b,) * spec.d)
    values[inside] = 1.0 + spec.r * spec.signs[flat] * spec.bump_scale * bump_phi(local)
    return values


def l2_separation(spec: PerturbationSpec) -> float:
    """||p - 1||_{L2} = r * b^(d/2)."""
    return float(spec.r * spec.b ** (spec.d / 2.0))


def sample_perturbed(spec: PerturbationSpec, n: int, seed: int, stream: int = 0) -> SampleMatrix:
    """
    n i.i.d. draws by rejection against the uniform envelope

    Args:
        spec: Perturbation spec
        n: Sample size
        seed: Master seed
        stream: Independent stream id (replicate index in power studies)
    """
    if n < 2:
        raise InvalidParameterError(f"need at least 2 draws, got {n}")
    rng = replicate_rng(seed, stream, stream=11)
    accepted = []
    count = 0
    batch = max(64, int(1.5 * n * spec.envelope))
    while count < n:
        proposals = rng.random((batch, spec.d))
        keep = rng.random(batch) * spec.envelope <= perturbed_density(spec, proposals)
        accepted.append(proposals[keep])
        count += int(keep.sum())
    return SampleMatrix(np.vstack(accepted)[:n])


def bumps_for_separation(delta: float, d: int, s: int, M: float) -> Tuple[int, float]:
    """
    Bump count per axis and amplitude for a target separation

    b = floor((M ||phi|| / ||phi||_W)^(1/s) * delta^(-1/s)), r = delta / b^(d/2),
    the largest b keeping ||p - 1||_W <= M.

    Returns:
        (b, r)
    """
    if delta <= 0 or M <= 0:
        raise InvalidParameterError("delta and M must be positive")
    ratio = M * phi_l2_norm(d) / np.sqrt(phi_sobolev_norm_sq(d, s))
    b = int(np.floor((ratio / delta) ** (1.0 / s)))
    if b < 1:
        raise InvalidSpecError(f"separation {delta} is too large for Sobolev radius {M} (b would be {b})")
    r = delta / b ** (d / 2.0)
    logger.debug(f"delta={delta:g}, s={s}, M={M:g} -> b={b}, r={r:.4g}")
    return b, float(r)


def cell_probabilities(spec: PerturbationSpec, points: int = 2001) -> np.ndarray:
    """Probability mass of each bump cell (d = 1 only), by Simpson quadrature."""
    if spec.d != 1:
        raise InvalidParameterError("cell probabilities are only tabulated for d = 1")
    masses = []
    for k in range(spec.b):
        grid = np.linspace(k / spec.b, (k + 1) / spec.b, points)
        masses.append(integrate.simpson(perturbed_density(spec, grid[:, np.newaxis]), x=grid))
    return np.array(masses)
