"""
KernelTestLab - Gaussian Kernel Fourier Identities
Quadrature checks linking kernel energies to Fourier-weighted L2 norms (d = 1)
"""

from typing import Callable, Tuple

import numpy as np
from scipy import integrate

from src.utils.errors import InvalidParameterError

Density1D = Callable[[float], float]


def fourier_transform_1d(f: Density1D, omega: float, lo: float, hi: float) -> complex:
    """
    Unitary Fourier transform (2 pi)^(-1/2) * int f(x) exp(-i omega x) dx

    Args:
        f: Integrable function supported (numerically) on [lo, hi]
        omega: Frequency
        lo, hi: Integration window
    """
    if omega == 0.0:
        real, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
        return complex(real / np.sqrt(2.0 * np.pi))
    real, _ = integrate.quad(f, lo, hi, weight='cos', wvar=omega, epsabs=1e-13, limit=200)
    imag, _ = integrate.quad(f, lo, hi, weight='sin', wvar=omega, epsabs=1e-13, limit=200)
    return complex(real, -imag) / np.sqrt(2.0 * np.pi)


def kernel_energy_1d(f: Density1D, nu: float, lo: float, hi: float) -> float:
    """Double integral of exp(-nu (x-y)^2) f(x) f(y) over [lo, hi]^2."""
    if nu <= 0:
        raise InvalidParameterError(f"scaling parameter must be positive, got {nu}")
    value, _ = integrate.dblquad(
        lambda y, x: np.exp(-nu * (x - y) ** 2) * f(x) * f(y),
        lo, hi, lo, hi,
        epsabs=1e-12, epsrel=1e-10,
    )
    return float(value)


def fourier_energy_1d(f: Density1D, nu: float, lo: float, hi: float, omega_max: float = 40.0) -> float:
    """(pi/nu)^(1/2) * int exp(-omega^2 / (4 nu)) |F f(omega)|^2 d omega."""
    if nu <= 0:
        raise InvalidParameterError(f"scaling parameter must be positive, got {nu}")

    def integrand(omega: float) -> float:
        return np.exp(-omega ** 2 / (4.0 * nu)) * abs(fourier_transform_1d(f, omega, lo, hi)) ** 2

    value, _ = integrate.quad(integrand, -omega_max, omega_max, epsabs=1e-12, epsrel=1e-10, limit=400)
    return float(np.sqrt(np.pi / nu) * value)


def fourier_identity_check(f: Density1D, nu: float, lo: float = -12.0, hi: float = 12.0) -> Tuple[float, float]:
    """
    Both sides of the kernel/Fourier identity for a one-dimensional f

    Returns:
        (kernel energy, Fourier-side energy); equal up to quadrature error
    """
    return kernel_energy_1d(f, nu, lo, hi), fourier_energy_1d(f, nu, lo, hi)


def sobolev_norm_sq_1d(f: Density1D, s: int, lo: float, hi: float, omega_max: float = 60.0) -> float:
    """int (1 + omega^2)^s |F f(omega)|^2 d omega for integer s."""
    if s < 0 or int(s) != s:
        raise InvalidParameterError(f"Sobolev order must be a non-negative integer, got {s}")

    def integrand(omega: float) -> float:
        return (1.0 + omega ** 2) ** s * abs(fourier_transform_1d(f, omega, lo, hi)) ** 2

    value, _ = integrate.quad(integrand, -omega_max, omega_max, epsabs=1e-12, epsrel=1e-10, limit=400)
    return float(value)


def mmd_l2_lower_bound_nu(l2_norm: float, M: float, s: float) -> float:
    """
    Smallest nu guaranteeing (nu/pi)^(d/2) * int G_nu f f >= ||f||_2^2 / 4

    Args:
        l2_norm: ||f||_{L2} (> 0)
        M: Sobolev radius with ||f||_{W^{s,2}} <= M
        s: Smoothness order (> 0)
    """
    if l2_norm <= 0 or M <= 0 or s <= 0:
        raise InvalidParameterError("l2_norm, M and s must be positive")
    return (2.0 * M) ** (2.0 / s) / (4.0 * np.log(3.0)) * l2_norm ** (-2.0 / s)
