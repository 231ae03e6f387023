"""Spatial grid, Morse system, coupling profile and FFT kinetic energy.

Grid functions are plain complex numpy arrays of length ``grid.n_points``;
a spinor stacks them along the first axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import ConfigurationError

_EXP_LIMIT = 700.0


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    r_min: float
    r_max: float
    n_points: int
    r: np.ndarray = field(repr=False)
    k_values: np.ndarray = field(repr=False)

    @property
    def dr(self) -> float:
        return (self.r_max - self.r_min) / self.n_points

    @property
    def k_max(self) -> float:
        return np.pi / self.dr


def build_grid(r_min: float, r_max: float, n_points: int) -> SpatialGrid:
    """Uniform periodic grid ``r_i = r_min + i*dr`` with FFT-ordered momenta."""
    n_points = int(n_points)
    if n_points < 8 or n_points & (n_points - 1):
        raise ConfigurationError(f"n_points must be a power of two >= 8, got {n_points}")
    if not r_max > r_min:
        raise ConfigurationError(f"degenerate interval [{r_min}, {r_max}]")
    dr = (r_max - r_min) / n_points
    r = r_min + dr * np.arange(n_points)
    k = 2.0 * np.pi * np.fft.fftfreq(n_points, d=dr)
    r.setflags(write=False)
    k.setflags(write=False)
    return SpatialGrid(float(r_min), float(r_max), n_points, r, k)


@dataclass(frozen=True)
class MorseParams:
    well_depth_D: float = 0.018
    alpha: float = 2.0
    mass_M: float = 1.0e5

    def __post_init__(self):
        if self.well_depth_D <= 0 or self.alpha <= 0 or self.mass_M <= 0:
            raise ConfigurationError(f"Morse parameters must be positive: {self}")

    @property
    def omega_harm(self) -> float:
        return self.alpha * np.sqrt(2.0 * self.well_depth_D / self.mass_M)

    @property
    def r_tilde(self) -> float:
        """Harmonic ground-state length ``1/sqrt(M*Omega)``."""
        return 1.0 / np.sqrt(self.mass_M * self.omega_harm)

    @property
    def tau_osc(self) -> float:
        return 2.0 * np.pi / self.omega_harm

    def level(self, n: int) -> float:
        """Analytic bound-state energy of level ``n`` (zero at dissociation)."""
        om, d = self.omega_harm, self.well_depth_D
        x = n + 0.5
        return -d + om * x - om**2 * x**2 / (4.0 * d)


def morse_potential(grid: SpatialGrid, p: MorseParams) -> np.ndarray:
    if 2.0 * p.alpha * -grid.r_min > _EXP_LIMIT:
        raise ConfigurationError("r_min too negative: Morse potential overflows")
    e = np.exp(-p.alpha * grid.r)
    return p.well_depth_D * (e * e - 2.0 * e)


def harmonic_potential(grid: SpatialGrid, mass: float, omega0: float, center: float = 0.0) -> np.ndarray:
    return 0.5 * mass * omega0**2 * (grid.r - center) ** 2


def coupling_profile(grid: SpatialGrid, alpha: float) -> np.ndarray:
    """System side ``f(R) = (1 - exp(-alpha R))/alpha`` of the system-bath coupling.

    ``alpha = 0`` gives the linear limit ``f(R) = R``.
    """
    if alpha < 0:
        raise ConfigurationError("alpha must be non-negative")
    if alpha == 0:
        return grid.r.copy()
    return -np.expm1(-alpha * grid.r) / alpha


def kinetic_diagonal(grid: SpatialGrid, mass: float) -> np.ndarray:
    return grid.k_values**2 / (2.0 * mass)


def apply_kinetic(psi: np.ndarray, grid: SpatialGrid, mass: float, workers: int | None = None) -> np.ndarray:
    """Apply ``P^2/2M`` along the last axis of ``psi`` in Fourier space."""
    t = kinetic_diagonal(grid, mass)
    return scipy.fft.ifft(t * scipy.fft.fft(psi, axis=-1, workers=workers), axis=-1, workers=workers)


def normalize(psi: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    return psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dr)


def displaced_gaussian(grid: SpatialGrid, center: float, width: float, momentum: float = 0.0) -> np.ndarray:
    """Normalized ``exp(-(R-center)^2/(2 width^2) + i p R)`` on the grid.

    ``width`` is the amplitude width, so the harmonic ground state of
    frequency ``w`` has ``width = 1/sqrt(M w)``.
    """
    if width <= 0:
        raise ConfigurationError("width must be positive")
    if center - 4 * width < grid.r_min or center + 4 * width > grid.r[-1]:
        raise ConfigurationError(
            f"Gaussian at {center} with width {width} does not fit in [{grid.r_min}, {grid.r[-1]}]"
        )
    x = grid.r - center
    psi = np.exp(-0.5 * (x / width) ** 2 + 1j * momentum * x)
    return normalize(psi, grid)


def mean_position(psi: np.ndarray, grid: SpatialGrid) -> float:
    """``<R>`` of a grid function or of a whole spinor (summed over components)."""
    dens = np.abs(psi) ** 2
    if dens.ndim > 1:
        dens = dens.sum(axis=0)
    return float(np.sum(dens * grid.r) * grid.dr / (np.sum(dens) * grid.dr))
