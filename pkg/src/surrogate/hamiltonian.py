"""Matrix-free Surrogate Hamiltonian acting on truncated spinors.

``H = H_S + H_B + H_SB + H_int`` with

* ``H_S = P^2/2M + V(R)`` applied per configuration (FFT kinetic term),
* ``H_B = sum_j w_j s_j^+ s_j`` diagonal in the configuration index,
* ``H_SB = -f(R) sum_j lambda_j (s_j^+ + s_j)`` linking configurations
  that differ in one bit; flips leaving the truncated space are dropped,
* ``H_int = kappa sum_j (s_j^+ s_{j+1} + h.c.)`` hopping between
  neighbouring modes, which conserves the excitation number.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft
import scipy.sparse as sp

from .bath import BathSpec, ConfigurationSpace
from .errors import ContractViolation
from .grid import (
    MorseParams,
    SpatialGrid,
    coupling_profile,
    harmonic_potential,
    kinetic_diagonal,
    morse_potential,
)


@dataclass(eq=False)
class SpinorState:
    """System-bath wavefunction, one grid function per bath configuration."""

    amplitudes: np.ndarray
    grid: SpatialGrid
    space: ConfigurationSpace

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.space.dim, self.grid.n_points):
            raise ContractViolation(
                f"amplitudes have shape {self.amplitudes.shape}, "
                f"expected {(self.space.dim, self.grid.n_points)}"
            )

    @classmethod
    def product(cls, phi, grid, space, config=0):
        """``phi`` times a single bath configuration (vacuum by default)."""
        amps = np.zeros((space.dim, grid.n_points), dtype=complex)
        amps[config] = phi
        return cls(amps, grid, space)

    def replace(self, amplitudes) -> "SpinorState":
        return SpinorState(amplitudes, self.grid, self.space)

    def copy(self) -> "SpinorState":
        return self.replace(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dr))

    def normalized(self) -> "SpinorState":
        return self.replace(self.amplitudes / self.norm())

    def inner(self, other: "SpinorState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes) * self.grid.dr)

    def config_weights(self) -> np.ndarray:
        """``||psi_c||^2`` for every configuration."""
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1) * self.grid.dr


class HamiltonianSpec:
    """Cached pieces of the total Hamiltonian for one grid, bath and truncation.

    ``potential`` and ``coupling`` are the system potential ``V(R)`` and the
    coupling profile ``f(R)`` sampled on the grid. Use :func:`morse_hamiltonian`
    or :func:`harmonic_hamiltonian` to build one.
    """

    def __init__(self, grid: SpatialGrid, mass: float, potential, coupling,
                 bath: BathSpec, space: ConfigurationSpace, workers: int | None = None):
        if bath.n_modes != space.n_modes:
            raise ContractViolation("bath and configuration space disagree on the mode count")
        self.grid = grid
        self.mass = float(mass)
        self.potential = np.asarray(potential, dtype=float)
        self.coupling = np.asarray(coupling, dtype=float)
        self.bath = bath
        self.space = space
        self.workers = workers
        self.kinetic = kinetic_diagonal(grid, mass)
        occ = space.occupation
        self.bath_energy = occ.astype(float) @ bath.omega
        self.diagonal = self.potential[None, :] + self.bath_energy[:, None]
        self.coupling_matrix = _flip_matrix(space, bath.lam)
        self.interaction_matrix = _hopping_matrix(space, bath.kappa)

    @property
    def dim(self) -> int:
        return self.space.dim * self.grid.n_points

    def _check(self, amps):
        if amps.shape != (self.space.dim, self.grid.n_points):
            raise ContractViolation(f"spinor shape {amps.shape} does not match Hamiltonian")

    # raw-array kernels used by the propagators

    def _kinetic(self, amps):
        k = scipy.fft.fft(amps, axis=1, workers=self.workers)
        k *= self.kinetic
        return scipy.fft.ifft(k, axis=1, overwrite_x=True, workers=self.workers)

    def apply_system(self, amps):
        return self._kinetic(amps) + self.potential * amps

    def apply_bath(self, amps):
        return self.bath_energy[:, None] * amps

    def apply_coupling(self, amps):
        return -self.coupling * (self.coupling_matrix @ amps)

    def apply_interaction(self, amps):
        if self.interaction_matrix is None:
            return np.zeros_like(amps)
        return self.interaction_matrix @ amps

    def apply(self, amps):
        self._check(amps)
        out = self._kinetic(amps)
        out += self.diagonal * amps
        out -= self.coupling * (self.coupling_matrix @ amps)
        if self.interaction_matrix is not None:
            out += self.interaction_matrix @ amps
        return out


def _flip_matrix(space: ConfigurationSpace, lam) -> sp.csr_matrix:
    table = space.neighbor_table
    rows, modes = np.nonzero(table >= 0)
    cols = table[rows, modes]
    return sp.csr_matrix((np.asarray(lam)[modes], (rows, cols)), shape=(space.dim, space.dim))


def _hopping_matrix(space: ConfigurationSpace, kappa):
    if kappa == 0 or space.n_modes < 2:
        return None
    rows, cols = [], []
    masks = space.masks
    for j in range(space.n_modes - 1):
        lo = (masks >> np.uint64(j)) & np.uint64(1)
        hi = (masks >> np.uint64(j + 1)) & np.uint64(1)
        src = np.nonzero(lo != hi)[0]
        dst = space.rank(masks[src] ^ np.uint64(3 << j))
        rows.append(dst)
        cols.append(src)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return sp.csr_matrix((np.full(rows.shape, float(kappa)), (rows, cols)), shape=(space.dim, space.dim))


def morse_hamiltonian(grid: SpatialGrid, morse: MorseParams, bath: BathSpec,
                      space: ConfigurationSpace, workers=None) -> HamiltonianSpec:
    return HamiltonianSpec(grid, morse.mass_M, morse_potential(grid, morse),
                           coupling_profile(grid, morse.alpha), bath, space, workers)


def harmonic_hamiltonian(grid: SpatialGrid, mass: float, omega0: float, bath: BathSpec,
                         space: ConfigurationSpace, workers=None) -> HamiltonianSpec:
    """Harmonic well with linear coupling ``f(R) = R``, used for cat states."""
    return HamiltonianSpec(grid, mass, harmonic_potential(grid, mass, omega0),
                           coupling_profile(grid, 0.0), bath, space, workers)


def apply_hamiltonian(h: HamiltonianSpec, psi: SpinorState) -> SpinorState:
    if psi.space is not h.space and psi.space.dim != h.space.dim:
        raise ContractViolation("spinor and Hamiltonian use different configuration spaces")
    return psi.replace(h.apply(psi.amplitudes))


def apply_bath_interaction(h: HamiltonianSpec, psi: SpinorState) -> SpinorState:
    """``H_int psi`` alone."""
    h._check(psi.amplitudes)
    return psi.replace(h.apply_interaction(psi.amplitudes))


class SpectrumShift(NamedTuple):
    frequencies: np.ndarray
    max_relative_shift: float


def bath_spectrum_shift(b: BathSpec) -> SpectrumShift:
    """Single-excitation eigenfrequencies of ``H_B + H_int``.

    The one-excitation block is ``diag(w_j)`` with ``kappa`` on the first
    off-diagonals. The relative shift is ``max_j |w~_j - w_j| / w_j`` with
    both lists sorted ascending.
    """
    shifted = _tridiagonal_eigenvalues(b.omega, b.kappa)
    rel = np.abs(shifted - b.omega) / b.omega
    return SpectrumShift(shifted, float(rel.max()))


def _tridiagonal_eigenvalues(diag, off):
    from scipy.linalg import eigvalsh_tridiagonal

    diag = np.asarray(diag, dtype=float)
    if len(diag) == 1:
        return diag.copy()
    return eigvalsh_tridiagonal(diag, np.full(len(diag) - 1, float(off)))


class EnergyParts(NamedTuple):
    system: float
    bath: float
    coupling: float
    interaction: float

    @property
    def total(self) -> float:
        return self.system + self.bath + self.coupling + self.interaction

    @property
    def effective_system(self) -> float:
        """``<H_S> + <H_SB>/2``."""
        return self.system + 0.5 * self.coupling


def expectation_parts(h: HamiltonianSpec, psi: SpinorState, check_norm: bool = True) -> EnergyParts:
    amps = psi.amplitudes
    h._check(amps)
    dr = h.grid.dr
    if check_norm:
        n2 = np.sum(np.abs(amps) ** 2) * dr
        if abs(n2 - 1.0) > 1e-6:
            raise ContractViolation(f"expectation_parts needs a normalized state, norm^2 = {n2}")
    return EnergyParts(
        float(np.vdot(amps, h.apply_system(amps)).real * dr),
        float(np.vdot(amps, h.apply_bath(amps)).real * dr),
        float(np.vdot(amps, h.apply_coupling(amps)).real * dr),
        float(np.vdot(amps, h.apply_interaction(amps)).real * dr),
    )
