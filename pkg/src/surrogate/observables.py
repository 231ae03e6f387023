"""Reduced system density, bath populations, coherence norm and trajectory output."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .grid import SpatialGrid, displaced_gaussian
from .hamiltonian import SpinorState

TRAJECTORY_SCHEMA = "surrogate-trajectory v1"


@dataclass(frozen=True, eq=False)
class ReducedDensityMatrix:
    """``rho[i, k] = rho_S(R_i, R_k) dr``, so the plain matrix trace is 1."""

    rho: np.ndarray
    grid: SpatialGrid

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def purity(self) -> float:
        return float(np.vdot(self.rho, self.rho).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)

    def check(self, atol=1e-8):
        if np.max(np.abs(self.rho - self.rho.conj().T)) > 1e-10:
            raise ContractViolation("reduced density matrix is not Hermitian")
        if abs(self.trace() - 1.0) > atol:
            raise ContractViolation(f"reduced density matrix has trace {self.trace()}")
        if self.eigenvalues().min() < -atol:
            raise ContractViolation("reduced density matrix is not positive")


def reduce_system_density(psi: SpinorState) -> ReducedDensityMatrix:
    amps = psi.amplitudes
    return ReducedDensityMatrix(amps.T @ amps.conj() * psi.grid.dr, psi.grid)


def bath_populations(psi: SpinorState) -> np.ndarray:
    """``<s_j^+ s_j>`` for every mode."""
    return psi.space.occupation.T.astype(float) @ psi.config_weights()


def excitation_distribution(psi: SpinorState) -> np.ndarray:
    """Total weight in each excitation sector (popcount 0, 1, ..., n_exc)."""
    w = psi.config_weights()
    return np.bincount(psi.space.popcounts, weights=w, minlength=psi.space.n_exc + 1)


@dataclass(frozen=True)
class CatStateBasis:
    """Two coherent states of a harmonic well at ``(+-delta/2, p0)``.

    The components follow the free harmonic motion, so ``components(grid, t)``
    gives the basis co-moving with an undamped cat state.
    """

    omega0: float
    mass: float
    delta: float
    p0: float = 0.0

    @property
    def r0(self) -> float:
        return 0.5 * self.delta

    @property
    def width(self) -> float:
        """Standard deviation of each component's density, ``sqrt(1/(2 M w0))``."""
        return np.sqrt(1.0 / (2.0 * self.mass * self.omega0))

    def predicted_rate(self, gamma: float) -> float:
        """Markovian zero-temperature decay rate ``gamma M w0 delta^2 / 2``."""
        return gamma * self.mass * self.omega0 * self.delta**2 / 2.0

    def phase_point(self, sign: int, t: float = 0.0):
        mw = self.mass * self.omega0
        c, s = np.cos(self.omega0 * t), np.sin(self.omega0 * t)
        x0 = sign * self.r0
        return x0 * c + self.p0 / mw * s, self.p0 * c - mw * x0 * s

    def components(self, grid: SpatialGrid, t: float = 0.0):
        amp_width = np.sqrt(2.0) * self.width
        out = []
        for sign in (+1, -1):
            x, p = self.phase_point(sign, t)
            out.append(displaced_gaussian(grid, x, amp_width, p))
        return out

    def overlap(self, grid: SpatialGrid, t: float = 0.0) -> complex:
        a, b = self.components(grid, t)
        return complex(np.vdot(a, b) * grid.dr)

    def state(self, grid: SpatialGrid, t: float = 0.0) -> np.ndarray:
        """Balanced, normalized cat ``(a + b)/N``."""
        a, b = self.components(grid, t)
        psi = a + b
        return psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dr)

    def orthonormal_basis(self, grid: SpatialGrid, t: float = 0.0) -> np.ndarray:
        """Symmetrically (Loewdin) orthogonalized components as unit vectors, shape (2, n)."""
        a, b = self.components(grid, t)
        u = np.vstack([a, b]) * np.sqrt(grid.dr)
        s = u.conj() @ u.T
        if abs(s[0, 1]) > 0.5:
            raise ConfigurationError(f"cat components overlap by {abs(s[0, 1]):.3f}; basis is ill-conditioned")
        w, v = np.linalg.eigh(s)
        s_inv_half = v @ np.diag(w**-0.5) @ v.conj().T
        return s_inv_half.T @ u


def coherence_norm(rho: ReducedDensityMatrix, basis: CatStateBasis, t: float = 0.0) -> float:
    """``tr(rho_coh rho_coh^+)`` for the off-diagonal block in the cat basis."""
    e = basis.orthonormal_basis(rho.grid, t)
    block = e.conj() @ rho.rho @ e.T
    return float(abs(block[0, 1]) ** 2 + abs(block[1, 0]) ** 2)


def pointer_decomposition(rho: ReducedDensityMatrix, rho_eq: ReducedDensityMatrix):
    """Split ``rho = rho_coh + C^2 rho_eq``; returns ``(C^2, tr rho_coh^2)``."""
    eq2 = np.vdot(rho_eq.rho, rho_eq.rho).real
    if eq2 < 1e-14:
        raise ContractViolation("reference density has vanishing purity")
    c2 = float(np.vdot(rho_eq.rho, rho.rho).real / eq2)
    coh = rho.rho - c2 * rho_eq.rho
    return c2, float(np.vdot(coh, coh).real)


@dataclass
class TrajectoryRecord:
    time_fs: float
    mean_R: float
    E_bare: float
    E_eff: float
    norm: float
    populations: np.ndarray = field(repr=False)
    n_coh: Optional[float] = None
    C2: Optional[float] = None
    tr_rho_coh2: Optional[float] = None

    def row(self, coherence: bool):
        vals = [self.time_fs, self.mean_R, self.E_bare, self.E_eff, self.norm, *self.populations]
        if coherence:
            vals += [self.n_coh, self.C2, self.tr_rho_coh2]
        return vals


def trajectory_columns(n_modes: int, coherence: bool = False):
    cols = ["time_fs", "mean_R_au", "E_bare_au", "E_eff_au", "norm"]
    cols += [f"pop_{j}" for j in range(n_modes)]
    if coherence:
        cols += ["n_coh", "C2", "tr_rho_coh2"]
    return cols


class TrajectoryWriter:
    """Streams trajectory rows to CSV, flushing after every row."""

    def __init__(self, path, n_modes: int, coherence: bool = False):
        self.coherence = coherence
        self._fh = open(path, "w", newline="")
        self._fh.write(f"# {TRAJECTORY_SCHEMA}\n")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(trajectory_columns(n_modes, coherence))

    def write(self, rec: TrajectoryRecord):
        self._writer.writerow([_fmt(v) for v in rec.row(self.coherence)])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _fmt(v):
    return "" if v is None else repr(float(v))


def read_csv(path):
    """Load a CSV written by this package into ``(schema, columns, data)``."""
    with open(path) as fh:
        schema = fh.readline().lstrip("#").strip()
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[float(x) if x else np.nan for x in r] for r in reader]
    return schema, columns, np.array(rows, dtype=float).reshape(-1, len(columns))
