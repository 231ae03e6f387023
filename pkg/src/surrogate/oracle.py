"""Dense reference implementation on the full ``2^N x n_points`` space.

Everything here is assembled independently of the matrix-free engine:
the kinetic operator is an explicit DFT sum, the bath operators are
Kronecker products of Pauli-type matrices, and only the final basis order
is permuted to match :class:`~surrogate.bath.ConfigurationSpace`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import ConfigurationSpace
from .errors import ConfigurationError, ContractViolation
from .hamiltonian import HamiltonianSpec

MAX_DENSE_DIM = 262144
# beyond this eigh on the full matrix is impractical even if the guard allows it
MAX_DIAG_DIM = 8192

_SPLUS = np.array([[0.0, 0.0], [1.0, 0.0]])  # |1><0| in the (|0>, |1>) basis
_ID2 = np.eye(2)


@dataclass(eq=False)
class DenseInstance:
    """Full Hamiltonian with rows ordered as ``config * n_points + grid index``."""

    matrix: np.ndarray
    n_points: int
    space: ConfigurationSpace
    dr: float
    _eig: tuple | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigh(self):
        if self._eig is None:
            if self.dim > MAX_DIAG_DIM:
                raise ConfigurationError(f"dense diagonalization limited to dim {MAX_DIAG_DIM}")
            self._eig = np.linalg.eigh(self.matrix)
        return self._eig


def dense_kinetic(n_points: int, dr: float, mass: float) -> np.ndarray:
    """``T[i, l] = (1/n) sum_m exp(i k_m (x_i - x_l)) k_m^2 / 2M`` as an explicit sum."""
    k = 2.0 * np.pi * np.fft.fftfreq(n_points, d=dr)
    idx = np.arange(n_points)
    diff = idx[:, None] - idx[None, :]
    phases = np.exp(2j * np.pi * diff[..., None] * np.arange(n_points) / n_points)
    return (phases @ (k**2 / (2.0 * mass))) / n_points


def _mode_operator(op, j, n_modes):
    """``op`` acting on mode ``j`` in the natural bitmask order (mode 0 = least significant bit)."""
    out = np.ones((1, 1))
    for m in reversed(range(n_modes)):
        out = np.kron(out, op if m == j else _ID2)
    return out


def build_dense(h: HamiltonianSpec) -> DenseInstance:
    """Assemble the untruncated Hamiltonian of ``h`` as a dense matrix."""
    space = h.space
    n, npts = space.n_modes, h.grid.n_points
    if space.n_exc != n:
        raise ContractViolation("the dense reference needs an untruncated space (n_exc = n_modes)")
    if 2**n * npts > MAX_DENSE_DIM:
        raise ConfigurationError(f"2^{n} x {npts} exceeds the dense size limit {MAX_DENSE_DIM}")

    h_sys = dense_kinetic(npts, h.grid.dr, h.mass) + np.diag(h.potential)
    f = np.diag(h.coupling)
    nb = 2**n
    h_bath = np.zeros((nb, nb))
    v_bath = np.zeros((nb, nb))
    h_int = np.zeros((nb, nb))
    sp_ops = [_mode_operator(_SPLUS, j, n) for j in range(n)]
    for j in range(n):
        s = sp_ops[j]
        h_bath += h.bath.omega[j] * (s @ s.T)
        v_bath += h.bath.lam[j] * (s + s.T)
    for j in range(n - 1):
        hop = sp_ops[j] @ sp_ops[j + 1].T
        h_int += h.bath.kappa * (hop + hop.T)

    full = (np.kron(np.eye(nb), h_sys) + np.kron(h_bath + h_int, np.eye(npts))
            - np.kron(v_bath, f))
    # natural order is the mask value; reorder to the engine's popcount-major order
    perm = np.asarray(space.masks, dtype=np.int64)
    rows = (perm[:, None] * npts + np.arange(npts)).ravel()
    full = full[np.ix_(rows, rows)]
    return DenseInstance(full, npts, space, h.grid.dr)


def exact_propagate(inst: DenseInstance, psi0, t: float) -> np.ndarray:
    """``U exp(-i L t) U^+ psi0`` for amplitudes of shape ``(dim_config, n_points)``."""
    psi0 = np.asarray(psi0, dtype=complex)
    w, u = inst.eigh()
    c = u.conj().T @ psi0.ravel()
    return (u @ (np.exp(-1j * w * t) * c)).reshape(psi0.shape)


def exact_ground_state(inst: DenseInstance):
    """Lowest eigenvalue and its eigenvector as normalized amplitudes ``(dim_config, n_points)``."""
    w, u = inst.eigh()
    v = u[:, 0].reshape(inst.space.dim, inst.n_points) / np.sqrt(inst.dr)
    return float(w[0]), v


def dense_system_density(amps, dr) -> np.ndarray:
    """Partial trace over the bath computed element by element."""
    amps = np.asarray(amps)
    nc, npts = amps.shape
    rho = np.zeros((npts, npts), dtype=complex)
    for c in range(nc):
        rho += np.outer(amps[c], amps[c].conj())
    return rho * dr


def dense_two_mode_density(amps, dr, space: ConfigurationSpace, i: int, j: int) -> np.ndarray:
    """Two-mode density from an untruncated state by reshaping to a tensor of qubits."""
    if space.n_exc != space.n_modes:
        raise ContractViolation("dense two-mode density needs an untruncated space")
    n = space.n_modes
    amps = np.asarray(amps)
    full = np.zeros((2**n, amps.shape[1]), dtype=complex)
    full[np.asarray(space.masks, dtype=np.int64)] = amps
    # axis m of the tensor is bit (n-1-m)
    t = full.reshape((2,) * n + (amps.shape[1],))
    ai, aj = n - 1 - i, n - 1 - j
    t = np.moveaxis(t, (ai, aj), (0, 1)).reshape(4, -1)
    return t @ t.conj().T * dr
