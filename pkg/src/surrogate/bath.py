"""Ohmic spin bath discretization and the truncated configuration space.

A bath configuration is a bitmask: bit ``j`` set means mode ``j`` is
excited. Configurations with at most ``n_exc`` excitations are indexed
popcount-major, then by ascending mask value. Checkpoints and the dense
reference rely on this ordering.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np

from .errors import ConfigurationError

MAX_MODES = 63

SAMPLING_OFFSETS = {"edge": 0.0, "center": 0.5}

# lambda_j^2 = J(w_j) dw / NORMALIZATIONS[name]
NORMALIZATIONS = {"density": 1.0, "t1": np.pi}


@dataclass(frozen=True, eq=False)
class BathSpec:
    n_modes: int
    omega_cutoff: float
    gamma: float
    mass_M: float
    kappa: float
    omega: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    sampling: str = "edge"
    normalization: str = "density"

    @property
    def delta_omega(self) -> float:
        return self.omega_cutoff / self.n_modes

    def spectral_density(self, w):
        """Ohmic ``J(w) = M gamma w``, zero above the cutoff."""
        w = np.asarray(w, dtype=float)
        return np.where(w <= self.omega_cutoff, self.mass_M * self.gamma * w, 0.0)

    def recurrence_time(self) -> float:
        return 2.0 * np.pi * self.n_modes / self.omega_cutoff

    def with_kappa(self, kappa: float) -> "BathSpec":
        return sample_ohmic_bath(self.n_modes, self.omega_cutoff, self.gamma, self.mass_M, kappa,
                                 self.sampling, self.normalization)


def sample_ohmic_bath(n_modes, omega_cutoff, gamma, mass, kappa=0.0, sampling="edge",
                      normalization="density") -> BathSpec:
    """Equally spaced spin modes with couplings ``lambda_j^2 = J(w_j) dw``.

    With ``sampling="edge"`` the frequencies are ``j*dw`` for ``j = 1..N``,
    so the top mode sits at the cutoff; ``"center"`` uses ``(j - 1/2)*dw``.
    """
    n_modes = int(n_modes)
    if n_modes <= 0:
        raise ConfigurationError("bath needs at least one mode")
    if n_modes > MAX_MODES:
        raise ConfigurationError(f"at most {MAX_MODES} modes fit a machine word")
    if omega_cutoff <= 0 or gamma <= 0 or mass <= 0:
        raise ConfigurationError("omega_cutoff, gamma and mass must be positive")
    if kappa < 0:
        raise ConfigurationError("kappa must be non-negative")
    if sampling not in SAMPLING_OFFSETS:
        raise ConfigurationError(f"unknown sampling {sampling!r}")
    dw = omega_cutoff / n_modes
    omega = dw * (np.arange(1, n_modes + 1) - SAMPLING_OFFSETS[sampling])
    if normalization not in NORMALIZATIONS:
        raise ConfigurationError(f"unknown normalization {normalization!r}")
    lam = np.sqrt(mass * gamma * omega * dw / NORMALIZATIONS[normalization])
    omega.setflags(write=False)
    lam.setflags(write=False)
    return BathSpec(n_modes, float(omega_cutoff), float(gamma), float(mass), float(kappa),
                    omega, lam, sampling, normalization)


def popcount(masks):
    return np.bitwise_count(np.asarray(masks, dtype=np.uint64)).astype(np.int64)


class ConfigurationSpace:
    """Bijection between indices ``[0, dim)`` and masks with popcount <= n_exc."""

    def __init__(self, n_modes: int, n_exc: int):
        if not 0 <= n_exc <= n_modes <= MAX_MODES:
            raise ConfigurationError(f"need 0 <= n_exc <= n_modes <= {MAX_MODES}, got n_exc={n_exc}, n_modes={n_modes}")
        self.n_modes = int(n_modes)
        self.n_exc = int(n_exc)
        blocks = []
        for k in range(n_exc + 1):
            block = np.fromiter(
                (sum(1 << b for b in c) for c in combinations(range(n_modes), k)),
                dtype=np.uint64,
                count=comb(n_modes, k),
            )
            blocks.append(np.sort(block))
        self._blocks = blocks
        self.offsets = np.cumsum([0] + [len(b) for b in blocks])
        self.masks = np.concatenate(blocks)
        self.masks.setflags(write=False)
        self.popcounts = popcount(self.masks)
        self.popcounts.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.offsets[-1])

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"ConfigurationSpace(n_modes={self.n_modes}, n_exc={self.n_exc}, dim={self.dim})"

    def admissible(self, masks):
        masks = np.asarray(masks, dtype=np.uint64)
        ok = popcount(masks) <= self.n_exc
        if self.n_modes < 64:
            ok &= masks < np.uint64(1 << self.n_modes)
        return ok

    def rank(self, masks):
        """Index of each mask; -1 for masks outside the truncated space."""
        scalar = np.ndim(masks) == 0
        masks = np.atleast_1d(np.asarray(masks, dtype=np.uint64))
        out = np.full(masks.shape, -1, dtype=np.int64)
        pcs = popcount(masks)
        ok = self.admissible(masks)
        for k in np.unique(pcs[ok]):
            sel = ok & (pcs == k)
            out[sel] = self.offsets[k] + np.searchsorted(self._blocks[k], masks[sel])
        return int(out[0]) if scalar else out

    def unrank(self, index):
        return self.masks[index]

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """``table[c, j]`` is the index reached by flipping mode ``j`` of ``c`` (-1 if truncated)."""
        table = np.empty((self.dim, self.n_modes), dtype=np.int64)
        for j in range(self.n_modes):
            table[:, j] = self.rank(self.masks ^ np.uint64(1 << j))
        table.setflags(write=False)
        return table

    @cached_property
    def occupation(self) -> np.ndarray:
        """Boolean ``(dim, n_modes)`` matrix of excited modes per configuration."""
        bits = (self.masks[:, None] >> np.arange(self.n_modes, dtype=np.uint64)) & np.uint64(1)
        occ = bits.astype(bool)
        occ.setflags(write=False)
        return occ


def build_configuration_space(n_modes: int, n_exc: int) -> ConfigurationSpace:
    return ConfigurationSpace(n_modes, n_exc)


def neighbors_under_flip(space: ConfigurationSpace, index: int, mode: int):
    """Index of ``index`` with ``mode`` toggled, or None at the truncation boundary."""
    if not 0 <= mode < space.n_modes:
        raise ConfigurationError(f"mode {mode} out of range")
    j = int(space.neighbor_table[index, mode])
    return None if j < 0 else j
