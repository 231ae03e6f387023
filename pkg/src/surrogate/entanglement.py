"""Entanglement between pairs of bath modes.

Two-mode density matrices use the basis ``|00>, |01>, |10>, |11>`` where
the first slot is mode ``i``, the second mode ``j`` and ``1`` means excited.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .bath import ConfigurationSpace
from .errors import ContractViolation
from .hamiltonian import SpinorState

ZERO_BAND = 1e-10
ENTANGLEMENT_SCHEMA = "surrogate-entanglement v1"
PAIR_SCHEMA = "surrogate-pairs v1"

_SYSY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


@dataclass(frozen=True, eq=False)
class TwoModeDensity:
    rho: np.ndarray

    def check(self, atol=1e-10):
        r = self.rho
        if r.shape != (4, 4):
            raise ContractViolation("two-mode density must be 4x4")
        if np.max(np.abs(r - r.conj().T)) > atol:
            raise ContractViolation("two-mode density is not Hermitian")
        if abs(np.trace(r).real - 1.0) > 1e-8:
            raise ContractViolation("two-mode density does not have unit trace")
        if np.linalg.eigvalsh(r).min() < -atol:
            raise ContractViolation("two-mode density is not positive")

    def swapped(self) -> "TwoModeDensity":
        """Same state with the two slots exchanged."""
        p = [0, 2, 1, 3]
        return TwoModeDensity(self.rho[np.ix_(p, p)])


class PairEntanglementRecord(NamedTuple):
    i: int
    j: int
    lambda0: float
    W1: float
    W2: float
    concurrence: float
    eof: float


def partial_transpose(rho):
    """Transpose the second-slot indices: ``rho^T[m mu, n nu] = rho[m nu, n mu]``.

    Works on a single 4x4 matrix or a stack ``(..., 4, 4)``.
    """
    r = np.asarray(rho).reshape(*np.shape(rho)[:-2], 2, 2, 2, 2)
    return np.swapaxes(r, -3, -1).reshape(np.shape(rho))


def _minors(pt):
    w1 = pt[..., 0, 0] * pt[..., 3, 3] - pt[..., 0, 3] * pt[..., 3, 0]
    w2 = pt[..., 1, 1] * pt[..., 2, 2] - pt[..., 1, 2] * pt[..., 2, 1]
    return w1.real, w2.real


def partial_transpose_diagnostics(rho):
    """``(lambda_0, W_1, W_2)``: lowest eigenvalue of the partial transpose and the two 2x2 minors.

    A negative ``W`` certifies entanglement; ``lambda_0 < 0`` decides it.
    """
    r = rho.rho if isinstance(rho, TwoModeDensity) else np.asarray(rho)
    pt = partial_transpose(r)
    lam0 = np.linalg.eigvalsh(pt)[..., 0]
    w1, w2 = _minors(pt)
    if np.ndim(lam0) == 0:
        return float(lam0), float(w1), float(w2)
    return lam0, w1, w2


def _psd_sqrt(r):
    w, v = np.linalg.eigh(r)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def binary_entropy(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    return np.nan_to_num(h, nan=0.0)


def concurrence_and_eof(rho):
    """Wootters concurrence and entanglement of formation.

    The square roots of the eigenvalues of ``rho rho~`` are taken from the
    Hermitian form ``sqrt(rho) rho~ sqrt(rho)``, which has the same spectrum.
    """
    r = rho.rho if isinstance(rho, TwoModeDensity) else np.asarray(rho)
    flipped = _SYSY @ r.conj() @ _SYSY
    s = _psd_sqrt(r)
    ev = np.linalg.eigvalsh(s @ flipped @ s)
    lam = np.sqrt(np.clip(ev, 0.0, None))[..., ::-1]
    c = np.clip(lam[..., 0] - lam[..., 1] - lam[..., 2] - lam[..., 3], 0.0, 1.0)
    e = binary_entropy(0.5 * (1.0 + np.sqrt(1.0 - c**2)))
    if np.ndim(c) == 0:
        return float(c), float(e)
    return c, e


def classify_entangled(lambda0):
    return np.asarray(lambda0) < -ZERO_BAND


# ---------------------------------------------------------------------------
# two-mode reduced densities from a truncated spinor


def two_mode_rdm(psi: SpinorState, i: int, j: int) -> TwoModeDensity:
    """Reduced density of modes ``i`` and ``j`` (trace over the grid and all other modes)."""
    n = psi.space.n_modes
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ContractViolation(f"need two distinct modes in [0, {n}), got ({i}, {j})")
    if i < j:
        return TwoModeDensity(all_pair_rdms(psi)[_pair_index(n, i, j)])
    return TwoModeDensity(all_pair_rdms(psi)[_pair_index(n, j, i)]).swapped()


def _pair_index(n, i, j):
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def mode_pairs(n_modes: int):
    return np.triu_indices(n_modes, k=1)


@lru_cache(maxsize=8)
def _double_flip_lists(space: ConfigurationSpace):
    """Index lists for the coherences that flip both modes of a pair.

    ``up`` holds ``(i, j, c, c')`` with ``c`` = ``c'`` plus modes i and j
    (the ``|11><00|`` element); ``swap`` holds ``c`` with i set and j clear
    and ``c'`` with i clear and j set (the ``|10><01|`` element).
    """
    table = space.neighbor_table
    occ = space.occupation
    n = space.n_modes
    up, swap = [], []
    for i in range(n):
        cs = np.nonzero(occ[:, i])[0]
        if len(cs) == 0:
            continue
        mid = table[cs, i]
        dst = table[mid]  # (len(cs), n)
        for j in range(n):
            if j == i:
                continue
            d = dst[:, j]
            ok = d >= 0
            set_j = occ[cs, j]
            if j > i:
                sel = ok & set_j
                up.append(np.stack([np.full(sel.sum(), i), np.full(sel.sum(), j), cs[sel], d[sel]]))
            sel = ok & ~set_j
            swap.append(np.stack([np.full(sel.sum(), i), np.full(sel.sum(), j), cs[sel], d[sel]]))
    empty = np.zeros((4, 0), dtype=np.int64)
    up = np.concatenate(up, axis=1) if up else empty
    swap = np.concatenate(swap, axis=1) if swap else empty
    return up, swap


def all_pair_rdms(psi: SpinorState) -> np.ndarray:
    """4x4 reduced densities for every pair ``i < j``, shape ``(n_pairs, 4, 4)``.

    Built from the bath density ``G = tr_S |psi><psi|`` in the configuration
    basis: populations and single-flip coherences by matrix products over
    the occupation table, double flips from precomputed index lists.
    """
    space = psi.space
    n = space.n_modes
    if n < 2:
        raise ContractViolation("pair densities need at least two modes")
    amps = psi.amplitudes
    gram = amps @ amps.conj().T * psi.grid.dr
    occ = space.occupation.astype(float)
    emp = 1.0 - occ
    g = gram.diagonal().real

    p11 = occ.T @ (g[:, None] * occ)
    p10 = occ.T @ (g[:, None] * emp)
    p00 = emp.T @ (g[:, None] * emp)

    table = space.neighbor_table
    rows, cols = np.nonzero(space.occupation)
    h = np.zeros((space.dim, n), dtype=complex)
    h[rows, cols] = gram[rows, table[rows, cols]]
    x1 = h.T @ occ  # x1[i, j] = <1_i 1_j| rho |0_i 1_j>
    x0 = h.T @ emp

    up, swap = _double_flip_lists(space)
    d11 = _scatter(gram, up, n)
    d10 = _scatter(gram, swap, n)

    ii, jj = mode_pairs(n)
    out = np.zeros((len(ii), 4, 4), dtype=complex)
    out[:, 0, 0] = p00[ii, jj]
    out[:, 1, 1] = p10[jj, ii]
    out[:, 2, 2] = p10[ii, jj]
    out[:, 3, 3] = p11[ii, jj]
    out[:, 2, 0] = x0[ii, jj]
    out[:, 3, 1] = x1[ii, jj]
    out[:, 1, 0] = x0[jj, ii]
    out[:, 3, 2] = x1[jj, ii]
    out[:, 3, 0] = d11[ii, jj]
    out[:, 2, 1] = d10[ii, jj]
    low = np.tril_indices(4, k=-1)
    out[:, low[1], low[0]] = out[:, low[0], low[1]].conj()
    return out


def _scatter(gram, lists, n):
    i, j, src, dst = lists
    vals = gram[src, dst]
    flat = i * n + j
    re = np.bincount(flat, weights=vals.real, minlength=n * n)
    im = np.bincount(flat, weights=vals.imag, minlength=n * n)
    return (re + 1j * im).reshape(n, n)


class EntanglementSummary(NamedTuple):
    mean_lambda0: float
    entangled_fraction: float
    mean_eof: float

    @property
    def mean_lambda0_all_pairs(self) -> float:
        """Negative eigenvalues summed and divided by the number of all pairs."""
        return self.mean_lambda0 * self.entangled_fraction


def pair_records(psi: SpinorState):
    rhos = all_pair_rdms(psi)
    lam0, w1, w2 = partial_transpose_diagnostics(rhos)
    c, e = concurrence_and_eof(rhos)
    ii, jj = mode_pairs(psi.space.n_modes)
    return [PairEntanglementRecord(int(a), int(b), float(l), float(x), float(y), float(cc), float(ee))
            for a, b, l, x, y, cc, ee in zip(ii, jj, lam0, w1, w2, c, e)]


def bath_entanglement_summary(psi: SpinorState) -> EntanglementSummary:
    """Mean ``lambda_0`` over entangled pairs, fraction of entangled pairs, mean EoF over all pairs."""
    rhos = all_pair_rdms(psi)
    lam0, _, _ = partial_transpose_diagnostics(rhos)
    _, eof = concurrence_and_eof(rhos)
    ent = classify_entangled(lam0)
    mean_l0 = float(lam0[ent].mean()) if ent.any() else 0.0
    return EntanglementSummary(mean_l0, float(ent.mean()), float(np.mean(eof)))


class EntanglementWriter:
    """CSV stream of bath-wide summaries, optionally with a long-format per-pair file."""

    def __init__(self, path, pair_path=None):
        self._fh = open(path, "w", newline="")
        self._fh.write(f"# {ENTANGLEMENT_SCHEMA}\n")
        self._w = csv.writer(self._fh)
        self._w.writerow(["time_fs", "mean_lambda0", "entangled_fraction", "mean_eof"])
        self._pairs = None
        if pair_path is not None:
            self._pairs = open(pair_path, "w", newline="")
            self._pairs.write(f"# {PAIR_SCHEMA}\n")
            self._pw = csv.writer(self._pairs)
            self._pw.writerow(["time_fs", "i", "j", "lambda0", "W1", "W2", "C", "E"])

    def write(self, time_fs, psi: SpinorState) -> EntanglementSummary:
        if self._pairs is None:
            summary = bath_entanglement_summary(psi)
        else:
            recs = pair_records(psi)
            for r in recs:
                self._pw.writerow([repr(time_fs), r.i, r.j, repr(r.lambda0), repr(r.W1), repr(r.W2),
                                   repr(r.concurrence), repr(r.eof)])
            self._pairs.flush()
            lam0 = np.array([r.lambda0 for r in recs])
            ent = classify_entangled(lam0)
            summary = EntanglementSummary(float(lam0[ent].mean()) if ent.any() else 0.0,
                                          float(ent.mean()), float(np.mean([r.eof for r in recs])))
        self._w.writerow([repr(float(time_fs)), *(repr(float(v)) for v in summary)])
        self._fh.flush()
        return summary

    def close(self):
        self._fh.close()
        if self._pairs is not None:
            self._pairs.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
