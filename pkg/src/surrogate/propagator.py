"""Chebychev propagation in real and imaginary time, and the momentum-space shift."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.special import ive, jv

from .errors import NumericalFailure
from .hamiltonian import HamiltonianSpec, SpinorState
from .units import fs_to_au

log = logging.getLogger(__name__)

SAFETY_MARGIN = 0.05
EDGE_TOLERANCE = 1e-8


def estimate_spectral_bounds(h: HamiltonianSpec) -> tuple[float, float]:
    """Analytic (Gershgorin-type) bracket of the spectrum of ``h``.

    Upper end: ``V_max + T_max + (sum of the n_exc largest w_j) + couplings``.
    The lower end subtracts the coupling and hopping bounds from ``V_min``,
    since both can push the ground state below the bare potential minimum.
    No padding is applied here; see :func:`make_plan`.
    """
    t_max = np.pi**2 / (2.0 * h.mass * h.grid.dr**2)
    top = np.sort(h.bath.omega)[::-1][: h.space.n_exc]
    bath_max = float(np.sum(np.clip(top, 0.0, None)))
    f_max = float(np.max(np.abs(h.coupling)))
    coupling_max = f_max * _max_row_sum(h.coupling_matrix)
    hop_max = _max_row_sum(h.interaction_matrix)
    e_min = float(h.potential.min()) - coupling_max - hop_max
    e_max = float(h.potential.max()) + t_max + bath_max + coupling_max + hop_max
    return e_min, e_max


def _max_row_sum(m) -> float:
    if m is None or m.nnz == 0:
        return 0.0
    return float(np.max(np.abs(m).sum(axis=1)))


@dataclass(frozen=True, eq=False)
class ChebychevPlan:
    dt: float
    e_min: float
    e_max: float
    coefficients: np.ndarray
    tolerance: float

    @property
    def order(self) -> int:
        return len(self.coefficients)

    @property
    def e_mid(self) -> float:
        return 0.5 * (self.e_max + self.e_min)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.e_max - self.e_min)


def make_plan(h: HamiltonianSpec, dt: float, tolerance: float = 1e-12, bounds=None) -> ChebychevPlan:
    """Chebychev expansion of ``exp(-i H dt)`` (``dt`` in a.u.).

    The estimated spectral range is widened by 5% on both sides, and the
    expansion stops at the first Bessel coefficient below ``tolerance``
    past the ``k > R`` turning point.
    """
    e_min, e_max = bounds if bounds is not None else estimate_spectral_bounds(h)
    pad = SAFETY_MARGIN * 0.5 * (e_max - e_min)
    e_min, e_max = e_min - pad, e_max + pad
    radius = 0.5 * (e_max - e_min) * dt
    kmax = int(radius + 30 + 10 * radius ** (1 / 3)) + 20
    k = np.arange(kmax)
    bessel = jv(k, radius)
    tail = np.nonzero((k > radius) & (np.abs(bessel) < tolerance))[0]
    if len(tail) == 0:
        raise NumericalFailure(f"Chebychev series did not converge within {kmax} terms")
    order = int(tail[0])
    coeffs = 2.0 * bessel[:order] * (-1j) ** k[:order]
    coeffs[0] *= 0.5
    coeffs.setflags(write=False)
    return ChebychevPlan(float(dt), e_min, e_max, coeffs, tolerance)


def plan_for_fs(h: HamiltonianSpec, dt_fs: float, tolerance: float = 1e-12) -> ChebychevPlan:
    return make_plan(h, fs_to_au(dt_fs), tolerance)


def _chebychev_step(h, amps, coeffs, e_mid, half_width):
    def scaled(x):
        return (h.apply(x) - e_mid * x) / half_width

    prev = amps
    cur = scaled(amps)
    out = coeffs[0] * prev + coeffs[1] * cur
    for c in coeffs[2:]:
        nxt = 2.0 * scaled(cur) - prev
        out += c * nxt
        prev, cur = cur, nxt
    return out, cur


def step(plan: ChebychevPlan, h: HamiltonianSpec, amps: np.ndarray) -> np.ndarray:
    """One step of length ``plan.dt`` on a raw amplitude array."""
    out, last = _chebychev_step(h, amps, plan.coefficients, plan.e_mid, plan.half_width)
    ref = np.max(np.abs(amps))
    if not np.all(np.isfinite(last)) or np.max(np.abs(last)) > 10.0 * max(ref, 1e-300):
        raise NumericalFailure(
            "Chebychev recurrence diverged: spectrum of H exceeds "
            f"[{plan.e_min:.6g}, {plan.e_max:.6g}]"
        )
    out *= np.exp(-1j * plan.e_mid * plan.dt)
    return out


def propagate(plan: ChebychevPlan, h: HamiltonianSpec, psi: SpinorState, n_steps: int) -> SpinorState:
    """``exp(-i H n_steps dt) psi``."""
    amps = psi.amplitudes
    for _ in range(int(n_steps)):
        amps = step(plan, h, amps)
    return psi.replace(amps)


def evolve(plan: ChebychevPlan, h: HamiltonianSpec, psi: SpinorState, n_samples: int, steps_per_sample: int):
    """Yield ``(t_au, state)`` at ``t = 0`` and after every ``steps_per_sample`` steps."""
    amps = psi.amplitudes
    yield 0.0, psi
    for n in range(1, int(n_samples) + 1):
        for _ in range(steps_per_sample):
            amps = step(plan, h, amps)
        yield n * steps_per_sample * plan.dt, psi.replace(amps)


def _energy(h, amps, dr):
    hpsi = h.apply(amps)
    e = np.vdot(amps, hpsi).real * dr
    var = np.vdot(hpsi, hpsi).real * dr - e * e
    return e, var


def relax_imaginary_time(h: HamiltonianSpec, guess: SpinorState, tau_step: float = 40.0,
                         tol: float = 1e-14, max_iter: int = 20000) -> SpinorState:
    """Relax ``guess`` towards the ground state of ``h`` with ``exp(-H tau)``.

    Each iteration applies a Chebychev expansion of ``exp(-H tau_step)``
    and renormalizes. Stops once the energy changes by less than ``tol``
    between iterations and the variance ``<H^2> - <H>^2`` is below
    ``100 tol``.
    """
    dr = h.grid.dr
    e_min, e_max = estimate_spectral_bounds(h)
    pad = SAFETY_MARGIN * 0.5 * (e_max - e_min)
    e_min, e_max = e_min - pad, e_max + pad
    e_mid, half = 0.5 * (e_max + e_min), 0.5 * (e_max - e_min)
    radius = half * tau_step
    k = np.arange(int(4 * np.sqrt(radius) + 6 * radius ** (1 / 3) + 40))
    # exp(-R x) = I_0(R) + 2 sum (-1)^k I_k(R) T_k(x); the common exp(R) factor drops out on renormalization
    scaled_i = ive(k, radius)
    keep = np.nonzero(scaled_i > 1e-16 * scaled_i[0])[0]
    coeffs = 2.0 * scaled_i[: keep[-1] + 1] * (-1.0) ** k[: keep[-1] + 1]
    coeffs[0] *= 0.5
    if len(coeffs) < 2:
        coeffs = np.append(coeffs, 0.0)

    amps = guess.amplitudes / guess.norm()
    energy, var = _energy(h, amps, dr)
    for it in range(1, max_iter + 1):
        amps, _ = _chebychev_step(h, amps, coeffs, e_mid, half)
        amps /= np.sqrt(np.sum(np.abs(amps) ** 2) * dr)
        new_energy, var = _energy(h, amps, dr)
        if new_energy > energy + 1e-12 * max(1.0, abs(energy)):
            log.warning("imaginary-time energy increased at iteration %d (%.3e)", it, new_energy - energy)
        delta = abs(energy - new_energy)
        energy = new_energy
        if delta < tol and var < 100 * tol:
            log.info("imaginary-time relaxation converged after %d iterations, E = %.12f", it, energy)
            return guess.replace(amps)
    raise NumericalFailure(
        f"imaginary-time relaxation did not converge in {max_iter} iterations "
        f"(last energy change {delta:.3e}, variance {var:.3e})"
    )


def displace(psi: SpinorState, r0: float) -> SpinorState:
    """Apply ``exp(-i r0 k)`` to every component, i.e. ``psi(R) -> psi(R - r0)``."""
    grid = psi.grid
    phase = np.exp(-1j * r0 * grid.k_values)
    amps = scipy.fft.ifft(phase * scipy.fft.fft(psi.amplitudes, axis=1), axis=1)
    out = psi.replace(amps)
    edge = edge_probability(out)
    if edge > EDGE_TOLERANCE:
        warnings.warn(f"displaced state reaches the grid edge (probability {edge:.2e})", RuntimeWarning, stacklevel=2)
    return out


def edge_probability(psi: SpinorState) -> float:
    """Largest probability ``sum_c |psi_c|^2 dr`` held by either end point of the grid.

    This is the quantity monitored against :data:`EDGE_TOLERANCE`.
    """
    amps = psi.amplitudes
    dens = np.sum(np.abs(amps[:, [0, -1]]) ** 2, axis=0) * psi.grid.dr
    return float(dens.max())


def edge_amplitude(psi: SpinorState) -> float:
    """Square root of :func:`edge_probability`."""
    return float(np.sqrt(edge_probability(psi)))
