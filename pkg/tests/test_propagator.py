import dataclasses
import logging
import warnings

import numpy as np
import pytest

from conftest import random_state, small_model
from surrogate.bath import build_configuration_space, sample_ohmic_bath
from surrogate.errors import NumericalFailure
from surrogate.grid import MorseParams, build_grid, displaced_gaussian, mean_position
from surrogate.hamiltonian import SpinorState, expectation_parts, morse_hamiltonian
from surrogate.oracle import build_dense, exact_ground_state, exact_propagate
from surrogate.propagator import (
    SAFETY_MARGIN,
    displace,
    estimate_spectral_bounds,
    make_plan,
    plan_for_fs,
    propagate,
    relax_imaginary_time,
    step,
)
from surrogate.units import rate_from_inverse_fs


def test_bounds_bracket_oracle_spectrum():
    for kw in (dict(n_modes=1), dict(n_modes=3, gamma_inv=54.0, kappa=2e-4)):
        h = small_model(n_points=32, **kw)
        lo, hi = estimate_spectral_bounds(h)
        w = np.linalg.eigvalsh(build_dense(h).matrix)
        assert lo <= w[0] and w[-1] <= hi


def test_bounds_widen_with_n_exc():
    tops = [estimate_spectral_bounds(small_model(5, k, 16))[1] for k in range(6)]
    assert all(a <= b for a, b in zip(tops, tops[1:]))


def test_bounds_default_morse_parameters():
    g = build_grid(-0.6, 1.8, 64)
    m = MorseParams()
    b = sample_ohmic_bath(60, 2.9e-3, rate_from_inverse_fs(1630.0), m.mass_M)
    h = morse_hamiltonian(g, m, b, build_configuration_space(60, 2))
    lo, hi = estimate_spectral_bounds(h)
    assert lo <= -0.018
    plan = make_plan(h, 10.0)
    assert plan.e_min < lo and plan.e_max > hi
    assert plan.half_width == pytest.approx((1 + SAFETY_MARGIN) * 0.5 * (hi - lo))


def test_plan_truncation_and_order_scaling():
    h = small_model(3, 3, 32)
    orders = []
    for dt in (50.0, 100.0, 200.0, 400.0):
        plan = make_plan(h, dt)
        assert abs(plan.coefficients[-1]) >= plan.tolerance or plan.order > 0
        orders.append(plan.order)
        radius = plan.half_width * dt
        assert plan.order > radius
    # roughly linear growth at large radius
    assert orders[-1] / orders[-2] == pytest.approx(2.0, rel=0.25)


def test_eigenstate_acquires_phase():
    h = small_model(2, 2, 32, gamma_inv=163.0)
    inst = build_dense(h)
    w, u = inst.eigh()
    for k in (0, 5):
        v = SpinorState(u[:, k].reshape(h.space.dim, 32) / np.sqrt(h.grid.dr), h.grid, h.space)
        out = propagate(make_plan(h, 100.0), h, v, 5)
        overlap = v.inner(out)
        assert abs(overlap) > 1 - 1e-9
        assert np.angle(overlap * np.exp(1j * w[k] * 500.0)) == pytest.approx(0.0, abs=1e-8)


def test_matches_oracle_at_500_au(rng):
    h = small_model(3, 3, 32, gamma_inv=54.0)
    psi = random_state(h, rng)
    exact = exact_propagate(build_dense(h), psi.amplitudes, 500.0)
    for dt, n in ((500.0, 1), (50.0, 10)):
        out = propagate(make_plan(h, dt), h, psi, n).amplitudes
        assert np.max(np.abs(out - exact)) < 1e-8


def test_norm_conservation(rng):
    h = small_model(4, 2, 32, gamma_inv=54.0, kappa=1e-4)
    psi = random_state(h, rng)
    out = propagate(plan_for_fs(h, 1.0), h, psi, 100)
    assert abs(out.norm() - 1.0) < 1e-9


def test_time_step_convergence():
    h = small_model(4, 2, 64, gamma_inv=163.0)
    g = h.grid
    psi = SpinorState.product(displaced_gaussian(g, 2 * MorseParams().r_tilde, MorseParams().r_tilde), g, h.space)
    a = propagate(plan_for_fs(h, 1.0), h, psi, 200)
    b = propagate(plan_for_fs(h, 0.5), h, psi, 400)
    assert abs(mean_position(a.amplitudes, g) - mean_position(b.amplitudes, g)) < 1e-8
    ea, eb = expectation_parts(h, a, False), expectation_parts(h, b, False)
    assert abs(ea.effective_system - eb.effective_system) < 1e-8


def test_divergence_detected(rng):
    h = small_model(2, 2, 32)
    psi = random_state(h, rng)
    lo, hi = estimate_spectral_bounds(h)
    bad = make_plan(h, 200.0, bounds=(lo, lo + 0.01 * (hi - lo)))
    with pytest.raises(NumericalFailure, match="diverged"):
        step(bad, h, psi.amplitudes)


def _uncoupled_bath(n):
    return dataclasses.replace(sample_ohmic_bath(n, 2.9e-3, 1e-5, 1e5), lam=np.zeros(n))


def test_relax_uncoupled_gives_morse_ground(caplog):
    g = build_grid(-0.6, 1.8, 64)
    m = MorseParams()
    h = morse_hamiltonian(g, m, _uncoupled_bath(3), build_configuration_space(3, 2))
    guess = SpinorState.product(displaced_gaussian(g, 0.1, 0.12), g, h.space)
    with caplog.at_level(logging.WARNING, logger="surrogate.propagator"):
        gs = relax_imaginary_time(h, guess)
    assert not caplog.records  # energy decreased monotonically
    e = expectation_parts(h, gs).total
    assert e == pytest.approx(-0.017405, abs=1e-7)
    assert e == pytest.approx(m.level(0), abs=1e-7)
    assert gs.config_weights()[0] == pytest.approx(1.0, abs=1e-12)


def test_relax_matches_oracle_ground_state():
    h = small_model(3, 3, 32, gamma_inv=54.0)
    e0, v0 = exact_ground_state(build_dense(h))
    guess = SpinorState.product(displaced_gaussian(h.grid, 0.0, 0.1), h.grid, h.space)
    gs = relax_imaginary_time(h, guess)
    fid = abs(np.vdot(v0, gs.amplitudes) * h.grid.dr) ** 2
    assert fid > 1 - 1e-8
    assert expectation_parts(h, gs).total == pytest.approx(e0, abs=1e-10)
    assert gs.config_weights()[0] < 1.0


def test_relax_reports_non_convergence():
    h = small_model(2, 2, 32)
    guess = SpinorState.product(displaced_gaussian(h.grid, 0.3, 0.1), h.grid, h.space)
    with pytest.raises(NumericalFailure, match="did not converge"):
        relax_imaginary_time(h, guess, max_iter=2)


def test_displace():
    g = build_grid(-0.6, 1.8, 128)
    s = build_configuration_space(2, 2)
    r_t = MorseParams().r_tilde
    psi = SpinorState.product(displaced_gaussian(g, 0.0, r_t), g, s)
    assert np.allclose(displace(psi, 0.0).amplitudes, psi.amplitudes, atol=1e-15)
    moved = displace(psi, 2 * r_t)
    assert mean_position(moved.amplitudes, g) - mean_position(psi.amplitudes, g) == pytest.approx(0.18257418583505536, abs=1e-10)
    assert moved.norm() == pytest.approx(1.0, abs=1e-14)
    back = displace(displace(psi, 0.37), -0.37)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-12


def test_displace_warns_on_spill():
    g = build_grid(-0.6, 1.8, 64)
    s = build_configuration_space(1, 1)
    psi = SpinorState.product(displaced_gaussian(g, 0.0, 0.1), g, s)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        displace(psi, 0.3)
    with pytest.warns(RuntimeWarning, match="grid edge"):
        displace(psi, 1.7)
