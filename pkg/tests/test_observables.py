import numpy as np
import pytest

from conftest import random_state, small_model
from surrogate.bath import build_configuration_space
from surrogate.errors import ConfigurationError, ContractViolation
from surrogate.grid import build_grid, displaced_gaussian
from surrogate.hamiltonian import SpinorState
from surrogate.observables import (
    CatStateBasis,
    ReducedDensityMatrix,
    TrajectoryRecord,
    TrajectoryWriter,
    bath_populations,
    coherence_norm,
    excitation_distribution,
    pointer_decomposition,
    read_csv,
    reduce_system_density,
    trajectory_columns,
)
from surrogate.oracle import dense_system_density

CAT_GRID = (-1.0, 1.0, 128)


def test_product_state_is_pure():
    g = build_grid(-0.6, 1.8, 64)
    s = build_configuration_space(3, 2)
    phi = displaced_gaussian(g, 0.2, 0.09)
    rho = reduce_system_density(SpinorState.product(phi, g, s, 2))
    rho.check()
    assert rho.purity() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho.rho, np.outer(phi, phi.conj()) * g.dr)


def test_two_level_mixture_purity():
    g = build_grid(-0.6, 1.8, 64)
    s = build_configuration_space(2, 1)
    a = displaced_gaussian(g, 0.0, 0.08)
    b = displaced_gaussian(g, 0.9, 0.08)
    amps = np.zeros((s.dim, 64), complex)
    amps[0], amps[1] = a / np.sqrt(2), b / np.sqrt(2)
    rho = reduce_system_density(SpinorState(amps, g, s))
    assert rho.purity() == pytest.approx(0.5, abs=1e-12)


def test_partial_trace_matches_oracle(rng):
    h = small_model(3, 3, 32)
    psi = random_state(h, rng)
    rho = reduce_system_density(psi)
    rho.check()
    assert np.max(np.abs(rho.rho - dense_system_density(psi.amplitudes, h.grid.dr))) < 1e-12
    assert 0 < rho.purity() < 1


def test_rdm_check_rejects_bad_matrix():
    g = build_grid(0, 1, 8)
    with pytest.raises(ContractViolation):
        ReducedDensityMatrix(np.eye(8) / 4, g).check()
    with pytest.raises(ContractViolation):
        ReducedDensityMatrix(np.diag([1.5, -0.5] + [0] * 6), g).check()


def test_bath_populations():
    g = build_grid(-0.6, 1.8, 32)
    s = build_configuration_space(5, 2)
    phi = displaced_gaussian(g, 0.2, 0.09)
    assert np.all(bath_populations(SpinorState.product(phi, g, s)) == 0)
    p = bath_populations(SpinorState.product(phi, g, s, s.rank(1 << 3)))
    assert p == pytest.approx([0, 0, 0, 1, 0], abs=1e-12)


def test_populations_sum_to_mean_excitation(rng):
    h = small_model(4, 2, 16)
    psi = random_state(h, rng)
    p = bath_populations(psi)
    dist = excitation_distribution(psi)
    assert np.all((p >= 0) & (p <= 1))
    assert p.sum() == pytest.approx(np.dot(np.arange(3), dist), rel=1e-12)
    assert dist.sum() == pytest.approx(1.0, rel=1e-12)


def test_cat_basis_properties():
    cat = CatStateBasis(1e-3, 1e5, 0.5)
    assert cat.width == pytest.approx(np.sqrt(1 / (2 * 1e5 * 1e-3)))
    assert cat.r0 == 0.25
    gamma = 1.0 / (1630.0 / 2.4188843e-2)
    assert cat.predicted_rate(gamma) == pytest.approx(gamma * 1e5 * 1e-3 * 0.25 / 2)
    assert 2.4188843e-2 / cat.predicted_rate(gamma) == pytest.approx(130.4, rel=1e-12)
    g = build_grid(*CAT_GRID)
    for comp in cat.components(g, 0.0):
        dens = np.abs(comp) ** 2 * g.dr
        mean = np.sum(dens * g.r)
        assert np.sqrt(np.sum(dens * (g.r - mean) ** 2)) == pytest.approx(cat.width, rel=1e-8)


def test_cat_components_follow_harmonic_motion():
    cat = CatStateBasis(1e-3, 1e5, 0.5, p0=3.0)
    x, p = cat.phase_point(+1, 2 * np.pi / 1e-3)
    assert (x, p) == pytest.approx((0.25, 3.0), abs=1e-9)
    x, p = cat.phase_point(-1, 0.5 * np.pi / 1e-3)
    assert x == pytest.approx(3.0 / (1e5 * 1e-3))
    assert p == pytest.approx(1e5 * 1e-3 * 0.25)


def test_coherence_norm_pure_cat():
    g = build_grid(*CAT_GRID)
    cat = CatStateBasis(1e-3, 1e5, 0.5)
    psi = cat.state(g)
    rho = ReducedDensityMatrix(np.outer(psi, psi.conj()) * g.dr, g)
    # the overlap here is exp(-6.25), so the balanced cat is almost exactly 1/2
    assert coherence_norm(rho, cat) == pytest.approx(0.5, abs=1e-5)
    wide = build_grid(-2.0, 2.0, 256)
    far = CatStateBasis(1e-3, 1e5, 1.6)
    psi = far.state(wide)
    rho = ReducedDensityMatrix(np.outer(psi, psi.conj()) * wide.dr, wide)
    assert coherence_norm(rho, far) == pytest.approx(0.5, abs=1e-12)


def test_coherence_norm_mixture_is_zero():
    g = build_grid(*CAT_GRID)
    cat = CatStateBasis(1e-3, 1e5, 0.5)
    e = cat.orthonormal_basis(g)
    rho = 0.5 * (np.outer(e[0], e[0].conj()) + np.outer(e[1], e[1].conj()))
    assert coherence_norm(ReducedDensityMatrix(rho, g), cat) < 1e-28


def test_cat_basis_ill_conditioned():
    g = build_grid(*CAT_GRID)
    cat = CatStateBasis(1e-3, 1e5, 0.1)
    with pytest.raises(ConfigurationError):
        coherence_norm(ReducedDensityMatrix(np.eye(128) / 128, g), cat)


def test_pointer_decomposition(rng):
    g = build_grid(-0.6, 1.8, 64)
    a = displaced_gaussian(g, 0.0, 0.08)
    b = displaced_gaussian(g, 1.2, 0.08)
    eq = ReducedDensityMatrix(np.outer(a, a.conj()) * g.dr, g)
    c2, coh = pointer_decomposition(eq, eq)
    assert c2 == pytest.approx(1.0, abs=1e-12) and coh == pytest.approx(0.0, abs=1e-12)
    other = ReducedDensityMatrix(np.outer(b, b.conj()) * g.dr, g)
    c2, coh = pointer_decomposition(other, eq)
    assert c2 == pytest.approx(0.0, abs=1e-12)
    assert coh == pytest.approx(other.purity(), abs=1e-12)
    h = small_model(2, 2, 64)
    rho = reduce_system_density(random_state(h, rng))
    c2, _ = pointer_decomposition(rho, eq)
    assert abs(np.vdot(eq.rho, rho.rho - c2 * eq.rho)) < 1e-10
    with pytest.raises(ContractViolation):
        pointer_decomposition(rho, ReducedDensityMatrix(np.zeros((64, 64)), g))


def test_trajectory_csv_roundtrip(tmp_path):
    path = tmp_path / "t.csv"
    recs = [TrajectoryRecord(0.0, 0.18, -0.0159, -0.0159, 1.0, np.zeros(3), 0.5, 1e-3, 0.2),
            TrajectoryRecord(1.0, 0.17, -0.016, -0.0161, 1.0 - 1e-12, np.array([0.1, 0.2, 1e-9]), 0.49, 2e-3, 0.19)]
    with TrajectoryWriter(path, 3, coherence=True) as w:
        for r in recs:
            w.write(r)
    schema, cols, data = read_csv(path)
    assert schema == "surrogate-trajectory v1"
    assert cols == trajectory_columns(3, True)
    assert cols[:5] == ["time_fs", "mean_R_au", "E_bare_au", "E_eff_au", "norm"]
    assert cols[-3:] == ["n_coh", "C2", "tr_rho_coh2"]
    assert np.array_equal(data[1], recs[1].row(True))
    assert trajectory_columns(2) == ["time_fs", "mean_R_au", "E_bare_au", "E_eff_au", "norm", "pop_0", "pop_1"]
