"""Scenario orchestration: build the model from a :class:`RunConfig`, propagate, write CSVs."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bath import build_configuration_space, sample_ohmic_bath
from .config import RunConfig
from .entanglement import EntanglementWriter
from .errors import ConfigurationError, NumericalFailure, VerificationMismatch
from .grid import MorseParams, build_grid, displaced_gaussian, mean_position
from .hamiltonian import (
    HamiltonianSpec,
    SpinorState,
    expectation_parts,
    harmonic_hamiltonian,
    morse_hamiltonian,
)
from .observables import (
    CatStateBasis,
    TrajectoryRecord,
    TrajectoryWriter,
    bath_populations,
    coherence_norm,
    pointer_decomposition,
    reduce_system_density,
)
from .oracle import build_dense, exact_propagate
from .propagator import (
    EDGE_TOLERANCE,
    displace,
    edge_probability,
    estimate_spectral_bounds,
    make_plan,
    propagate,
    relax_imaginary_time,
)
from .units import au_to_fs, fs_to_au

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_MISMATCH = 0, 1, 2, 3


@dataclass
class Model:
    grid: object
    hamiltonian: HamiltonianSpec
    morse: MorseParams
    cat: CatStateBasis | None = None


def build_model(cfg: RunConfig) -> Model:
    grid = build_grid(cfg.r_min, cfg.r_max, cfg.n_points)
    morse = MorseParams(cfg.morse_D, cfg.morse_alpha, cfg.mass)
    bath = sample_ohmic_bath(cfg.n_modes, cfg.omega_cutoff, cfg.gamma, cfg.mass, cfg.kappa,
                             cfg.sampling, cfg.normalization)
    space = build_configuration_space(cfg.n_modes, cfg.n_exc)
    workers = 1 if cfg.deterministic else None
    if cfg.scenario == "catstate":
        h = harmonic_hamiltonian(grid, cfg.mass, cfg.omega0, bath, space, workers)
        return Model(grid, h, morse, CatStateBasis(cfg.omega0, cfg.mass, cfg.delta, cfg.p0))
    return Model(grid, morse_hamiltonian(grid, morse, bath, space, workers), morse)


def _relaxed(cfg: RunConfig, model: Model, center=0.0, width=None) -> SpinorState:
    g, h = model.grid, model.hamiltonian
    width = model.morse.r_tilde if width is None else width
    guess = SpinorState.product(displaced_gaussian(g, center, width), g, h.space)
    return relax_imaginary_time(h, guess, cfg.tau_step, cfg.relax_tol)


def initial_state(cfg: RunConfig, model: Model) -> SpinorState:
    g, h = model.grid, model.hamiltonian
    r0 = 2.0 * model.morse.r_tilde if cfg.r0 is None else cfg.r0
    if cfg.initial == "displaced-gaussian":
        width = model.morse.r_tilde if cfg.width is None else cfg.width
        return SpinorState.product(displaced_gaussian(g, r0, width), g, h.space)
    if cfg.initial == "correlated-ground":
        return displace(_relaxed(cfg, model), r0)
    return SpinorState.product(model.cat.state(g), g, h.space)


def equilibrium_density(cfg: RunConfig, model: Model):
    """System-reduced correlated ground state, used as the pointer-basis reference."""
    width = model.cat.width * np.sqrt(2.0) if model.cat is not None else None
    return reduce_system_density(_relaxed(cfg, model, 0.0, width))


def manifest_text(cfg: RunConfig, model: Model, plan=None) -> str:
    h = model.hamiltonian
    b = h.bath
    e_min, e_max = estimate_spectral_bounds(h)
    head = [
        "# surrogate run manifest; all values in atomic units, reloadable as a config",
        f"# gamma_inv = {cfg.gamma_inv_fs!r} fs",
        f"# delta_omega = {b.delta_omega!r}",
        f"# recurrence_time = {b.recurrence_time()!r} ({au_to_fs(b.recurrence_time()):.1f} fs)",
        f"# config_dim = {h.space.dim}",
        f"# spectral_bounds = {e_min!r} {e_max!r}",
        f"# lambda_1 = {float(b.lam[0])!r}",
    ]
    if model.cat is None:
        head += [f"# omega_harm = {float(model.morse.omega_harm)!r}", f"# r_tilde = {float(model.morse.r_tilde)!r}"]
    if plan is not None:
        head.append(f"# chebychev_order = {plan.order}")
    return "\n".join(head) + "\n" + cfg.to_text()


@dataclass
class RunResult:
    exit_code: int
    message: str = ""
    outputs: dict = field(default_factory=dict)


def run_scenario(cfg: RunConfig, out_dir, progress=None) -> RunResult:
    """Run one configuration, streaming CSV output into ``out_dir``.

    Returns the exit code (0 ok, 1 configuration error, 2 numerical
    failure) together with the paths written. Rows are flushed as they are
    produced, so a failed run leaves its partial trajectory on disk.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"manifest": out / f"{cfg.name}.manifest", "trajectory": out / f"{cfg.name}_trajectory.csv"}
    try:
        model = build_model(cfg)
        h, g = model.hamiltonian, model.grid
        plan = make_plan(h, cfg.dt)
        paths["manifest"].write_text(manifest_text(cfg, model, plan))
        psi0 = initial_state(cfg, model)
        rho_eq = equilibrium_density(cfg, model) if cfg.coherence else None
    except ConfigurationError as exc:
        return RunResult(EXIT_CONFIG, str(exc), paths)
    except NumericalFailure as exc:
        return RunResult(EXIT_NUMERICAL, str(exc), paths)

    ent = None
    if cfg.entanglement:
        paths["entanglement"] = out / f"{cfg.name}_entanglement.csv"
        if cfg.pair_output:
            paths["pairs"] = out / f"{cfg.name}_pairs.csv"
        ent = EntanglementWriter(paths["entanglement"], paths.get("pairs"))
    coherence = cfg.coherence and model.cat is not None
    writer = TrajectoryWriter(paths["trajectory"], cfg.n_modes, coherence)
    t0 = time.perf_counter()
    amps = psi0.amplitudes
    try:
        for n in range(cfg.n_samples + 1):
            if n:
                amps = propagate(plan, h, psi0.replace(amps), cfg.steps_per_sample).amplitudes
            t_au = n * cfg.steps_per_sample * cfg.dt
            psi = psi0.replace(amps)
            edge = edge_probability(psi)
            if edge > EDGE_TOLERANCE:
                raise NumericalFailure(f"wavefunction reached the grid edge at {au_to_fs(t_au):.1f} fs "
                                       f"(edge probability {edge:.2e})")
            writer.write(_record(psi, h, t_au, model.cat if coherence else None, rho_eq))
            if ent is not None:
                ent.write(au_to_fs(t_au), psi)
            if progress is not None:
                progress(n, cfg.n_samples)
    except NumericalFailure as exc:
        return RunResult(EXIT_NUMERICAL, str(exc), paths)
    finally:
        writer.close()
        if ent is not None:
            ent.close()
    log.info("%s finished in %.1f s", cfg.name, time.perf_counter() - t0)
    return RunResult(EXIT_OK, "", paths)


def _record(psi, h, t_au, cat, rho_eq) -> TrajectoryRecord:
    parts = expectation_parts(h, psi, check_norm=False)
    rec = TrajectoryRecord(au_to_fs(t_au), mean_position(psi.amplitudes, psi.grid), parts.system,
                           parts.effective_system, psi.norm(), bath_populations(psi))
    if cat is not None:
        rho = reduce_system_density(psi)
        rec.n_coh = coherence_norm(rho, cat, t_au)
        rec.C2, rec.tr_rho_coh2 = pointer_decomposition(rho, rho_eq)
    return rec


# ---------------------------------------------------------------------------
# oracle cross-check


@dataclass
class VerifyCase:
    n_modes: int
    n_points: int
    gamma_inv_fs: float
    max_error: float


def verify_instance(n_modes, n_points, gamma_inv_fs, t_au=500.0, kappa=0.0, seed=0,
                    grid=(-0.6, 1.8)) -> VerifyCase:
    """Chebychev against exact propagation of a random state on the untruncated space."""
    g = build_grid(grid[0], grid[1], n_points)
    morse = MorseParams()
    bath = sample_ohmic_bath(n_modes, 2.9e-3, 1.0 / fs_to_au(gamma_inv_fs), morse.mass_M, kappa)
    space = build_configuration_space(n_modes, n_modes)
    h = morse_hamiltonian(g, morse, bath, space)
    rng = np.random.default_rng(seed)
    shape = (space.dim, n_points)
    psi = SpinorState(rng.normal(size=shape) + 1j * rng.normal(size=shape), g, space).normalized()
    cheb = propagate(make_plan(h, t_au), h, psi, 1).amplitudes
    exact = exact_propagate(build_dense(h), psi.amplitudes, t_au)
    return VerifyCase(n_modes, n_points, gamma_inv_fs, float(np.max(np.abs(cheb - exact))))


def verify_matrix(max_n=4, n_points=(16, 32), gamma_inv_fs=(1630.0, 163.0, 54.0), seed=0,
                  threshold=1e-8, report=print):
    cases = []
    for n in range(1, max_n + 1):
        for npts in n_points:
            for gi in gamma_inv_fs:
                c = verify_instance(n, npts, gi, seed=seed)
                cases.append(c)
                if report is not None:
                    report(f"N={n} n_points={npts} gamma_inv={gi:g} fs  max |error| = {c.max_error:.3e}")
    worst = max(c.max_error for c in cases)
    if report is not None:
        report(f"max oracle deviation {worst:.3e}")
    if not worst < threshold:
        raise VerificationMismatch(f"oracle deviation {worst:.3e} exceeds {threshold:g}")
    return cases
