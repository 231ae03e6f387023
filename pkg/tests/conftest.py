import numpy as np
import pytest

from surrogate.bath import build_configuration_space, sample_ohmic_bath
from surrogate.grid import MorseParams, build_grid
from surrogate.hamiltonian import SpinorState, morse_hamiltonian
from surrogate.units import rate_from_inverse_fs

# converged production grid for the Morse problem
MORSE_GRID = (-0.6, 1.8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def morse():
    return MorseParams()


def small_model(n_modes=3, n_exc=None, n_points=32, gamma_inv=163.0, kappa=0.0, normalization="density"):
    g = build_grid(*MORSE_GRID, n_points)
    m = MorseParams()
    b = sample_ohmic_bath(n_modes, 2.9e-3, rate_from_inverse_fs(gamma_inv), m.mass_M, kappa,
                          normalization=normalization)
    s = build_configuration_space(n_modes, n_modes if n_exc is None else n_exc)
    return morse_hamiltonian(g, m, b, s)


def random_state(h, rng):
    shape = (h.space.dim, h.grid.n_points)
    return SpinorState(rng.normal(size=shape) + 1j * rng.normal(size=shape), h.grid, h.space).normalized()


# ---------------------------------------------------------------------------
# acceptance report: tests marked ``criterion(n, label)`` get one line each
# in the terminal summary, grouped per criterion

ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion check")


@pytest.fixture
def detail():
    """Free-form measurements a criterion test wants shown in the summary."""
    return {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    number, label = mark.args
    info = item.funcargs.get("detail") or {}
    text = ", ".join(f"{k}={_fmt(v)}" for k, v in info.items())
    if rep.failed and not info:
        text = str(call.excinfo.value).splitlines()[0] if call.excinfo else "error"
    ACCEPTANCE.setdefault(number, []).append((label, rep.passed, text))


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        ok = all(c[1] for c in checks)
        tr.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}")
        for label, passed, text in checks:
            tr.write_line(f"    [{'pass' if passed else 'FAIL'}] {label}: {text}")
