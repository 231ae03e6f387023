"""Run configuration: a flat ``key = value unit`` text format and named presets.

Example::

    scenario = relax
    n_modes = 60
    n_exc = 2
    gamma_inv = 1630 fs
    t_final = 2000 fs

Physical quantities must carry a unit; the loader converts everything to
atomic units. Unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .bath import NORMALIZATIONS, SAMPLING_OFFSETS
from .errors import ConfigurationError
from .units import AU_TIME_FS

SCENARIOS = ("relax", "correlated", "catstate", "entangle")
INITIAL_STATES = ("displaced-gaussian", "correlated-ground", "cat-state")

# unit name -> factor to atomic units, per dimension
_TIME = {"au": 1.0, "fs": 1.0 / AU_TIME_FS, "ps": 1000.0 / AU_TIME_FS}
_ENERGY = {"au": 1.0, "hartree": 1.0}
_LENGTH = {"au": 1.0, "bohr": 1.0}
_INV_LENGTH = {"au": 1.0, "1/bohr": 1.0}
_MASS = {"au": 1.0, "me": 1.0}
_MOMENTUM = {"au": 1.0}

# dimension of every physical key; keys absent here are plain values
_UNITS = {
    "morse_D": _ENERGY,
    "morse_alpha": _INV_LENGTH,
    "mass": _MASS,
    "omega_cutoff": _ENERGY,
    "gamma": _ENERGY,
    "gamma_inv": _TIME,
    "kappa": _ENERGY,
    "r_min": _LENGTH,
    "r_max": _LENGTH,
    "r0": _LENGTH,
    "width": _LENGTH,
    "omega0": _ENERGY,
    "delta": _LENGTH,
    "p0": _MOMENTUM,
    "t_final": _TIME,
    "dt": _TIME,
    "cadence": _TIME,
    "tau_step": _TIME,
    "relax_tol": _ENERGY,
}


@dataclass
class RunConfig:
    """Fully resolved run parameters, all in atomic units."""

    scenario: str = "relax"
    name: str = "run"
    # system
    morse_D: float = 0.018
    morse_alpha: float = 2.0
    mass: float = 1.0e5
    # bath
    n_modes: int = 60
    omega_cutoff: float = 2.9e-3
    gamma: float = 1.0 / (1630.0 / AU_TIME_FS)
    kappa: float = 0.0
    n_exc: int = 2
    sampling: str = "edge"
    normalization: str = "t1"
    # grid
    r_min: float = -0.6
    r_max: float = 1.8
    n_points: int = 64
    # initial state; r0 and width default to 2 R~ and R~ when unset
    initial: str = "displaced-gaussian"
    r0: float | None = None
    width: float | None = None
    omega0: float = 1.0e-3
    delta: float = 0.5
    p0: float = 0.0
    # time axis
    t_final: float = 2000.0 / AU_TIME_FS
    dt: float = 0.5 / AU_TIME_FS
    cadence: float = 1.0 / AU_TIME_FS
    tau_step: float = 40.0
    relax_tol: float = 1e-14
    # output
    entanglement: bool = False
    pair_output: bool = False
    coherence: bool = False
    deterministic: bool = False
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.initial not in INITIAL_STATES:
            raise ConfigurationError(f"unknown initial state {self.initial!r}; choose from {INITIAL_STATES}")
        if self.sampling not in SAMPLING_OFFSETS:
            raise ConfigurationError(f"unknown sampling {self.sampling!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigurationError(f"unknown normalization {self.normalization!r}")
        for key in ("morse_D", "morse_alpha", "mass", "omega_cutoff", "gamma", "omega0",
                    "t_final", "dt", "cadence", "tau_step", "relax_tol"):
            if not getattr(self, key) > 0:
                raise ConfigurationError(f"{key} must be positive")
        if self.kappa < 0:
            raise ConfigurationError("kappa must be non-negative")
        if self.width is not None and self.width <= 0:
            raise ConfigurationError("width must be positive")
        if self.delta < 0:
            raise ConfigurationError("delta must be non-negative")
        ratio = self.cadence / self.dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigurationError("cadence must be a whole multiple of dt")
        if self.scenario == "catstate" and self.initial != "cat-state":
            raise ConfigurationError("the catstate scenario needs initial = cat-state")
        if self.initial == "cat-state" and self.scenario != "catstate":
            raise ConfigurationError("initial = cat-state is only used by the catstate scenario")

    @property
    def gamma_inv_fs(self) -> float:
        return AU_TIME_FS / self.gamma

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.cadence / self.dt))

    @property
    def n_samples(self) -> int:
        return int(np.floor(self.t_final / self.cadence + 1e-9))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        """Config text in atomic units that :func:`parse_config` reads back exactly."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name in _UNITS:
                lines.append(f"{f.name} = {float(v)!r} au")
            elif isinstance(v, bool):
                lines.append(f"{f.name} = {'true' if v else 'false'}")
            else:
                lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT_KEYS = {"n_modes", "n_exc", "n_points", "seed"}
_BOOL_KEYS = {"entanglement", "pair_output", "coherence", "deterministic"}


def _parse_bool(key, text):
    t = text.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigurationError(f"{key}: expected a boolean, got {text!r}")


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    values = {}
    gamma_keys = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigurationError(f"{where}: expected 'key = value [unit]'")
        key, rhs = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS and key != "gamma_inv":
            raise ConfigurationError(f"{where}: unknown key {key!r}")
        if key in values or (key in ("gamma", "gamma_inv") and gamma_keys):
            raise ConfigurationError(f"{where}: {key} given more than once")
        parts = rhs.split()
        if not parts:
            raise ConfigurationError(f"{where}: missing value for {key}")
        if key in _UNITS:
            if len(parts) != 2:
                raise ConfigurationError(f"{where}: {key} needs a value and a unit")
            units = _UNITS[key]
            if parts[1] not in units:
                raise ConfigurationError(f"{where}: unit {parts[1]!r} not valid for {key}; use one of {sorted(units)}")
            try:
                value = float(parts[0]) * units[parts[1]]
            except ValueError:
                raise ConfigurationError(f"{where}: {key} is not a number") from None
            if key in ("gamma", "gamma_inv"):
                gamma_keys.append(key)
                if key == "gamma_inv":
                    if value <= 0:
                        raise ConfigurationError(f"{where}: gamma_inv must be positive")
                    key, value = "gamma", 1.0 / value
        else:
            if len(parts) != 1:
                raise ConfigurationError(f"{where}: {key} takes a single value without unit")
            value = parts[0]
            if key in _INT_KEYS:
                try:
                    value = int(value)
                except ValueError:
                    raise ConfigurationError(f"{where}: {key} must be an integer") from None
            elif key in _BOOL_KEYS:
                value = _parse_bool(key, value)
        values[key] = value
    if len(gamma_keys) != 1:
        raise ConfigurationError(f"{source}: exactly one of gamma (au) or gamma_inv (fs) is required")
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path))


# presets mirror the bath sizes and couplings of the reference calculations

def _fs(t):
    return t / AU_TIME_FS


def predefined_configs() -> dict[str, RunConfig]:
    weak = RunConfig(scenario="relax", name="weak", n_modes=60, n_exc=2,
                     gamma=1 / _fs(1630.0), t_final=_fs(2000.0))
    presets = {
        "weak": weak,
        "medium": weak.replace(name="medium", n_modes=40, gamma=1 / _fs(163.0), t_final=_fs(900.0)),
        "strong": weak.replace(name="strong", n_modes=20, n_exc=5, gamma=1 / _fs(54.0), t_final=_fs(500.0)),
        "weak-kappa": weak.replace(name="weak-kappa", kappa=1.5e-4, t_final=_fs(3200.0)),
        "correlated": weak.replace(scenario="correlated", name="correlated", initial="correlated-ground",
                                   t_final=_fs(900.0)),
    }
    for g in (1630, 500):
        presets[f"catstate-{g}"] = weak.replace(
            scenario="catstate", name=f"catstate-{g}", initial="cat-state", gamma=1 / _fs(float(g)),
            r_min=-1.0, r_max=1.0, t_final=_fs(400.0), coherence=True)
    for g in (1630, 500, 163):
        presets[f"entangle-{g}"] = weak.replace(
            scenario="entangle", name=f"entangle-{g}", n_modes=40, gamma=1 / _fs(float(g)),
            t_final=_fs(900.0), entanglement=True)
    return presets


def preset(name: str) -> RunConfig:
    presets = predefined_configs()
    if name not in presets:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(presets)}")
    return presets[name]
