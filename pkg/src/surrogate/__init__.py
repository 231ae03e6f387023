"""Morse oscillator coupled to a truncated spin bath."""
from .bath import BathSpec, ConfigurationSpace, build_configuration_space, sample_ohmic_bath
from .config import RunConfig, load_config, parse_config, preset
from .errors import ConfigurationError, ContractViolation, NumericalFailure, VerificationMismatch
from .grid import MorseParams, SpatialGrid, build_grid
from .hamiltonian import HamiltonianSpec, SpinorState, expectation_parts, harmonic_hamiltonian, morse_hamiltonian
from .propagator import evolve, make_plan, propagate, relax_imaginary_time
from .runner import run_scenario

__version__ = "0.1.0"
