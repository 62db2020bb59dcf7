"""Invariant-based pulse design for preparing angular-momentum states in a shaken
optical lattice, with four-level, six-level and full 2D grid simulations."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .lattice import LatticeConfig, WellSpectrum, build_config, matrix_elements, solve_well_eigenstates, well_spectrum
from .invariant import (
    InvariantConstants,
    InvariantEigensystem,
    InvariantTrajectory,
    alpha3,
    couplings_from_alphas,
    invariant_eigensystem,
    lr_phases,
    verify_invariant,
)
from .schemes import PulseSchedule, boundary_check, piecewise_scheme, polynomial_scheme, pulse_areas, solve_W
