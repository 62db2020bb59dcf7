"""Conversion of the dimensionless results to laboratory units."""
from dataclasses import dataclass

import numpy as np
from scipy import constants as const

from ..errors import InvalidParameterError
from ..lattice import build_config, well_spectrum

CS133_MASS = 132.905451961 * const.atomic_mass


@dataclass(frozen=True)
class SIParams:
    mass: float = CS133_MASS  # kg
    wavelength: float = 1064e-9  # m
    depth_recoil: float = 36.0  # V0 / E_r
    omega_T: float = 300.0

    def __post_init__(self):
        for name in ("mass", "wavelength", "depth_recoil", "omega_T"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")


def si_calculator(params=SIParams()):
    """Recoil energy, frequencies, durations and the deep-lattice tunnelling estimate.

    hbar*omega = 2 sqrt(V0 E_r), so the dimensionless depth is V0/(hbar omega) = sqrt(V0/E_r)/2.
    """
    hbar = const.hbar
    k = 2 * np.pi / params.wavelength
    E_r = hbar**2 * k**2 / (2 * params.mass)
    s = params.depth_recoil
    V0 = s * E_r
    omega = np.sqrt(2 * V0 * k**2 / params.mass)
    depth = np.sqrt(s) / 2
    spectrum = well_spectrum(build_config(depth))
    omega_d = spectrum.omega_d * omega
    T = params.omega_T / omega
    J0 = 4 * E_r / np.sqrt(np.pi) * s**0.75 * np.exp(-2 * np.sqrt(s))
    tunnel_time = hbar / J0
    return {
        "E_r_J": E_r,
        "E_r_over_h_Hz": E_r / const.h,
        "depth_hbar_omega": depth,
        "omega_rad_s": omega,
        "omega_d_over_2pi_Hz": omega_d / (2 * np.pi),
        "T_s": T,
        "J0_J": J0,
        "hbar_over_J0_s": tunnel_time,
        "T_over_tunnel_time": T / tunnel_time,
        "mott_ok": bool(T < 0.1 * tunnel_time),
    }
