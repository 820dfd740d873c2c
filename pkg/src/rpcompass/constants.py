"""Physical constants and unit conversions.

Unit system used throughout:
    energies        meV
    magnetic field  tesla
    time            seconds
    rates           1/s
    Hamiltonians    rad/s (energy divided by hbar before any integration)
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Reduced Planck constant, Bohr magneton, free-electron g-factor."""

    hbar_mev_s: float = 6.58211957e-13
    bohr_magneton_mev_per_tesla: float = 5.7883818e-2
    g_free: float = 2.0

    @property
    def gamma_mev_per_tesla(self):
        """Gyromagnetic ratio for Pauli-matrix spin operators: gamma = mu_B * g / 2.

        The 1/2 absorbs the spin-1/2 normalisation, so the electron Zeeman
        term reads gamma * B . sigma and the free-electron splitting is
        2 * gamma * B.
        """
        return 0.5 * self.bohr_magneton_mev_per_tesla * self.g_free


CONSTANTS = PhysicalConstants()


def mev_to_rad_per_s(energy_mev, constants=CONSTANTS):
    """Convert an energy in meV to an angular frequency in rad/s."""
    return energy_mev / constants.hbar_mev_s


def rad_per_s_to_mev(omega_rad_per_s, constants=CONSTANTS):
    """Convert an angular frequency in rad/s back to an energy in meV."""
    return omega_rad_per_s * constants.hbar_mev_s
