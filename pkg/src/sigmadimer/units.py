"""Physical constants and conversions to the dimensionless field parameters.

All energies inside the package are multiples of the rotational constant B;
conversion to laboratory units happens only at input/output boundaries.

Constants (CODATA 2018, exact where the SI defines them):

=================  ==========================  =====================
name               value                       unit
=================  ==========================  =====================
SPEED_OF_LIGHT     29.9792458                  GHz per cm^-1 (exact)
PLANCK             6.62607015e-34              J s (exact)
BOHR_MAGNETON      9.2740100783e-24            J/T
DEBYE              3.33564095198152e-30        C m (1e-21/c)
EPSILON_0          8.8541878128e-12            F/m
G_ELECTRON         2.00231930436256            dimensionless
=================  ==========================  =====================
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT_CM = 2.99792458e10  # cm/s
SPEED_OF_LIGHT = 29.9792458  # GHz per cm^-1
PLANCK = 6.62607015e-34
BOHR_MAGNETON = 9.2740100783e-24
DEBYE = 1e-21 / 2.99792458e8
EPSILON_0 = 8.8541878128e-12
G_ELECTRON = 2.00231930436256

HC = PLANCK * SPEED_OF_LIGHT_CM  # J cm
BOHR_MAGNETON_CM = BOHR_MAGNETON / HC  # cm^-1 per tesla
DEBYE_KV_PER_CM = DEBYE * 1e5 / HC  # cm^-1 per (debye * kV/cm)

CONSTANTS = {
    "speed_of_light_GHz_per_cm-1": SPEED_OF_LIGHT,
    "planck_J_s": PLANCK,
    "bohr_magneton_J_per_T": BOHR_MAGNETON,
    "bohr_magneton_cm-1_per_T": BOHR_MAGNETON_CM,
    "debye_C_m": DEBYE,
    "debye_kV_per_cm_in_cm-1": DEBYE_KV_PER_CM,
    "epsilon_0_F_per_m": EPSILON_0,
    "g_electron": G_ELECTRON,
}


class UnitsError(ValueError):
    pass


@dataclass(frozen=True)
class MoleculeParams:
    """Spectroscopic constants of a 2-Sigma molecule.

    ``B`` and ``gamma`` in cm^-1, ``mu`` in debye. Defaults are NaO.
    """

    B: float = 0.462
    gamma: float = 0.193
    mu: float = 7.88
    g_S: float = 2.0023

    def __post_init__(self) -> None:
        if not self.B > 0:
            raise UnitsError(f"rotational constant must be positive, got {self.B}")
        if self.mu < 0:
            raise UnitsError(f"dipole moment must be non-negative, got {self.mu}")
        if not self.g_S > 0:
            raise UnitsError(f"g_S must be positive, got {self.g_S}")

    @property
    def gamma_over_B(self) -> float:
        return self.gamma / self.B


NAO = MoleculeParams()


@dataclass(frozen=True)
class FieldPoint:
    """Per-site dimensionless field parameters ``(site 1, site 2)``."""

    eta_el: tuple[float, float] = (0.0, 0.0)
    eta_m: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def inhomogeneous(cls, eta_m: float, ratio: float = 1.0, eta_el: float = 0.0) -> "FieldPoint":
        """Site 1 at ``eta_m``, site 2 at ``ratio * eta_m``; common electric field."""
        return cls(eta_el=(eta_el, eta_el), eta_m=(eta_m, ratio * eta_m))


def _check_B(params: MoleculeParams) -> None:
    if not params.B > 0:
        raise UnitsError("non-positive rotational constant")


def eta_m_from_field(params: MoleculeParams, H: float) -> float:
    """Zeeman parameter g_S mu_B H / B for a field ``H`` in tesla."""
    _check_B(params)
    if H < 0:
        raise UnitsError("magnetic field must be non-negative")
    return params.g_S * BOHR_MAGNETON_CM * H / params.B


def field_from_eta_m(params: MoleculeParams, eta_m: float) -> float:
    _check_B(params)
    return eta_m * params.B / (params.g_S * BOHR_MAGNETON_CM)


def eta_el_from_field(params: MoleculeParams, E: float) -> float:
    """Stark parameter mu E / B for a field ``E`` in kV/cm."""
    _check_B(params)
    if E < 0:
        raise UnitsError("electric field must be non-negative")
    return params.mu * DEBYE_KV_PER_CM * E / params.B


def field_from_eta_el(params: MoleculeParams, eta_el: float) -> float:
    _check_B(params)
    if params.mu == 0:
        raise UnitsError("no electric field maps a non-polar molecule to eta_el")
    return eta_el * params.B / (params.mu * DEBYE_KV_PER_CM)


def xi_from_geometry(params: MoleculeParams, r: float, params2: MoleculeParams | None = None) -> float:
    """Dipole-dipole strength mu1 mu2 / (4 pi eps0 r^3) in cm^-1 for ``r`` in nm."""
    if not r > 0:
        raise UnitsError("separation must be positive")
    mu2 = (params2 or params).mu
    r_m = r * 1e-9
    energy = (params.mu * DEBYE) * (mu2 * DEBYE) / (4 * math.pi * EPSILON_0 * r_m**3)
    return energy / HC


def cm1_to_ghz(x: float) -> float:
    return x * SPEED_OF_LIGHT


def ghz_to_cm1(f: float) -> float:
    return f / SPEED_OF_LIGHT


def format_frequency(ghz: float) -> dict:
    """Render a frequency with the largest unit that keeps the mantissa >= 1."""
    hz = ghz * 1e9
    for unit, scale in (("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3)):
        if abs(hz) >= scale:
            return {"value": float(f"{hz / scale:.12g}"), "unit": unit}
    return {"value": float(f"{hz:.12g}"), "unit": "Hz"}
