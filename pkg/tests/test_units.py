import math

import pytest

from sigmadimer.units import (
    NAO,
    MoleculeParams,
    UnitsError,
    cm1_to_ghz,
    eta_el_from_field,
    eta_m_from_field,
    field_from_eta_el,
    field_from_eta_m,
    format_frequency,
    ghz_to_cm1,
    xi_from_geometry,
)


def test_nao_defaults():
    assert (NAO.B, NAO.gamma, NAO.mu) == (0.462, 0.193, 7.88)


def test_field_round_trips():
    for H in (0.0, 0.5, 1.302, 1.432, 7.0):
        assert field_from_eta_m(NAO, eta_m_from_field(NAO, H)) == pytest.approx(H, rel=1e-14, abs=1e-15)
    for E in (0.0, 1.0, 52.0):
        assert field_from_eta_el(NAO, eta_el_from_field(NAO, E)) == pytest.approx(E, rel=1e-14, abs=1e-15)


def test_zeeman_parameter_by_hand():
    # g mu_B H / (h c B) with mu_B / (h c) = 0.46686 cm^-1 / T
    assert eta_m_from_field(NAO, 1.0) == pytest.approx(2.0023 * 0.466864 / 0.462, rel=1e-5)


def test_stark_parameter_by_hand():
    # 1 D * 1 kV/cm = 0.016792 cm^-1
    assert eta_el_from_field(NAO, 1.0) == pytest.approx(7.88 * 0.0167920 / 0.462, rel=1e-5)


def test_operating_point_fields():
    assert field_from_eta_m(NAO, 2.63) == pytest.approx(1.302, rel=5e-3)
    assert field_from_eta_m(NAO, 2.63 * 1.1) == pytest.approx(1.432, rel=5e-3)


def test_dipole_coupling_at_500nm():
    # mu^2 / (4 pi eps0 r^3) for 7.88 D at 500 nm, evaluated by hand in SI units
    mu = 7.88 * 3.33564e-30
    e = mu * mu / (4 * math.pi * 8.8541878128e-12 * (500e-9) ** 3)
    cm1 = e / (6.62607015e-34 * 2.99792458e10)
    assert xi_from_geometry(NAO, 500.0) == pytest.approx(cm1, rel=1e-5)
    assert xi_from_geometry(NAO, 250.0) == pytest.approx(8 * cm1, rel=1e-5)


def test_frequency_conversions_and_formatting():
    assert ghz_to_cm1(cm1_to_ghz(0.462)) == pytest.approx(0.462)
    assert cm1_to_ghz(1.0) == pytest.approx(29.9792458)
    assert format_frequency(36.368) == {"value": 36.368, "unit": "GHz"}
    assert format_frequency(0.198429) == {"value": 198.429, "unit": "MHz"}
    assert format_frequency(2.461e-6)["unit"] == "kHz"
    assert format_frequency(1.662e-9) == {"value": 1.662, "unit": "Hz"}


def test_invalid_inputs():
    with pytest.raises(UnitsError):
        MoleculeParams(B=0.0)
    with pytest.raises(UnitsError):
        eta_m_from_field(NAO, -1.0)
    with pytest.raises(UnitsError):
        xi_from_geometry(NAO, 0.0)
    with pytest.raises(UnitsError):
        field_from_eta_el(MoleculeParams(mu=0.0), 1.0)
