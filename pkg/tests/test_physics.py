import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aloof.config import parse_list, parse_quantity, parse_sections
from aloof.errors import ConfigError, DomainError
from aloof.physics import (CODATA, BeamParams, InteractionGeometry, Material, PhysicalConstants,
                           beam_velocity, coherence_length, de_broglie_wavelength,
                           fermi_wavevector_from_density, get_material, load_materials,
                           parse_materials)


def test_constants_positive_and_consistent():
    for f in dataclasses.fields(CODATA):
        assert getattr(CODATA, f.name) > 0
    assert CODATA.planck == pytest.approx(2 * math.pi * CODATA.reduced_planck, rel=1e-12)


def test_constants_read_only():
    with pytest.raises(dataclasses.FrozenInstanceError):
        CODATA.planck = 1.0
    with pytest.raises(DomainError):
        PhysicalConstants(planck=-1.0)


def test_velocity_and_wavelength_at_1kV():
    # closed-form oracles written out with the CODATA values
    e, me, h = 1.602176634e-19, 9.1093837015e-31, 6.62607015e-34
    v = math.sqrt(2 * e * 1000.0 / me)
    lam = h / math.sqrt(2 * me * e * 1000.0)
    assert beam_velocity(1000.0) == pytest.approx(v, rel=1e-9)
    assert beam_velocity(1000.0) == pytest.approx(1.8755e7, rel=1e-4)
    assert de_broglie_wavelength(1000.0) == pytest.approx(lam, rel=1e-9)
    assert de_broglie_wavelength(1000.0) == pytest.approx(3.878e-11, rel=1e-3)


def test_power_law_scalings():
    assert beam_velocity(4000.0) == pytest.approx(2 * beam_velocity(1000.0), rel=1e-14)
    assert de_broglie_wavelength(4000.0) == pytest.approx(de_broglie_wavelength(1000.0) / 2,
                                                          rel=1e-14)
    assert coherence_length(1000.0, 0.754) == pytest.approx(coherence_length(1000.0, 0.377) / 2,
                                                            rel=1e-14)
    assert beam_velocity(1e-12) < 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 1e6))
def test_unit_roundtrip_over_decades(u):
    lam = de_broglie_wavelength(u)
    v = beam_velocity(u)
    assert lam * math.sqrt(u) == pytest.approx(de_broglie_wavelength(1.0), rel=1e-12)
    assert v / math.sqrt(u) == pytest.approx(beam_velocity(1.0), rel=1e-12)
    # momentum m v = h / lambda
    assert CODATA.electron_mass * v == pytest.approx(CODATA.planck / lam, rel=1e-12)
    assert coherence_length(u, 1.0) / u**0.5 == pytest.approx(coherence_length(1.0, 1.0), rel=1e-12)
    assert v < CODATA.light_speed or u > 2e5


def test_coherence_length_reference_value():
    lc = coherence_length(1000.0, 0.377)
    assert 59e-9 <= lc <= 73e-9
    assert abs(lc - 66e-9) / 66e-9 <= 0.02


def test_coherence_length_band_edges():
    # l_c scales as 1/dE, so the lower energy edge maps to 65.49 * 377/337 = 73.26 nm
    assert coherence_length(1000.0, 0.337) == pytest.approx(
        coherence_length(1000.0, 0.377) * 0.377 / 0.337, rel=1e-14)
    for de in (0.337, 0.417):
        assert 59e-9 <= coherence_length(1000.0, de) <= 73e-9


@pytest.mark.parametrize("bad", [0.0, -5.0])
def test_kinematics_domain(bad):
    with pytest.raises(DomainError):
        beam_velocity(bad)
    with pytest.raises(DomainError):
        de_broglie_wavelength(bad)
    with pytest.raises(DomainError):
        coherence_length(1000.0, bad)


def test_beam_params():
    b = BeamParams(1000.0)
    assert b.kinetic_energy == pytest.approx(1000.0 * CODATA.elementary_charge)
    assert b.velocity < CODATA.light_speed
    assert b.coherence_length == coherence_length(1000.0, 0.377)
    with pytest.raises(DomainError):
        BeamParams(1000.0, 0.0)


def test_bundled_materials():
    mats = load_materials()
    si, au = mats["silicon-n-doped"], mats["gold"]
    assert si.resistivity == pytest.approx(1.5e-2, rel=1e-15)
    assert au.resistivity == pytest.approx(2.2e-8, rel=1e-15)
    assert au.conductivity / si.conductivity == pytest.approx(6.8e5, rel=0.01)
    for m in (si, au):
        assert m.conductivity * m.resistivity == pytest.approx(1.0, rel=1e-10)
        assert m.has_machnikowski_params
        assert m.resolved_howie_cutoff() > 0
    assert get_material("si") is not None and get_material("Au").name == "gold"


def test_material_invariants():
    with pytest.raises(DomainError):
        Material("x", resistivity=0.0)
    with pytest.raises(DomainError):
        Material("x", resistivity=1.0, temperature=-1.0)
    with pytest.raises(DomainError):
        Material("x", resistivity=1.0, fermi_wavevector=0.0)
    m = Material("x", resistivity=2.0)
    assert m.conductivity == 0.5
    assert m.with_temperature(77.0).temperature == 77.0


def test_fermi_wavevector():
    n = 5.9e28
    assert fermi_wavevector_from_density(n) == pytest.approx((3 * math.pi**2 * n) ** (1 / 3))


def test_material_file_units_and_line_numbers(tmp_path):
    text = "# c\n[material m1]\nresistivity = 3 ohm_cm\ncarrier_density = 1e24\n"
    m = parse_materials(text)["m1"]
    assert m.resistivity == pytest.approx(0.03)
    assert m.fermi_wavevector == pytest.approx(fermi_wavevector_from_density(1e24))
    bad = "[material m2]\nresistivity = 3 ohm_inch\n"
    with pytest.raises(ConfigError) as info:
        parse_materials(bad, "f.ini")
    assert info.value.lineno == 2
    unknown = "[material m3]\nresistivity = 1\ncolour = red\n"
    with pytest.raises(ConfigError) as info:
        parse_materials(unknown)
    assert info.value.lineno == 3
    path = tmp_path / "mat.ini"
    path.write_text(text)
    assert get_material(str(path)).name == "m1"


def test_temperature_override_from_file():
    m = parse_materials("[material a]\nresistivity = 1\ntemperature = 77\n")["a"]
    assert m.temperature == 77.0


def test_quantity_parser():
    assert parse_quantity("9.4 um", "length") == pytest.approx(9.4e-6)
    assert parse_quantity("9.4um", "length") == pytest.approx(9.4e-6)
    assert parse_quantity("1 cm", "length") == 0.01
    assert parse_quantity("2.5", "length") == 2.5
    assert parse_quantity("1 kV", "voltage") == 1000.0
    assert parse_quantity("377 meV", "energy_ev") == pytest.approx(0.377)
    assert parse_list("9.3um, 6.5 um", "length") == pytest.approx([9.3e-6, 6.5e-6])
    for bad in ("9.4 furlong", "abc", "1.2.3 um"):
        with pytest.raises(ValueError):
            parse_quantity(bad, "length")


def test_section_parser_errors():
    with pytest.raises(ConfigError) as info:
        parse_sections("[a]\nkey = 1\nnot a pair\n", "x.ini")
    assert info.value.lineno == 3 and "x.ini" in str(info.value)
    with pytest.raises(ConfigError) as info:
        parse_sections("key = 1\n")
    assert info.value.lineno == 1


def test_geometry_invariants():
    g = InteractionGeometry(0.01, 9.4e-6, -3e-6, (1e-6, 2e-6))
    assert g.effective_height(1e-6) == pytest.approx(4e-6)
    with pytest.raises(DomainError):
        InteractionGeometry(0.0, 1e-6)
    with pytest.raises(DomainError):
        InteractionGeometry(0.01, -1e-6)
    with pytest.raises(DomainError):
        InteractionGeometry(0.01, 1e-6, 0.0, (2e-6, 1e-6))
    with pytest.raises(DomainError):
        InteractionGeometry(0.01, 1e-6, 5e-6, (1e-6,))
    with pytest.raises(DomainError):
        g.effective_height(-3e-6)
