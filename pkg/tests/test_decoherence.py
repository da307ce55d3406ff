import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aloof.decoherence import (HOWIE_ALPHA, MODELS, DecoherenceInput, MarkovOptions,
                               drude_permittivity, gamma_anglin, gamma_finite_temperature,
                               gamma_howie, gamma_machnikowski, gamma_markov,
                               machnikowski_geometric, machnikowski_material, machnikowski_zeta,
                               reflection_p, reflection_s, resolve_model, static_rp_derivative,
                               thermal_factor, thermal_occupation, visibility_curve,
                               write_curve_csv)
from aloof.decoherence import markov as markov_mod
from aloof.decoherence.curves import constant_curve, zero_separation_ok
from aloof.decoherence.surface import reflection_p_from_eps
from aloof.csvio import read_csv
from aloof.errors import ConfigError, ConvergenceError, DomainError
from aloof.physics import CODATA, BeamParams, InteractionGeometry, Material
from aloof.quadrature import QuadratureConfig
from aloof.special import exp_integral_e1

from conftest import simpson

UM = 1e-6


# -- surface response ---------------------------------------------------------------

def test_ohmic_permittivity(gold):
    eps = drude_permittivity(gold, 1e12)
    assert eps.imag == pytest.approx(1 / 2.2e-8 / (CODATA.vacuum_permittivity * 1e12), rel=1e-12)
    # sigma / (eps0 omega) = 4.545e7 / 8.854 = 5.13e6
    assert eps.imag == pytest.approx(5.134e6, rel=1e-3)
    assert drude_permittivity(gold, 2e12).imag == pytest.approx(eps.imag / 2, rel=1e-14)
    insulator = Material("ins", resistivity=1e30, background_permittivity=4.0)
    assert drude_permittivity(insulator, 1e12) == pytest.approx(4.0)
    with pytest.raises(DomainError):
        drude_permittivity(gold, 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e6, 1e16), st.booleans())
def test_passivity(omega, full, ):
    for rho in (1.5e-2, 2.2e-8):
        m = Material("m", resistivity=rho, drude_damping=1e13, background_permittivity=3.0)
        eps = drude_permittivity(m, omega, full_drude=full)
        assert eps.imag > 0
        # near-field passivity is Im r_p >= 0; |r_p| may exceed 1 when Re eps < 0
        assert reflection_p_from_eps(eps).imag >= 0
        if eps.real >= 0:
            assert abs(reflection_p_from_eps(eps)) <= 1.0 + 1e-12


def test_full_drude_shares_static_limit(silicon):
    w = 1e6
    a = drude_permittivity(silicon, w)
    b = drude_permittivity(silicon, w, full_drude=True)
    assert b.imag == pytest.approx(a.imag, rel=1e-6)


def test_reflection_limits(silicon):
    assert reflection_p_from_eps(1.0) == 0
    assert reflection_p_from_eps(complex(math.inf, 0)) == 1
    assert abs(reflection_p_from_eps(1e15 + 1e15j) - 1) < 1e-14
    v = 1.8755e7
    r = reflection_p(silicon, 1e6, 1e6 * v)
    eps = 11.7 + 1j / (1.5e-2 * CODATA.vacuum_permittivity * 1e6 * v)
    assert r == pytest.approx((eps - 1) / (eps + 1), rel=1e-14)
    assert r.imag > 0
    assert reflection_s(silicon, 1e6, 1e6 * v) == 0


def test_retarded_reflection_reduces_to_electrostatic(silicon):
    k, w = 1e6, 1e12
    rp = reflection_p(silicon, k, w, retarded=True)
    # corrections are of order eps (omega / c k)^2 ~ 1e-4 here
    assert rp == pytest.approx(reflection_p(silicon, k, w), rel=1e-4)
    assert abs(reflection_s(silicon, k, w, retarded=True)) < 1e-4


def test_thermal_occupation():
    T = 293.0
    w = math.log(2) * CODATA.boltzmann * T / CODATA.reduced_planck
    assert thermal_occupation(w, T) == pytest.approx(1.0, rel=1e-13)
    assert thermal_factor(1e16, T) == pytest.approx(1.0, abs=1e-12)
    small = 1e9
    x = CODATA.reduced_planck * small / (CODATA.boltzmann * T)
    assert thermal_factor(small, T) == pytest.approx(2 / x, rel=1e-5)
    assert thermal_factor(small, T) == pytest.approx(2 * thermal_occupation(small, T) + 1,
                                                     rel=1e-12)
    with pytest.raises(DomainError):
        thermal_occupation(0.0, T)


def test_static_rp_derivative_is_low_frequency_slope(silicon, gold):
    for m in (silicon, gold):
        if m.background_permittivity != 1.0:
            continue
        w = 1e-3
        slope = reflection_p_from_eps(drude_permittivity(m, w)).imag / w
        assert slope == pytest.approx(static_rp_derivative(m), rel=1e-6)
    assert static_rp_derivative(gold) == pytest.approx(2 * CODATA.vacuum_permittivity * 2.2e-8)


# -- closed forms -----------------------------------------------------------------------

def test_interaction_time(make_input, silicon):
    inp = make_input(silicon, 9.4 * UM)
    assert inp.interaction_time == pytest.approx(0.01 / inp.beam.velocity, rel=1e-12)


def test_anglin_single_line_oracle(make_input, silicon):
    inp = make_input(silicon, 9.4 * UM)
    e, kB, h = 1.602176634e-19, 1.380649e-23, 6.62607015e-34
    v = math.sqrt(2 * e * 1000.0 / 9.1093837015e-31)
    oracle = math.pi * e**2 * kB * 293.0 * 1.5e-2 * 0.01 * (9.4e-6) ** 2 / (4 * h**2 * v * 1e-15)
    assert gamma_anglin(inp, 10 * UM) == pytest.approx(oracle, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 50), st.floats(0.5, 60))
def test_anglin_scalings(dx_um, z_um):
    from aloof.physics import get_material
    si = get_material("silicon")
    beam = BeamParams(1000.0)
    inp = DecoherenceInput(si, beam, InteractionGeometry(0.01, dx_um * UM))
    g = gamma_anglin(inp, z_um * UM)
    assert gamma_anglin(inp.with_separation(2 * dx_um * UM), z_um * UM) == pytest.approx(4 * g, rel=1e-12)
    assert gamma_anglin(inp, 2 * z_um * UM) == pytest.approx(g / 8, rel=1e-12)
    hot = inp.with_material(si.with_temperature(586.0))
    assert gamma_anglin(hot, z_um * UM) == pytest.approx(2 * g, rel=1e-12)
    long = DecoherenceInput(si, beam, InteractionGeometry(0.02, dx_um * UM))
    assert gamma_anglin(long, z_um * UM) == pytest.approx(2 * g, rel=1e-12)


def test_anglin_zero_separation(make_input, silicon):
    assert gamma_anglin(make_input(silicon, 0.0), 5 * UM) == 0.0


def test_finite_temperature(make_input, silicon, gold):
    si = make_input(silicon, 9.4 * UM)
    zs = np.linspace(0.5, 2.0, 7) * UM
    au = make_input(gold, 9.4 * UM)
    ratio = gamma_finite_temperature(si, 5 * UM) / gamma_finite_temperature(au, 5 * UM)
    assert ratio == pytest.approx(1.5e-2 / 2.2e-8, rel=1e-12)
    assert gamma_finite_temperature(si.with_separation(0.0), 5 * UM) == 0.0
    # with the plate length in the bracket and z << L, Gamma z is constant
    gz = [gamma_finite_temperature(si, z, bracket_length=0.01) * z for z in zs]
    assert max(gz) / min(gz) - 1 < 1e-3
    assert gamma_finite_temperature(si, 5 * UM, bracket_length=1e-12) < 1e-10
    # the override only rescales the amplitude
    g1 = gamma_finite_temperature(si, 5 * UM, rp_derivative=1e-12)
    g2 = gamma_finite_temperature(si, 5 * UM, rp_derivative=2e-12)
    assert g2 == pytest.approx(2 * g1, rel=1e-14)


def brute_geometric(xi):
    # Simpson on [-1e4, 1e4] plus the u^-2 tail ln(1 + xi^2/4) / u^2
    a = xi * xi / 4
    cut = 1e4
    body = simpson(lambda u: np.log1p(a * u * u / (1 + u * u)) / (1 + u * u), -cut, cut, 4_000_000)
    return 0.5 * (body + 2 * math.log1p(a) / cut)


def test_machnikowski_geometric_oracles():
    assert machnikowski_geometric(0.0) == 0.0
    assert machnikowski_geometric(2.0) == pytest.approx(brute_geometric(2.0), rel=1e-7)
    for xi in (0.3, 1.0, 5.0, 40.0):
        closed = math.pi * math.log((1 + math.sqrt(1 + xi * xi / 4)) / 2)
        assert machnikowski_geometric(xi) == pytest.approx(closed, rel=1e-10)
        assert machnikowski_geometric(-xi) == machnikowski_geometric(xi)


def brute_material(zeta, n=200_000):
    # endpoint-refined mesh u = (1 - cos(pi t))/2 clusters nodes at both ends
    def integrand(t):
        u = 0.5 * (1 - np.cos(math.pi * t))
        du = 0.5 * math.pi * np.sin(math.pi * t)
        u = np.clip(u, 1e-300, 1 - 1e-16)
        b = 1 + (1 - u * u) / (2 * u) * np.log((1 + u) / (1 - u))
        f = u**-3 * (1 + zeta / (4 * math.pi * u * u) * b) ** -2
        return np.where((t > 0) & (t < 1), f * du, 0.0)
    # the t = 0 node gives inf * 0 and is masked by np.where
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        return zeta * zeta / 4 * simpson(integrand, 0.0, 1.0, n)


def test_machnikowski_material_oracles():
    assert machnikowski_material(1.0) == pytest.approx(brute_material(1.0), rel=1e-6)
    zs = np.linspace(0.1, 10, 12)
    mus = [machnikowski_material(z) for z in zs]
    assert all(b > a for a, b in zip(mus, mus[1:]))
    # small-zeta asymptote: the integral tends to 2 pi / zeta, so mu ~ pi zeta / 4
    assert machnikowski_material(1e-6) == pytest.approx(math.pi * 1e-6 / 4, rel=1e-4)
    with pytest.raises(DomainError):
        machnikowski_material(0.0)


def test_machnikowski_model(make_input, silicon):
    inp = make_input(silicon, 9.4 * UM)
    g = gamma_machnikowski(inp, 10 * UM)
    assert g > 0
    for k in (0.5, 2.0, 5.0):
        assert gamma_machnikowski(inp.with_separation(k * 9.4 * UM), k * 10 * UM) == \
            pytest.approx(g, rel=1e-9)
    hot = inp.with_material(silicon.with_temperature(2 * 293.0))
    assert gamma_machnikowski(hot, 10 * UM) == pytest.approx(2 * g, rel=1e-12)
    assert gamma_machnikowski(inp.with_separation(0.0), 10 * UM) == 0.0
    bare = inp.with_material(Material("bare", resistivity=1.0))
    with pytest.raises(ConfigError):
        gamma_machnikowski(bare, 10 * UM)
    zeta = machnikowski_zeta(silicon)
    assert zeta > 0


def test_howie_model(make_input, silicon):
    inp = make_input(silicon, 9.4 * UM)
    z1, z2 = 3 * UM, 17 * UM
    ratio = gamma_howie(inp, z1) / gamma_howie(inp, z2)
    oracle = exp_integral_e1(4 * z1 / (9.4 * UM)) / exp_integral_e1(4 * z2 / (9.4 * UM))
    assert ratio == pytest.approx(oracle, rel=1e-10)
    assert HOWIE_ALPHA == 2
    assert gamma_howie(inp, 1.0) == 0.0
    for z in np.linspace(1, 40, 10) * UM:
        assert gamma_howie(inp.with_separation(2 * 9.4 * UM), z) >= gamma_howie(inp, z)
    assert gamma_howie(inp.with_separation(0.0), 5 * UM) == 0.0


def test_effective_height_is_used(silicon, beam):
    shifted = DecoherenceInput(silicon, beam, InteractionGeometry(0.01, 9.4 * UM, -3 * UM))
    plain = DecoherenceInput(silicon, beam, InteractionGeometry(0.01, 9.4 * UM))
    assert gamma_anglin(shifted, 2 * UM) == pytest.approx(gamma_anglin(plain, 5 * UM), rel=1e-14)
    for fn in (gamma_anglin, gamma_howie, gamma_finite_temperature, gamma_machnikowski):
        with pytest.raises(DomainError):
            fn(plain, 0.0)


# -- Markov ------------------------------------------------------------------------------

def test_finite_temperature_reduces_to_anglin(make_input, silicon):
    inp = make_input(silicon, 0.1 * UM)
    z = 200 * UM
    assert gamma_finite_temperature(inp, z) == pytest.approx(gamma_anglin(inp, z), rel=1e-6)


@pytest.mark.parametrize("dx_um,z_um", [(9.3, 2.0), (9.3, 10.0), (3.2, 40.0)])
def test_markov_matches_finite_temperature_for_gold(make_input, gold, dx_um, z_um):
    # gold: eps >> 1 and hbar eta << k_B T over the whole integrand support
    inp = make_input(gold, dx_um * UM)
    g, _ = gamma_markov(inp, z_um * UM, options=MarkovOptions(use_gamma=False))
    assert g == pytest.approx(gamma_finite_temperature(inp, z_um * UM), rel=2e-3)


def test_markov_matches_anglin_in_good_conductor_limit(make_input, gold):
    # z >> dx and eps >> 1: the Markov integral reduces to the Anglin closed form
    inp = make_input(gold, 0.5 * UM)
    g, err = gamma_markov(inp, 50 * UM)
    assert g == pytest.approx(gamma_anglin(inp, 50 * UM), rel=2e-3)


def test_markov_zero_separation(make_input, silicon, gold):
    for m in (silicon, gold):
        g, _ = gamma_markov(make_input(m, 0.0), 5 * UM)
        assert abs(g) <= 1e-10


def test_markov_frozen_silicon_values(make_input, silicon):
    # values from the compiled backend at rel_tol 1e-6, frozen as regression oracles
    inp = make_input(silicon, 9.4 * UM)
    frozen = {2: 593.6673948013066, 10: 47.66278534278387, 40: 1.6146992997802811}
    for z, ref in frozen.items():
        g, err = gamma_markov(inp, z * UM)
        assert g == pytest.approx(ref, rel=2e-4)


@pytest.mark.parametrize("z_um", [2, 5, 10, 20, 40])
def test_markov_tolerance_monotonicity(make_input, silicon, z_um):
    inp = make_input(silicon, 9.4 * UM)
    g1, e1 = gamma_markov(inp, z_um * UM)
    tight = replace(markov_mod.DEFAULT_CONFIG, relative_tolerance=1e-6, absolute_tolerance=1e-14)
    g2, _ = gamma_markov(inp, z_um * UM, tight)
    assert abs(g1 - g2) < e1


def test_backends_agree(make_input, silicon):
    if "compiled" not in markov_mod.available_backends():
        pytest.skip("compiled kernel not built")
    inp = make_input(silicon, 6.5 * UM)
    for opts in (MarkovOptions(), MarkovOptions(use_gamma=False), MarkovOptions(fresnel=True),
                 MarkovOptions(full_drude=True)):
        a, _ = gamma_markov(inp, 7 * UM, options=opts, backend="compiled")
        b, _ = gamma_markov(inp, 7 * UM, options=opts, backend="python")
        assert a == pytest.approx(b, rel=1e-12)


def test_backend_switch():
    prev = markov_mod.set_backend("python")
    try:
        assert markov_mod.get_backend() == "python"
    finally:
        markov_mod.set_backend(prev)
    with pytest.raises(ValueError):
        markov_mod.set_backend("fortran")


def test_markov_options_are_small_corrections(make_input, silicon):
    inp = make_input(silicon, 9.4 * UM)
    base, _ = gamma_markov(inp, 10 * UM)
    no_gamma, _ = gamma_markov(inp, 10 * UM, options=MarkovOptions(use_gamma=False))
    fresnel, _ = gamma_markov(inp, 10 * UM, options=MarkovOptions(fresnel=True))
    assert abs(no_gamma / base - 1) < 5e-3
    assert abs(fresnel / base - 1) < 5e-3


def test_markov_convergence_error_carries_estimate(make_input, silicon):
    cfg = QuadratureConfig(relative_tolerance=1e-15, absolute_tolerance=1e-300,
                           max_subdivisions=30, min_phi_panels=2)
    with pytest.raises(ConvergenceError) as info:
        gamma_markov(make_input(silicon, 9.4 * UM), 5 * UM, cfg)
    assert info.value.estimate > 0


def test_markov_ordering(make_input, silicon, gold):
    si, _ = gamma_markov(make_input(silicon, 9.3 * UM), 5 * UM)
    au, _ = gamma_markov(make_input(gold, 9.3 * UM), 5 * UM)
    assert si > au
    near, _ = gamma_markov(make_input(silicon, 9.4 * UM), 3 * UM)
    far, _ = gamma_markov(make_input(silicon, 9.4 * UM), 6 * UM)
    assert near > far


# -- curves ------------------------------------------------------------------------------

def test_model_tags():
    assert MODELS == ("markov", "finite_temperature", "anglin", "machnikowski", "howie")
    assert resolve_model("FT") == "finite_temperature"
    assert resolve_model("finite-temperature") == "finite_temperature"
    with pytest.raises(DomainError):
        resolve_model("bogus")


@pytest.mark.parametrize("model", MODELS)
def test_curve_invariants(model, make_input, gold):
    inp = make_input(gold, 9.3 * UM)
    z = np.linspace(1, 40, 12) * UM
    c = visibility_curve(model, inp, z_grid=z)
    np.testing.assert_allclose(c.visibility_values, np.exp(-c.gamma_values), rtol=1e-14)
    assert np.all(c.gamma_values >= 0)
    assert np.all(c.visibility_values <= 1)
    # exp(-Gamma) is positive but underflows to 0 for Gamma > ~745
    assert np.all(c.visibility_values[c.gamma_values < 700] > 0)
    assert np.all(np.diff(c.visibility_values) >= 0)
    assert c.converged
    zero = visibility_curve(model, inp.with_separation(0.0), z_grid=z)
    assert zero_separation_ok(zero, 1e-10)


def test_gold_anglin_plateau(make_input, gold):
    c = visibility_curve("anglin", make_input(gold, 9.3 * UM), z_grid=np.linspace(5, 40, 36) * UM)
    assert np.all(c.visibility_values > 0.99)


def test_curve_threads_match_serial(make_input, silicon):
    inp = make_input(silicon, 9.4 * UM)
    z = np.linspace(2, 40, 8) * UM
    a = visibility_curve("markov", inp, z_grid=z)
    b = visibility_curve("markov", inp, z_grid=z, workers=4)
    np.testing.assert_array_equal(a.gamma_values, b.gamma_values)


def test_curve_nonconverged_points_flagged(make_input, silicon):
    cfg = QuadratureConfig(relative_tolerance=1e-15, absolute_tolerance=1e-300,
                           max_subdivisions=30, min_phi_panels=2)
    c = visibility_curve("markov", make_input(silicon, 9.4 * UM), cfg, z_grid=[5 * UM, 10 * UM])
    assert c.flags == ["nonconverged", "nonconverged"]
    assert np.all(c.gamma_values > 0)
    assert not c.converged


def test_curve_interpolation_and_csv(tmp_path, make_input, silicon):
    inp = make_input(silicon, 9.4 * UM)
    c = visibility_curve("anglin", inp, z_grid=np.linspace(1, 40, 40) * UM)
    assert c.interpolate(c.z_values[3]) == c.visibility_values[3]
    with pytest.raises(DomainError):
        c.interpolate(50 * UM)
    p = write_curve_csv(c, tmp_path / "c.csv", {"seed": 1})
    prov, header, rows = read_csv(p)
    assert header == ["z_m", "gamma", "visibility", "error_estimate", "flag"]
    assert prov["material"] == "silicon-n-doped" and prov["model"] == "anglin"
    assert float(prov["path_separation_m"]) == 9.4 * UM
    assert len(rows) == 40
    assert float(rows[5][2]) == c.visibility_values[5]
    flat = constant_curve(c.z_values)
    assert np.all(flat.visibility_values == 1.0)
