import math

import numpy as np
import pytest

from holstein_kpm.params import (
    CircuitParams,
    EffectiveParams,
    circuit_to_effective,
    dimensionless_coupling,
    effective_coupling,
    from_adiabaticity,
    hopping_amplitude,
    small_polaron_regime,
    stark_shift,
)

QED = dict(
    g_over_2pi=250e6,
    delta_over_2pi=5e9,
    xi_d_over_2pi=600e6,
    omega_delta_over_2pi=75e6,
)


def test_stark_shift_working_point():
    assert stark_shift(CircuitParams(**QED)) == pytest.approx(12.5e6, rel=1e-12)


def test_stark_shift_trivial_cases():
    zero = CircuitParams(**{**QED, "g_over_2pi": 0.0})
    assert stark_shift(zero) == 0.0
    equal = CircuitParams(
        g_over_2pi=1e9, delta_over_2pi=1e9, xi_d_over_2pi=0.0, omega_delta_over_2pi=75e6
    )
    assert stark_shift(equal) == pytest.approx(1e9)


def test_hopping_amplitude_flux_points():
    assert hopping_amplitude(1e9, 0.15, 0.0) == pytest.approx(2 * 1e9 * 0.15)
    assert hopping_amplitude(1e9, 0.15, 0.5) == pytest.approx(0.0, abs=1e-6)
    assert hopping_amplitude(1e9, 0.15, 1.0 / 3.0) == pytest.approx(1e9 * 0.15)


def test_hopping_amplitude_periodic_and_even():
    rng = np.random.default_rng(11)
    for flux in rng.uniform(-3, 3, size=40):
        base = hopping_amplitude(2e9, 0.12, flux)
        assert hopping_amplitude(2e9, 0.12, flux + 2.0) == pytest.approx(base, abs=1e-3)
        assert hopping_amplitude(2e9, 0.12, -flux) == pytest.approx(base, abs=1e-3)


def test_dimensionless_coupling_working_point():
    assert dimensionless_coupling(CircuitParams(**QED)) == pytest.approx(2.667, abs=1e-3)


def test_dimensionless_coupling_scaling():
    assert dimensionless_coupling(CircuitParams(**{**QED, "xi_d_over_2pi": 0.0})) == 0.0
    doubled = CircuitParams(**{**QED, "omega_delta_over_2pi": 150e6})
    assert dimensionless_coupling(doubled) == pytest.approx(0.667, abs=1e-3)


@pytest.mark.parametrize(
    "t_e,expected",
    [(600e6, 0.444), (300e6, 0.889), (150e6, 1.778), (75e6, 3.555), (37.5e6, 7.111)],
)
def test_effective_coupling_values(t_e, expected):
    g_h = dimensionless_coupling(CircuitParams(**QED))
    assert effective_coupling(g_h, 75e6, t_e) == pytest.approx(expected, abs=1e-3)


def test_effective_coupling_edge_cases():
    assert effective_coupling(0.0, 75e6, 100e6) == 0.0
    with pytest.raises(ValueError):
        effective_coupling(1.0, 75e6, 0.0)


def test_coupling_identity():
    # lambda_H * 2 t_e == g_H^2 * omega_delta to 1e-12 relative
    rng = np.random.default_rng(5)
    for _ in range(200):
        g_h = rng.uniform(0.0, 5.0)
        nu = rng.uniform(1e6, 1e9)
        t_e = rng.uniform(1e5, 1e10)
        lam = effective_coupling(g_h, nu, t_e)
        assert lam * 2.0 * t_e == pytest.approx(g_h**2 * nu, rel=1e-12)


@pytest.mark.parametrize("ratio,t_e", [(0.125, 600e6), (1.0, 75e6), (2.0, 37.5e6)])
def test_from_adiabaticity(ratio, t_e):
    eff = from_adiabaticity(ratio, 75e6, 2.667, n_sites=10, max_phonons=8)
    assert eff.t_e_over_2pi == pytest.approx(t_e, rel=1e-12)
    assert eff.adiabaticity_ratio == pytest.approx(ratio, rel=1e-12)


def test_from_adiabaticity_rejects_nonpositive():
    with pytest.raises(ValueError):
        from_adiabaticity(0.0, 75e6, 1.0, n_sites=4, max_phonons=2)
    with pytest.raises(ValueError):
        from_adiabaticity(-1.0, 75e6, 1.0, n_sites=4, max_phonons=2)


def test_small_polaron_flag_flips_near_028():
    g_h = dimensionless_coupling(CircuitParams(**QED))
    low = from_adiabaticity(0.27, 75e6, g_h, n_sites=10, max_phonons=8)
    high = from_adiabaticity(0.29, 75e6, g_h, n_sites=10, max_phonons=8)
    assert not small_polaron_regime(low)
    assert small_polaron_regime(high)


def test_circuit_to_effective_flux_route():
    circuit = CircuitParams(**QED, ej0_over_2pi=2e9, flux_ratio=1.0 / 3.0)
    eff = circuit_to_effective(circuit, n_sites=4, max_phonons=2)
    assert eff.t_e_over_2pi == pytest.approx(2e9 * 0.15)
    assert eff.chi_over_2pi == pytest.approx(12.5e6)


def test_effective_params_validation():
    with pytest.raises(ValueError):
        EffectiveParams(t_e_over_2pi=1e6, g_h=1.0, omega_delta_over_2pi=75e6,
                        n_sites=3, max_phonons=2)
    with pytest.raises(ValueError):
        EffectiveParams(t_e_over_2pi=1e6, g_h=1.0, omega_delta_over_2pi=75e6,
                        n_sites=4, max_phonons=-1)
    # inconsistent explicit lambda_h is rejected
    with pytest.raises(ValueError):
        EffectiveParams(t_e_over_2pi=75e6, g_h=1.0, omega_delta_over_2pi=75e6,
                        n_sites=4, max_phonons=2, lambda_h=0.9)
    ok = EffectiveParams(t_e_over_2pi=75e6, g_h=1.0, omega_delta_over_2pi=75e6,
                         n_sites=4, max_phonons=2)
    assert ok.lambda_h == pytest.approx(0.5)


def test_atomic_limit_lambda_is_infinite():
    eff = EffectiveParams(t_e_over_2pi=0.0, g_h=1.5, omega_delta_over_2pi=75e6,
                          n_sites=4, max_phonons=2)
    assert math.isinf(eff.lambda_h)
    assert math.isinf(eff.adiabaticity_ratio)


def test_dispersive_and_drive_ratios_recorded():
    circuit = CircuitParams(**QED)
    assert circuit.dispersive_ratio == pytest.approx(20.0)
    assert circuit.drive_ratio == pytest.approx(8.0)
