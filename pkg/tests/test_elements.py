import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from rispool import elements
from rispool.elements import (
    CAPACITANCE_MAX_F,
    CAPACITANCE_MIN_F,
    CAPACITANCE_RESET_F,
    CircuitConstants,
    ElementTuning,
    RisPanel,
    capacitance_grid,
    element_impedance,
    quantize_tuning,
    reflection_coefficient,
    reflection_vector,
)

from oracles import impedance_oracle, nearest_grid_oracle, reflection_oracle

CONSTS = CircuitConstants()
OMEGA = elements.DEFAULT_OMEGA_RAD_S


def oracle_z(c, r, omega=OMEGA):
    return impedance_oracle(c, r, omega, CONSTS.l1_h, CONSTS.l2_h)


def oracle_v(c, r, omega=OMEGA):
    return reflection_oracle(c, r, omega, CONSTS.l1_h, CONSTS.l2_h, CONSTS.z0_ohm)


def test_default_constants():
    assert CONSTS.l1_h == 2.5e-9
    assert CONSTS.l2_h == 0.7e-9
    assert CONSTS.z0_ohm == 377.0
    assert OMEGA == pytest.approx(2 * np.pi * 2.4e9)
    assert CAPACITANCE_MIN_F == 0.47e-12
    assert CAPACITANCE_MAX_F == 2.35e-12


def test_lossless_impedance_is_purely_reactive():
    z = element_impedance(ElementTuning(1.0e-12, resistance_ohm=0.0))
    assert abs(z.real) <= 1e-9 * abs(z)


@pytest.mark.parametrize("c_f", [0.47e-12, 2.35e-12])
def test_impedance_matches_oracle_at_range_edges(c_f):
    z = element_impedance(ElementTuning(c_f, resistance_ohm=1.0))
    expected = oracle_z(c_f, 1.0)
    assert abs(z - expected) <= 1e-9 * abs(expected)


def test_lossless_reflection_has_unit_magnitude():
    for omega in (OMEGA, 2 * np.pi * 2.0e9, 2 * np.pi * 3.0e9):
        v = reflection_coefficient(ElementTuning(1.2e-12, resistance_ohm=0.0), omega=omega)
        assert abs(abs(v) - 1.0) < 1e-12


def test_reflection_varies_with_carrier_frequency():
    tuning = ElementTuning(1.2e-12, resistance_ohm=1.0)
    v1 = reflection_coefficient(tuning, omega=2 * np.pi * 2.4e9)
    v2 = reflection_coefficient(tuning, omega=2 * np.pi * 2.422e9)
    assert abs(v1 - v2) > 0
    assert v1 == pytest.approx(oracle_v(1.2e-12, 1.0, 2 * np.pi * 2.4e9), rel=1e-9)
    assert v2 == pytest.approx(oracle_v(1.2e-12, 1.0, 2 * np.pi * 2.422e9), rel=1e-9)


def test_reflection_sweep_continuity_and_resonance_dip():
    c = np.linspace(CAPACITANCE_MIN_F, CAPACITANCE_MAX_F, 64)
    v = elements.reflection_array(c, 1.0)
    expected = np.array([oracle_v(ci, 1.0) for ci in c])
    assert np.max(np.abs(v - expected) / np.abs(expected)) < 1e-9

    phase = np.unwrap(np.angle(v))
    assert np.max(np.abs(np.diff(phase))) < np.pi / 4

    amp = np.abs(v)
    interior_minima = [
        i for i in range(1, len(amp) - 1) if amp[i] < amp[i - 1] and amp[i] < amp[i + 1]
    ]
    assert len(interior_minima) == 1


def test_oracle_equivalence_on_dense_grid():
    c = np.linspace(CAPACITANCE_MIN_F, CAPACITANCE_MAX_F, 256)
    for r in (0.0, 1.0):
        z = elements.impedance_array(c, r)
        v = elements.reflection_array(c, r)
        for i, ci in enumerate(c):
            ze = oracle_z(ci, r)
            ve = oracle_v(ci, r)
            assert abs(z[i] - ze) <= 1e-9 * abs(ze)
            assert abs(v[i] - ve) <= 1e-9 * abs(ve)


@given(
    c=st.floats(CAPACITANCE_MIN_F, CAPACITANCE_MAX_F),
    r=st.floats(0.0, 100.0),
    f_ghz=st.floats(2.0, 3.0),
)
@settings(max_examples=200, deadline=None)
def test_passivity_property(c, r, f_ghz):
    v = reflection_coefficient(ElementTuning(c, r), omega=2 * np.pi * f_ghz * 1e9)
    assert abs(v) <= 1.0 + 1e-12


@given(c=st.floats(CAPACITANCE_MIN_F, CAPACITANCE_MAX_F), f_ghz=st.floats(2.0, 3.0))
@settings(max_examples=200, deadline=None)
def test_losslessness_property(c, f_ghz):
    v = reflection_coefficient(ElementTuning(c, 0.0), omega=2 * np.pi * f_ghz * 1e9)
    assert abs(abs(v) - 1.0) < 1e-12


def test_tuning_invariants_enforced():
    with pytest.raises(ValueError):
        ElementTuning(0.3e-12)
    with pytest.raises(ValueError):
        ElementTuning(3.0e-12)
    with pytest.raises(ValueError):
        ElementTuning(1.0e-12, resistance_ohm=-0.1)


def test_impedance_domain_errors():
    with pytest.raises(ValueError):
        elements.impedance_array(np.array([-1.0e-12]), 1.0)
    with pytest.raises(ValueError):
        elements.impedance_array(np.array([1.0e-12]), 1.0, omega=0.0)


def test_reflection_vector_uniform_panel():
    panel = RisPanel(ris_id="r1", n_elements=128)
    v = reflection_vector(panel)
    assert v.shape == (128,)
    assert np.all(v == v[0])


def test_reflection_vector_matches_per_element_oracle():
    panel = RisPanel(
        ris_id="r1",
        n_elements=2,
        resistance_ohm=1.0,
        capacitance_f=np.array([0.47e-12, 2.35e-12]),
    )
    v = reflection_vector(panel)
    assert v[0] == pytest.approx(oracle_v(0.47e-12, 1.0), rel=1e-9)
    assert v[1] == pytest.approx(oracle_v(2.35e-12, 1.0), rel=1e-9)


def test_empty_panel_rejected():
    with pytest.raises(ValueError):
        RisPanel(ris_id="r0", n_elements=0)


def test_panel_reset():
    panel = RisPanel(ris_id="r1", n_elements=4, capacitance_f=np.full(4, 1.0e-12))
    panel.reset(indices=[1, 3])
    assert panel.capacitance_f[0] == 1.0e-12
    assert panel.capacitance_f[1] == CAPACITANCE_RESET_F
    panel.reset()
    assert np.all(panel.capacitance_f == CAPACITANCE_RESET_F)


def test_quantize_grid_endpoint_maps_to_itself():
    out = quantize_tuning(ElementTuning(0.47e-12), levels=2)
    assert out.capacitance_f == 0.47e-12


def test_quantize_nearest_with_tie_to_lower():
    grid = capacitance_grid(2)
    out = quantize_tuning(ElementTuning(1.40e-12, resistance_ohm=1.0), levels=2)
    assert out.capacitance_f == nearest_grid_oracle(1.40e-12, list(grid))
    assert out.capacitance_f == 0.47e-12
    assert out.resistance_ohm == 1.0
    # Exact midpoint resolves to the lower grid point.
    mid = (0.47e-12 + 2.35e-12) / 2
    if (2.35e-12 - mid) == (mid - 0.47e-12):
        assert quantize_tuning(ElementTuning(mid), levels=2).capacitance_f == 0.47e-12


@pytest.mark.parametrize("levels", [2, 3, 7, 16])
def test_quantize_matches_nearest_grid_oracle(levels):
    grid = list(capacitance_grid(levels))
    for c in np.linspace(CAPACITANCE_MIN_F, CAPACITANCE_MAX_F, 101):
        got = quantize_tuning(ElementTuning(float(c)), levels).capacitance_f
        expected = nearest_grid_oracle(float(c), grid)
        if abs(c - expected) == abs(c - got):
            continue  # equidistant pair straddling float rounding: either is nearest
        assert got == expected


def test_quantize_continuous_mode_is_identity():
    t = ElementTuning(1.0e-12)
    assert quantize_tuning(t, levels=0) is t


@given(c=st.floats(CAPACITANCE_MIN_F, CAPACITANCE_MAX_F), levels=st.integers(2, 64))
@settings(max_examples=200, deadline=None)
def test_quantize_idempotent(c, levels):
    once = quantize_tuning(ElementTuning(c), levels)
    twice = quantize_tuning(once, levels)
    assert once.capacitance_f == twice.capacitance_f


def test_quantize_rejects_single_level():
    with pytest.raises(ValueError):
        quantize_tuning(ElementTuning(1.0e-12), levels=1)
