import math

import numpy as np
import pytest

from dipolarray import lattice, model, shifts
from oracles import brute_force_light_shift, brute_force_triple, shift_map_reference

CONTROL = model.control_transitions()
CONTROL_LINES = [(t.wavelength, t.linewidth, t.j_upper) for t in CONTROL]
W_REF = 2 * math.pi * model.CONSTANTS.c / 636.39e-9


def test_zero_intensity_zero_shift():
    assert shifts.light_shift_direct((1, 1), 1, 0.0, W_REF + 1e11, CONTROL) == 0.0


def test_pi_light_m0_lacks_p1_pole():
    # <1 0|1 0 1 0> = 0 kills the J'=1 line for pi light on m=0
    p1_only = [t for t in CONTROL if t.j_upper == 1]
    val = shifts.light_shift_direct((1, 0), 0, 1.0, W_REF + 5e10, p1_only)
    assert val == 0.0


def test_direct_shift_against_brute_force_oracle(rng):
    for _ in range(25):
        omega = W_REF + rng.uniform(-8e11, 8e11)
        m = int(rng.integers(-1, 2))
        q = int(rng.integers(-1, 2))
        intensity = float(rng.uniform(0.1, 3e3))
        got = shifts.light_shift_direct((1, m), q, intensity, omega, CONTROL)
        want = brute_force_light_shift(1, m, q, intensity, omega, CONTROL_LINES)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-9)


def test_paper_sigma_plus_point_matches_oracle():
    omega = W_REF + 2 * math.pi * 2.7e10
    got = shifts.light_shift_direct((1, 1), 1, 1.0, omega, CONTROL)
    want = brute_force_light_shift(1, 1, 1, 1.0, omega, CONTROL_LINES)
    assert got == pytest.approx(want, rel=1e-12)
    assert got != 0.0


def test_pole_error():
    with pytest.raises(shifts.PoleError):
        shifts.light_shift_direct((1, 1), 0, 1.0, CONTROL[1].angular_frequency * (1 + 1e-9), CONTROL)


def test_sigma_swap_mirrors_sublevels(rng):
    # reversing the light helicity swaps the m = +-1 shifts
    for _ in range(10):
        omega = W_REF + rng.uniform(-5e11, 5e11)
        for m in (-1, 0, 1):
            plus = shifts.light_shift_direct((1, m), 1, 1.0, omega, CONTROL)
            minus = shifts.light_shift_direct((1, -m), -1, 1.0, omega, CONTROL)
            assert plus == pytest.approx(minus, rel=1e-12, abs=1e-12)


def test_triple_reproduces_direct_for_all_m_q(rng):
    pure_geometry = {
        -1: shifts.PolarizationGeometry(C=1.0, D=1.0),
        0: shifts.PolarizationGeometry(C=0.0, D=-2.0),
        1: shifts.PolarizationGeometry(C=-1.0, D=1.0),
    }
    for _ in range(100):
        omega = W_REF + rng.uniform(1e9, 5e11) * rng.choice([-1.0, 1.0])
        triple = shifts.polarizability_triple(omega, CONTROL)
        for q in (-1, 0, 1):
            for m in (-1, 0, 1):
                direct = shifts.light_shift_direct((1, m), q, 1.0, omega, CONTROL)
                decomposed = triple.shift(m, pure_geometry[q], 1.0)
                assert decomposed == pytest.approx(direct, rel=1e-10, abs=1e-10)


def test_triple_matches_independent_solve(rng):
    omega = W_REF + 3e11
    got = shifts.polarizability_triple(omega, CONTROL)
    scalar, vector, tensor = brute_force_triple(omega, CONTROL_LINES)
    assert got.scalar == pytest.approx(scalar, rel=1e-10)
    assert got.vector == pytest.approx(vector, rel=1e-10)
    assert got.tensor == pytest.approx(tensor, rel=1e-10)


def test_far_detuning_inverse_scaling():
    # all components fall off as 1/detuning once past the pole spacing
    base = 3e13  # rad/s, about ten line spacings
    t1 = shifts.polarizability_triple(W_REF + base, CONTROL)
    t2 = shifts.polarizability_triple(W_REF + 2 * base, CONTROL)
    for a, b in [(t1.scalar, t2.scalar), (t1.vector, t2.vector), (t1.tensor, t2.tensor)]:
        assert a / b == pytest.approx(2.0, rel=0.05)


def test_tensor_term_vanishes_at_magic_alignment():
    # |e_0|^2 = 1/3 gives D = 0 for any tensor polarizability
    pol = np.array([math.sqrt(1 / 3), math.sqrt(1 / 3), math.sqrt(1 / 3)])
    geom = shifts.PolarizationGeometry.from_polarization(pol)
    assert geom.D == pytest.approx(0.0, abs=1e-12)


def test_shift_odd_in_detuning_near_isolated_pole():
    # pole spacing ~ 2.8e12 rad/s between the two control lines
    spacing = abs(CONTROL[0].angular_frequency - CONTROL[1].angular_frequency)
    delta = 1e-3 * spacing
    w0 = CONTROL[1].angular_frequency
    up = shifts.light_shift_direct((1, 1), 1, 1.0, w0 + delta, CONTROL)
    down = shifts.light_shift_direct((1, 1), 1, 1.0, w0 - delta, CONTROL)
    assert up == pytest.approx(-down, rel=0.01)


def test_wavevector_for_cell_periodicity_paper_value():
    k = shifts.wavevector_for_cell_periodicity(0.64, detuning=2 * math.pi * 2.7e10)
    assert abs(k[0] - 0.64) < 0.01
    assert abs(k[1] - 0.77) < 0.01
    assert k[2] == 0.0
    assert np.linalg.norm(k) == pytest.approx(1.0, rel=1e-12)


def test_wavevector_large_dy_limit():
    k = shifts.wavevector_for_cell_periodicity(50.0)
    assert k[0] > 0.999
    assert 0 < k[1] < 0.05


def test_wavevector_infeasible():
    with pytest.raises(ValueError):
        shifts.wavevector_for_cell_periodicity(0.05)


def make_beam(**kw):
    defaults = dict(
        intensity=2.36e3,
        detuning=2 * math.pi * 2.7e10,
        wavevector_direction=shifts.wavevector_for_cell_periodicity(0.64, detuning=2 * math.pi * 2.7e10),
        phase=1.1,
        polarization=np.array([0.7 + 0.2j, -0.6 - 0.2j, 0.03]),
    )
    defaults.update(kw)
    return shifts.ControlBeam(**defaults)


def test_shift_map_cell_periodic():
    arr = lattice.build_bilayer(lattice.LatticeSpec(n_y=4, n_z=3))
    det = shifts.control_shift_map(make_beam(), arr, zeeman_splitting=-13.0)
    cell0 = det[:4]
    for c in range(1, 12):
        assert np.allclose(det[4 * c : 4 * c + 4], cell0, atol=1e-12)


def test_shift_map_four_distinct_triplets_match_oracle():
    arr = lattice.build_bilayer(lattice.LatticeSpec(n_y=2, n_z=2))
    beam = make_beam()
    det = shifts.control_shift_map(beam, arr, zeeman_splitting=-13.0)
    triplets = {tuple(np.round(row, 6)) for row in det[:4]}
    assert len(triplets) == 4
    k_vec = beam.wavenumber_si * model.UNITS.length_unit * beam.wavevector_direction
    for j in range(4):
        want = shift_map_reference(
            arr.positions[j],
            k_vec,
            beam.phase,
            beam.intensity,
            beam.polarization,
            shifts.QUANTIZATION_AXIS,
            beam.angular_frequency,
            CONTROL_LINES,
            zeeman=-13.0,
        )
        assert np.allclose(det[j], want / model.UNITS.rate_unit, rtol=1e-9, atol=1e-9)


def test_shift_map_node_atom_keeps_only_zeeman():
    direction = np.array([0.0, 1.0, 0.0])
    beam = shifts.ControlBeam(
        intensity=1e3,
        detuning=2 * math.pi * 2.7e10,
        wavevector_direction=direction,
        phase=math.pi / 2,  # node at the origin
        polarization=np.array([1.0, 0.0, 0.0]),
    )
    arr = lattice.from_positions([[0.0, 0.0, 0.0]])
    det = shifts.control_shift_map(beam, arr, zeeman_splitting=2.0)
    assert np.allclose(det[0], [-2.0, 0.0, 2.0], atol=1e-9)


def test_shift_map_linear_in_intensity():
    arr = lattice.build_bilayer(lattice.LatticeSpec(n_y=1, n_z=1))
    d1 = shifts.control_shift_map(make_beam(intensity=1e3), arr, zeeman_splitting=-13.0)
    d2 = shifts.control_shift_map(make_beam(intensity=2e3), arr, zeeman_splitting=-13.0)
    control1 = d1 - np.array([13.0, 0.0, -13.0])
    control2 = d2 - np.array([13.0, 0.0, -13.0])
    assert np.allclose(control2, 2 * control1, rtol=1e-12)


def test_polarizability_curve_poles_and_sign_flip():
    trap = model.trapping_transitions()
    wavelengths = np.linspace(395.03e-9, 445.03e-9, 501)
    values, valid = shifts.polarizability_curve(trap, wavelengths)
    assert valid.all()
    # sign flips across each listed pole
    for pole in (430.9e-9, 406.2e-9):
        below = values[np.searchsorted(wavelengths, pole) - 2]
        above = values[np.searchsorted(wavelengths, pole) + 2]
        assert below * above < 0
    # red of the strong 430.9 pole the polarizability is trap-attractive
    assert values[np.searchsorted(wavelengths, 434e-9)] > 0


def test_polarizability_curve_flags_pole_samples():
    trap = model.trapping_transitions()
    lam = np.array([430.9e-9 * (1 + 1e-9), 420e-9])
    values, valid = shifts.polarizability_curve(trap, lam)
    assert not valid[0] and np.isnan(values[0])
    assert valid[1]


def test_magic_crossing_with_synthetic_user_table():
    # the machinery finds a crossing of two user-supplied polarizability curves
    trap = model.trapping_transitions()
    other = model.load_transition_table(
        """
[[transition]]
label = "synthetic-partner"
wavelength_nm = 450.0
linewidth_per_s = 1.0e7
j_lower = 0
j_upper = 1
"""
    )
    lam = np.linspace(408e-9, 429e-9, 800)
    crossings = shifts.find_polarizability_crossing(trap, other, lam)
    assert crossings, "curves of different pole structure must cross between the poles"
    va, _ = shifts.polarizability_curve(trap, np.array(crossings[:1]))
    vb, _ = shifts.polarizability_curve(other, np.array(crossings[:1]))
    assert va[0] == pytest.approx(vb[0], rel=5e-2)


def test_trap_field_node_and_polarizations():
    lam_m = 415e-9
    tf = shifts.trap_field(np.array([lam_m / 4, 0.0, 0.0]), lam_m)
    assert np.allclose(tf.x_wave, 0.0, atol=1e-12)
    assert np.linalg.norm(tf.e1) == pytest.approx(1.0, rel=1e-12)
    assert np.linalg.norm(tf.e2) == pytest.approx(1.0, rel=1e-12)
    assert float(tf.e1 @ tf.e2) == pytest.approx(1.0 - 2 * 0.6**2, rel=1e-12)  # 0.28


def test_trap_field_kz_domain():
    with pytest.raises(ValueError):
        shifts.trap_field(np.zeros(3), 415e-9, k_z_fraction=1.5)


def test_control_beam_normalizes_polarization():
    beam = make_beam()
    assert np.linalg.norm(beam.polarization) == pytest.approx(1.0, rel=1e-12)
    assert np.linalg.norm(beam.wavevector_direction) == pytest.approx(1.0, rel=1e-12)
