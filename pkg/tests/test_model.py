import math

import numpy as np
import pytest

from dipolarray import model
from oracles import ladder_clebsch_gordan

SR_MASS = model.CONSTANTS.mass_sr88


def test_recoil_frequency_sr88_magic_line():
    # 5.6 kHz for the 636.39 nm control line
    nu = model.recoil_frequency(SR_MASS, 636.39e-9)
    assert abs(nu - 5.6e3) < 0.1e3


def test_recoil_frequency_double_mass():
    nu = model.recoil_frequency(2 * SR_MASS, 636.39e-9)
    assert nu == pytest.approx(model.recoil_frequency(SR_MASS, 636.39e-9) / 2, rel=1e-12)


def test_recoil_frequency_long_wavelength_limit():
    assert model.recoil_frequency(SR_MASS, 1.0) < 1e-12 * model.recoil_frequency(SR_MASS, 636e-9)


def test_recoil_frequency_inverse_square_scaling():
    lam = 500e-9
    ratio = model.recoil_frequency(SR_MASS, lam) / model.recoil_frequency(SR_MASS, 2 * lam)
    assert ratio == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("mass,lam", [(-1.0, 500e-9), (SR_MASS, 0.0), (0.0, 500e-9)])
def test_recoil_frequency_domain_errors(mass, lam):
    with pytest.raises(ValueError):
        model.recoil_frequency(mass, lam)


def test_linewidth_dipole_round_trip():
    k = 2 * math.pi / 2.6e-6
    dipole = model.dipole_from_linewidth(1.45e5, k)
    back = model.linewidth_from_dipole(dipole, k)
    assert back == pytest.approx(1.45e5, rel=1e-12)


def test_linewidth_zero_dipole():
    assert model.linewidth_from_dipole(0.0, 1e6) == 0.0


def test_linewidth_quadratic_in_dipole():
    k = 2 * math.pi / 2.6e-6
    one = model.linewidth_from_dipole(1e-30, k)
    two = model.linewidth_from_dipole(2e-30, k)
    assert two == pytest.approx(4 * one, rel=1e-12)


def test_dipole_from_negative_linewidth_rejected():
    with pytest.raises(ValueError):
        model.dipole_from_linewidth(-1.0, 1e6)


def test_cg_selection_rule():
    assert model.clebsch_gordan(1, 1, 1, 1, 2, 0) == 0.0
    assert model.clebsch_gordan(2, 1, 1, -1, 3, 1) == 0.0


def test_cg_known_zero_pi_coupling():
    # forces the pi-light m=0 null coupling in the shift module
    assert model.clebsch_gordan(1, 0, 1, 0, 1, 0) == 0.0


def test_cg_against_ladder_oracle():
    for j1, j2 in [(1, 1), (2, 1), (3, 2)]:
        table = ladder_clebsch_gordan(j1, j2)
        for (m1, m2, j, m), expected in table.items():
            got = model.clebsch_gordan(j1, m1, j2, m2, j, m)
            assert got == pytest.approx(expected, abs=1e-12)


def test_cg_invalid_quantum_numbers_give_zero():
    assert model.clebsch_gordan(1, 2, 1, 0, 1, 2) == 0.0  # |m1| > j1
    assert model.clebsch_gordan(1, 0, 1, 0, 5, 0) == 0.0  # triangle violated


def test_cg_orthogonality_exhaustive():
    # sum_{m1,m2} <j m|j1 m1 j2 m2><j' m'|j1 m1 j2 m2> = delta_{jj'} delta_{mm'}
    for j1 in range(0, 4):
        for j2 in range(0, 4 - j1 + 1):
            js = range(abs(j1 - j2), j1 + j2 + 1)
            for j in js:
                for jp in js:
                    for m in range(-j, j + 1):
                        for mp in range(-jp, jp + 1):
                            total = sum(
                                model.clebsch_gordan(j1, m1, j2, m2, j, m)
                                * model.clebsch_gordan(j1, m1, j2, m2, jp, mp)
                                for m1 in range(-j1, j1 + 1)
                                for m2 in range(-j2, j2 + 1)
                            )
                            expected = 1.0 if (j == jp and m == mp) else 0.0
                            assert total == pytest.approx(expected, abs=1e-12)


def test_default_table_contains_trapping_rows():
    table = {(round(t.wavelength * 1e9, 2), t.linewidth) for t in model.default_transitions()}
    assert (430.9, 2e7) in table
    assert (406.2, 5e6) in table


def test_default_table_contains_control_rows():
    table = {(round(t.wavelength * 1e9, 2), t.linewidth) for t in model.default_transitions()}
    assert (636.99, 9e6) in table
    assert (636.39, 1.85e6) in table
    assert (636.12, 4e4) in table


def test_empty_source_gives_empty_list():
    assert model.load_transition_table("") == []


def test_table_round_trip_bit_identical():
    records = model.default_transitions()
    again = model.load_transition_table(model.dump_transition_table(records))
    assert again == records
    twice = model.load_transition_table(model.dump_transition_table(again))
    assert model.dump_transition_table(twice) == model.dump_transition_table(records)


def test_table_parse_error_has_context():
    with pytest.raises(model.TransitionTableError):
        model.load_transition_table("[[transition]]\nlabel = \n")
    with pytest.raises(model.TransitionTableError, match="missing fields"):
        model.load_transition_table('[[transition]]\nlabel = "x"\n')
    with pytest.raises(model.TransitionTableError, match="entry 0"):
        model.load_transition_table(
            '[[transition]]\nlabel="x"\nwavelength_nm=-1\nlinewidth_per_s=1\nj_lower=0\nj_upper=1\n'
        )


def test_table_rejects_unknown_fields():
    with pytest.raises(model.TransitionTableError, match="unknown"):
        model.load_transition_table(
            '[[transition]]\nlabel="x"\nwavelength_nm=500\nlinewidth_per_s=1\nj_lower=0\nj_upper=1\nbogus=3\n'
        )


def test_transition_invariants():
    with pytest.raises(ValueError):
        model.TransitionRecord("bad", 500e-9, 1e6, 0, 2)  # |dJ| > 1
    with pytest.raises(ValueError):
        model.TransitionRecord("bad", -1.0, 1e6, 0, 1)


def test_unit_system_defaults():
    assert model.UNITS.length_unit == pytest.approx(2.6e-6)
    assert model.UNITS.rate_unit == pytest.approx(1.45e5)
    with pytest.raises(ValueError):
        model.UnitSystem(length_unit=-1.0)
