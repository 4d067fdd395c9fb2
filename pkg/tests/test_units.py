import math

import pytest
from hypothesis import given, strategies as st

from rydephase.errors import InvalidArgument
from rydephase.units import UNITS, format_unit_table, parse_frequency


def test_rad_s_is_identity():
    assert parse_frequency("1rad_s") == 1.0


def test_two_pi_megahertz():
    assert parse_frequency("6 2pi_MHz") == pytest.approx(2 * math.pi * 6e6, rel=1e-15)
    assert parse_frequency("62pi_MHz") == parse_frequency("6 2pi_MHz")
    assert parse_frequency("6*2pi_MHz") == parse_frequency("6 2pi_MHz")


def test_plain_hertz_is_cyclic():
    assert parse_frequency("1Hz") == pytest.approx(6.283185, abs=1e-6)
    assert parse_frequency("1.6kHz") == pytest.approx(2 * math.pi * 1600)
    assert parse_frequency("0.75MHz") == parse_frequency("0.75 2pi_MHz")


def test_signs_and_exponents():
    assert parse_frequency("-2.0 2pi_MHz") == pytest.approx(-2 * math.pi * 2e6)
    assert parse_frequency("1e-3MHz") == pytest.approx(2 * math.pi * 1e3)


@pytest.mark.parametrize("text", ["5", "5 GHz", "MHz", "abc rad_s", "nan MHz", "inf Hz", ""])
def test_rejects_bad_input(text):
    with pytest.raises(InvalidArgument) as exc:
        parse_frequency(text)
    assert "rad_s" in str(exc.value)


def test_rejects_bare_numbers():
    with pytest.raises(InvalidArgument):
        parse_frequency(5.0)


@given(st.floats(-1e9, 1e9, allow_nan=False), st.sampled_from(sorted(UNITS)))
def test_round_trip_every_unit(value, unit):
    assert parse_frequency(f"{value!r} {unit}") == pytest.approx(value * UNITS[unit], rel=1e-15, abs=0)


def test_unit_table_lists_all_units():
    table = format_unit_table()
    for unit in UNITS:
        assert unit in table
    assert "6.283185" in table
