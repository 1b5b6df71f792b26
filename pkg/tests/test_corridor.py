import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etagap.corridor import (
    PAPER_SECTIONS,
    CorridorError,
    FeasibilityError,
    OverlapError,
    Section,
    SectionError,
    build_corridor,
    derive_travel_times,
    schedule_for,
)


@pytest.fixture
def paper():
    return build_corridor(PAPER_SECTIONS, 300)


def test_travel_time_first_reference_section():
    (tau,) = derive_travel_times([Section(920, 60, 85)])
    assert tau == pytest.approx(920 / 72.5, rel=1e-12)
    assert round(tau, 1) == 12.7


def test_travel_time_equal_limits():
    assert derive_travel_times([Section(100, 10, 10)]) == [10.0]


def test_travel_time_last_reference_section():
    (tau,) = derive_travel_times([Section(220, 15, 30)])
    assert tau == pytest.approx(220 / 22.5, rel=1e-12)
    assert round(tau, 1) == 9.8


def test_reference_travel_times_round_to_caption(paper):
    assert [round(t, 1) for t in paper.travel_times_s] == [12.7, 9.9, 9.7, 9.8]


def test_cumulative_lengths(paper):
    assert paper.cum_lengths_m == (0.0, 920.0, 1440.0, 1780.0, 2000.0)


def test_trivial_bound(paper):
    assert paper.total_time_s == pytest.approx(42.086, abs=5e-4)
    assert round(paper.total_time_s, 1) == 42.1


@pytest.mark.parametrize(
    "section, match",
    [
        (Section(-1, 10, 20), "length_m"),
        (Section(100, 0, 20), "v_min"),
        (Section(100, 30, 20), "v_min <= v_max"),
        (Section(math.nan, 10, 20), "finite"),
    ],
)
def test_invalid_section_names_index(section, match):
    with pytest.raises(SectionError, match=match) as info:
        build_corridor([Section(100, 10, 20), section])
    assert info.value.index == 1
    assert "section 1" in str(info.value)


def test_disjoint_speed_intervals():
    with pytest.raises(OverlapError):
        build_corridor([Section(100, 10, 20), Section(100, 30, 40)])


def test_touching_speed_intervals_overlap():
    build_corridor([Section(100, 10, 20), Section(100, 20, 40)])


def test_imposed_travel_time_too_short():
    with pytest.raises(FeasibilityError, match="v_max"):
        build_corridor([Section(100, 10, 20)], travel_times=[4])


def test_imposed_travel_time_too_long():
    with pytest.raises(FeasibilityError, match="v_min"):
        build_corridor([Section(100, 10, 20)], travel_times=[11])


def test_imposed_travel_time_at_limit_is_feasible():
    spec = build_corridor([Section(100, 10, 20)], travel_times=[5])
    assert spec.travel_times_s == (5.0,)


def test_travel_time_count_mismatch():
    with pytest.raises(CorridorError, match="travel times"):
        build_corridor([Section(100, 10, 20)], travel_times=[6, 7])


def test_empty_corridor_rejected():
    with pytest.raises(CorridorError):
        build_corridor([])


def test_negative_safe_d_rejected():
    with pytest.raises(CorridorError):
        build_corridor(PAPER_SECTIONS, -1)


def test_error_kinds_are_distinct():
    assert not issubclass(OverlapError, FeasibilityError)
    assert not issubclass(FeasibilityError, SectionError)
    assert not issubclass(SectionError, OverlapError)


def test_rounded_travel_times():
    spec = build_corridor(PAPER_SECTIONS, 300, travel_time_decimals=1)
    assert spec.travel_times_s == (12.7, 9.9, 9.7, 9.8)
    assert spec.total_time_s == pytest.approx(42.1)


def test_schedule_reference(paper):
    # exact rational cumulative sums of 2*l/(v_min+v_max)
    taus = [Fraction(2 * 920, 145), Fraction(2 * 520, 105), Fraction(2 * 340, 70),
            Fraction(2 * 220, 45)]
    expected = [float(sum(taus[:j])) for j in range(5)]
    np.testing.assert_allclose(schedule_for(paper, 0.0).cwp_times_s, expected, atol=1e-12)
    np.testing.assert_allclose(
        expected, [0, 12.6897, 22.5944, 32.3087, 42.0865], atol=5e-5
    )


def test_schedule_single_section():
    spec = build_corridor([Section(100, 10, 10)])
    assert schedule_for(spec, 5.0).cwp_times_s == (5.0, 15.0)


def test_section_membership_half_open(paper):
    assert paper.section_at(0.0) == 0
    assert paper.section_at(919.999) == 0
    assert paper.section_at(920.0) == 1
    assert paper.section_at(1999.0) == 3
    assert paper.section_at(2000.0) == 4


def test_spec_is_immutable(paper):
    with pytest.raises(Exception):
        paper.safe_d_m = 1.0


limits = st.tuples(
    st.floats(1, 100), st.floats(0, 50), st.floats(1, 5000)
).map(lambda t: Section(t[2], t[0], t[0] + t[1]))


@given(st.lists(limits, min_size=1, max_size=6))
def test_derived_times_always_feasible(sections):
    for sec, tau in zip(sections, derive_travel_times(sections)):
        assert sec.v_min * tau <= sec.length_m * (1 + 1e-12)
        assert sec.length_m <= sec.v_max * tau * (1 + 1e-12)


@settings(max_examples=50)
@given(t0=st.floats(-1e4, 1e4), shift=st.floats(-1e3, 1e3))
def test_schedule_time_shift_equivariance(t0, shift):
    spec = build_corridor(PAPER_SECTIONS)
    a = np.array(schedule_for(spec, t0 + shift).cwp_times_s)
    b = np.array(schedule_for(spec, t0).cwp_times_s) + shift
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_schedule_strictly_increasing(paper):
    assert np.all(np.diff(schedule_for(paper, 3.0).cwp_times_s) > 0)
