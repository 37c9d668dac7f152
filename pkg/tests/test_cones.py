from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

import oracles
from sarith.cones import (CERTIFIED_FM, CERTIFIED_NOT_FM, INDETERMINATE, ConeError, check_certificate,
                          cocharacter_direction, complete_combination, conv_m_member, conv_mS_member,
                          finiteness_report, is_m_tame, normal_subgroup_certificate, restrict_to_kernel,
                          restriction_tame, sigma_bound_classify, sl_diagonal_pairings)
from sarith.rational import add, is_zero, scale
from sarith.root_data import build_root_system, restricted_systems, unit_places

A2_ON_H = [(-1, 0), (0, -1), (-1, -1), (1, 0), (0, 1), (1, 1)]

coord = st.integers(-2, 2)
form2 = st.tuples(coord, coord)
form3 = st.tuples(coord, coord, coord)


def _gens(forms):
    return {i: tuple(Fraction(c) for c in f) for i, f in enumerate(forms)}


def test_tame_examples():
    lam = (1, 2)
    neg = (-1, -2)
    assert is_m_tame([lam, neg], 1)[0]
    ok, cert = is_m_tame([lam, neg], 2)
    assert not ok
    total = (0, 0)
    for i, c in cert.combination:
        total = add(total, scale(c, [lam, neg][i]))
    assert is_zero(total) and all(c > 0 for _, c in cert.combination)


def test_zero_form_is_degenerate():
    ok, cert = is_m_tame([(0, 0), (1, 0)], 1)
    assert not ok and cert.degenerate


def test_a2_three_places_tameness():
    sys = restricted_systems(build_root_system("A", 2), unit_places(3))
    assert is_m_tame(sys.negative, 2)[0]
    assert not is_m_tame(sys.negative, 3)[0]


def test_conv_examples():
    lam = (1, 2)
    cert = conv_m_member([lam, (-1, -2)], 1, (2, 4))
    assert cert.member and cert.combination == ((0, Fraction(2)),)
    assert conv_m_member(A2_ON_H, 1, (1, 1)).member
    assert not conv_m_member(A2_ON_H, 1, (1, 2)).member
    cert = conv_m_member(A2_ON_H, 2, (1, 2))
    assert cert.member and check_certificate(cert, _gens(A2_ON_H), (1, 2))
    with pytest.raises(ConeError):
        conv_m_member(A2_ON_H, 1, (0, 0))


def test_lower_cone_examples():
    a1 = restricted_systems(build_root_system("A", 1), unit_places(2))
    assert conv_mS_member(a1.base_by_place(), 1, (3,)).member
    assert conv_mS_member(a1.base_by_place(), 1, (-3,)).member
    a2 = restricted_systems(build_root_system("A", 2), unit_places(2))
    for m in (1, 2):
        assert not conv_mS_member(a2.base_by_place(), m, (1, 1)).member
    assert not conv_mS_member(a2.base_by_place(), 0, (1, 0)).member


def test_sigma_examples():
    a2, places = build_root_system("A", 2), unit_places(2)
    assert sigma_bound_classify(a2, places, 1, (1, 1)).verdict == INDETERMINATE
    assert sigma_bound_classify(a2, places, 1, (1, 0)).verdict == CERTIFIED_NOT_FM
    with pytest.raises(ConeError, match="m < "):
        sigma_bound_classify(a2, places, 2, (1, 0))


def test_restriction_examples():
    assert restriction_tame([(1, 0), (0, 1)], (1, -1), 1)
    assert not restriction_tame([(1, 0), (0, 1)], (1, 0), 1)
    assert not restriction_tame(A2_ON_H, (1, 1), 1)
    with pytest.raises(ConeError):
        restriction_tame(A2_ON_H, (0, 0), 1)


def test_normal_subgroup_examples():
    a2, places = build_root_system("A", 2), unit_places(2)
    u = cocharacter_direction(sl_diagonal_pairings([1, -2, 1]), [1, -1], places)
    assert u == (3, -3, -3, 3)
    assert normal_subgroup_certificate(a2, places, [u], 1).verdict == INDETERMINATE
    sys = restricted_systems(a2, places)
    assert normal_subgroup_certificate(a2, places, list(sys.kernel.basis), 1).verdict == CERTIFIED_FM
    a1 = build_root_system("A", 1)
    assert normal_subgroup_certificate(a1, places, [], 1).verdict == CERTIFIED_NOT_FM
    with pytest.raises(ConeError, match="kernel"):
        normal_subgroup_certificate(a2, places, [(1, 0, 0, 0)], 1)


def test_finiteness_report():
    assert finiteness_report(1) == {"f_type": 0, "not_fp": 1}
    assert finiteness_report(2) == {"f_type": 1, "not_fp": 2}
    assert finiteness_report(5) == {"f_type": 4, "not_fp": 5}
    with pytest.raises(ConeError):
        finiteness_report(0)


def test_complete_combination_vanishes():
    for t, n in (("A", 1), ("A", 2), ("B", 2)):
        for s in (2, 3):
            sys = restricted_systems(build_root_system(t, n), unit_places(s))
            picks, total = complete_combination(sys)
            assert len({p for p, _ in picks}) == s and is_zero(total)


# -- properties -------------------------------------------------------------

@given(st.lists(form2, min_size=1, max_size=6), st.integers(1, 3))
def test_tameness_agrees_with_circuit_oracle(forms, m):
    assert is_m_tame(forms, m)[0] == oracles.tame(forms, m)


@given(st.lists(form3, min_size=1, max_size=5), st.integers(1, 3), form3)
def test_membership_agrees_with_caratheodory_oracle(forms, m, query):
    assume(any(query))
    cert = conv_m_member(forms, m, query)
    assert cert.member == oracles.cone_member(forms, m, query)
    assert check_certificate(cert, _gens(forms), query)


@given(st.lists(form2, min_size=2, max_size=6), st.integers(1, 3))
def test_monotone_in_m(forms, m):
    if is_m_tame(forms, m)[0]:
        for k in range(1, m):
            assert is_m_tame(forms, k)[0]


@given(st.lists(form2, min_size=1, max_size=6), st.integers(1, 3))
def test_tame_separators_are_sound(forms, m):
    ok, cert = is_m_tame(forms, m)
    if ok and cert.separators:
        for support, y in cert.separators:
            assert all(sum(a * b for a, b in zip(y, forms[i])) >= 1 for i in support)


@given(st.lists(form2, min_size=1, max_size=6), form2, st.integers(1, 2))
def test_restriction_equivalence(forms, lam, m):
    assume(any(lam))
    assume(is_m_tame(forms, m)[0])
    literal = restrict_to_kernel(forms, lam)
    assert restriction_tame(forms, lam, m) == is_m_tame(literal, m)[0]


@given(st.lists(form3, min_size=1, max_size=5), form3, st.integers(1, 2))
def test_restriction_equivalence_3d(forms, lam, m):
    assume(any(lam))
    assume(is_m_tame(forms, m)[0])
    assert restriction_tame(forms, lam, m) == is_m_tame(restrict_to_kernel(forms, lam), m)[0]


@pytest.mark.parametrize("t,n,s", [("A", 1, 2), ("A", 1, 3), ("A", 2, 2), ("A", 2, 3), ("B", 2, 2), ("B", 2, 3)])
def test_lower_cone_inside_upper_cone(t, n, s):
    sys = restricted_systems(build_root_system(t, n), unit_places(s))
    base = sys.base_by_place()
    for m in range(1, s):
        for p, fs in enumerate(base):
            for f in fs:
                # each single base root, and sums of base roots at two distinct places
                assert conv_m_member(sys.negative, m, f).member
                if m >= 2:
                    for p2 in range(p + 1, len(base)):
                        for g in base[p2]:
                            h = add(f, g)
                            if not is_zero(h):
                                assert conv_mS_member(base, m, h).member
                                assert conv_m_member(sys.negative, m, h).member


@given(st.integers(-4, 4).filter(bool), st.integers(1, 4))
def test_rank_one_bounds_coincide(num, den):
    rs, places = build_root_system("A", 1), unit_places(3)
    sys = restricted_systems(rs, places)
    for m in (1, 2):
        for q in ((Fraction(num, den), Fraction(1)), (Fraction(num, den), Fraction(-1)), (Fraction(1), Fraction(num, den))):
            lower = conv_mS_member(sys.base_by_place(), m, q).member
            upper = conv_m_member(sys.negative, m, q).member
            assert lower == upper == oracles.lower_cone_member(sys.base_by_place(), m, q)
