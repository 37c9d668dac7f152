import itertools

import pytest
from hypothesis import given, strategies as st

import oracles
from sarith.moufang import (POS_INF, AutomorphismWord, ChamberSet, HalfApartment, MoufangError, RootGroupElement,
                            all_words, apartment_path, audit_unions, beta, commutator_trivial,
                            counterexample_search, coverage_window, digit_add, digit_neg,
                            directed_enumeration_of_range, enumerate_root_group, extend_directed_enumeration,
                            fixed_chamber_set, fixed_chambers_by_action, image_intersection, root_group,
                            seed_enumeration, sheet_sequence_check, v_line, verify_covering,
                            verify_directedness)
from sarith.schema import validate
from sarith.trees import TreeParams, build_truncation, standard_vertex


@pytest.mark.parametrize("q", [2, 3, 4, 5, 8, 9])
def test_digit_addition_is_a_group(q):
    for a, b, c in itertools.product(range(q), repeat=3):
        assert digit_add(digit_add(a, b, q), c, q) == digit_add(a, digit_add(b, c, q), q)
    for a in range(q):
        assert digit_add(a, 0, q) == a
        assert digit_add(a, digit_neg(a, q), q) == 0
        assert sorted(digit_add(a, b, q) for b in range(q)) == list(range(q))


def test_digit_addition_char_two():
    assert all(digit_add(a, a, 4) == 0 for a in range(4))
    with pytest.raises(MoufangError):
        digit_add(1, 1, 6)


def test_chamber_sets():
    s = ChamberSet.of([(0, 2), (3, 5), (8, 9)])
    assert s.intervals == ((0, 5), (8, 9))
    assert not s.is_convex and not s.is_coconvex
    assert ChamberSet.down_ray(3).is_coconvex and ChamberSet.down_ray(3).is_convex
    assert ChamberSet().is_coconvex and ChamberSet().is_convex
    assert ChamberSet.everything().complement().is_empty
    two_rays = ChamberSet.down_ray(0).union(ChamberSet(((5, POS_INF),)))
    assert two_rays.is_convex is False and two_rays.is_coconvex


def test_root_group_basics():
    w = build_truncation(TreeParams(2), (-2, 3), standard_vertex(-2))
    half = beta(0)
    ident, u = root_group(half, 2)
    assert all(ident.act(v) == v for v in w.vertices)
    # fixes the half apartment, swaps the two chambers above the panel outside it
    assert all(u.act(standard_vertex(n)) == standard_vertex(n) for n in range(-2, 1))
    above = standard_vertex(0).uppers(2)
    assert {u.act(x) for x in above} == set(above) and u.act(above[0]) != above[0]
    with pytest.raises(MoufangError):
        root_group(HalfApartment("up", 0), 2)


@pytest.mark.parametrize("q", [2, 3])
def test_root_group_simply_transitive_at_panel(q):
    target = standard_vertex(1)
    orbit = [g.act(target) for g in root_group(beta(0), q)]
    assert len(set(orbit)) == q
    assert set(orbit) == set(standard_vertex(0).uppers(q))


def test_word_factorization_count():
    for q in (2, 3):
        words = all_words(-1, 1, q)
        assert len(words) == q ** 3 == len(set(words))


@pytest.mark.parametrize("q", [2, 3])
def test_fixed_set_formula_equals_action_and_image(q):
    lo, hi = -4, 4
    for w in all_words(-3, 3, q):
        formula = fixed_chamber_set(w).restrict(lo, hi)
        assert formula == fixed_chambers_by_action(w, lo, hi)
        assert formula == image_intersection(w, lo, hi)


def test_fixed_set_examples():
    assert fixed_chamber_set(AutomorphismWord.identity(0, 2, 2)) == ChamberSet.everything()
    single = AutomorphismWord.from_pairs([(1, 1)], 0, 2, 2)
    assert fixed_chamber_set(single) == beta(1).chambers()
    both = AutomorphismWord.from_pairs([(0, 1), (2, 1)], 0, 2, 2)
    assert fixed_chamber_set(both) == beta(0).chambers().intersect(beta(2).chambers()) == beta(0).chambers()


@given(st.integers(0, 3 ** 5 - 1), st.integers(0, 3 ** 5 - 1))
def test_composition_matches_action(a, b):
    def word(n):
        return AutomorphismWord(-2, 2, tuple((n // 3 ** k) % 3 for k in range(5)), 3)
    u, v = word(a), word(b)
    w = build_truncation(TreeParams(3), (-2, 2), standard_vertex(-2))
    for x in w.vertices:
        assert u.compose(v).act(x) == u.act(v.act(x))
        assert u.inverse().act(u.act(x)) == x


def test_single_root_group_is_directed():
    for q in (2, 3):
        e = enumerate_root_group(1, q)
        assert e.audit.passed
        assert all(p.union == beta(1).chambers() for p in e.audit.prefixes)


@pytest.mark.parametrize("q", [2, 3])
def test_extension_steps(q):
    seed = seed_enumeration(q)
    assert len(seed) == 1 and seed.audit.passed
    one = extend_directed_enumeration(seed)
    two = extend_directed_enumeration(one)
    assert len(one) == q ** 2 and len(two) == q ** 4
    assert two.words[:len(one)] == [w.widen(two.r, two.s) for w in one.words]
    assert one.audit.passed and two.audit.passed
    lo, hi = two.r - 2, two.s + 2
    assert all(oracles.directed_by_action(two.words, lo, hi))
    validate(two.to_json(), "enumeration")


def test_extension_from_single_root_group():
    e = extend_directed_enumeration(enumerate_root_group(0, 2))
    assert (e.r, e.s, len(e)) == (-1, 1, 8)
    assert len(set(e.words)) == 8 and e.words[0].is_identity


def test_extension_rejects_undirected_input():
    bad = enumerate_root_group(0, 2)
    bad.words = bad.words[::-1]
    bad.audit = None
    with pytest.raises(MoufangError):
        extend_directed_enumeration(bad)


def test_no_counterexample_among_orderings():
    # fixed sets are down rays, so every union is a down ray
    assert counterexample_search(0, 2, 2, limit=5040) is None


def test_audit_negative_control():
    rep = audit_unions([ChamberSet.down_ray(0), ChamberSet.of([(0, 1), (4, 6)])])
    assert not rep.passed and rep.first_failure == 2


def test_commutators_trivial():
    w = build_truncation(TreeParams(3), (-2, 3), standard_vertex(-2))
    for i, j in [(0, 0), (0, 1), (-1, 2)]:
        for a, b in [(1, 2), (2, 2)]:
            assert commutator_trivial(RootGroupElement(beta(i), a, 3), RootGroupElement(beta(j), b, 3), w)


def test_covering_examples():
    w = build_truncation(TreeParams(2), (0, 0), standard_vertex(0))
    assert verify_covering([AutomorphismWord.identity(0, -1, 2)], w).covered
    window = coverage_window(2, 2)
    rep = verify_covering(directed_enumeration_of_range(2, 2), window)
    assert rep.covered and rep.minimal_prefix == 32 and rep.monotone
    small = verify_covering(directed_enumeration_of_range(1, 2), window)
    assert not small.covered and small.uncovered


@pytest.mark.parametrize("q", [2, 3])
def test_uncovered_shrinks(q):
    window = coverage_window(3, q)
    counts = [len(verify_covering(directed_enumeration_of_range(r, q), window).uncovered) for r in (1, 2, 3)]
    assert counts[0] > counts[1] > counts[2] == 0


def test_sheet_sequences():
    window = coverage_window(2, 2)
    words = directed_enumeration_of_range(2, 2).words
    paths = [apartment_path(w, window) for w in words]
    audit = sheet_sequence_check(paths, window)
    assert audit.passed and audit.covers
    again = sheet_sequence_check([paths[0], paths[0]], window)
    assert again.passed and again.new_pieces[1] == []
    assert not again.covers


def test_sheet_v_line_fails():
    window = coverage_window(2, 2)
    std = apartment_path(AutomorphismWord.identity(-2, 2, 2), window)
    vee = v_line(standard_vertex(0), window)
    assert not sheet_sequence_check([std, vee], window).passed
    assert not sheet_sequence_check([vee, std], window).passed


def test_repeated_word_rejected():
    w = AutomorphismWord.identity(0, 1, 2)
    with pytest.raises(MoufangError, match="repeats"):
        verify_directedness([w, w])
