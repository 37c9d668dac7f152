from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from sarith.schema import validate
from sarith.trees import (HVertex, TreeParams, build_truncation, downhill_flow, height, meeting_level,
                          standard_vertex)


@pytest.mark.parametrize("q,window,nv", [(2, (0, 3), 15), (3, (0, 2), 13), (2, (0, 0), 1), (4, (-1, 1), 21)])
def test_truncation_counts(q, window, nv):
    t = build_truncation(TreeParams(q), window, standard_vertex(window[0]))
    assert len(t.vertices) == nv and len(t.edges) == nv - 1


def test_truncation_errors():
    with pytest.raises(ValueError, match="degenerate"):
        build_truncation(TreeParams(2), (3, 1))
    with pytest.raises(ValueError, match="outside"):
        build_truncation(TreeParams(2), (0, 2), standard_vertex(5))
    with pytest.raises(ValueError, match="over the cap"):
        build_truncation(TreeParams(3), (0, 20))
    with pytest.raises(ValueError):
        TreeParams(1)


def test_heights():
    assert height(HVertex(5), TreeParams(2)) == 5
    assert height(HVertex(3), TreeParams(2, 2)) == 6
    v = HVertex(4, (1, 0, 1))
    assert height(v.lower(), TreeParams(2)) == height(v, TreeParams(2)) - 1
    assert height(HVertex(1), TreeParams(2, 1, "p", Fraction(1, 3))) == Fraction(4, 3)


def test_canonical_trailing_zeros():
    assert HVertex(3, (1, 0, 0)) == HVertex(3, (1,))
    assert HVertex(2, (0, 0)).on_standard_apartment


def test_downhill_examples():
    v = HVertex(4, (1, 1, 0, 1))
    path = downhill_flow(v, 1)
    assert len(path) == 4 and [p.level for p in path] == [4, 3, 2, 1]
    assert downhill_flow(HVertex(2, (1,)), 2) == [HVertex(2, (1,))]
    with pytest.raises(ValueError):
        downhill_flow(v, 5)
    a, b = HVertex(5, (0, 1, 1, 0, 1)), HVertex(5, (1, 0, 0, 0, 1))
    # equal digits below level 2 (positions 0 and 1), different at position 2
    assert meeting_level(a, b) == 2
    assert downhill_flow(a, 2)[-1] == downhill_flow(b, 2)[-1]


def test_links():
    for q in (2, 5):
        t = build_truncation(TreeParams(q), (0, 3))
        v = t.vertices_at(1)[0]
        info = t.links(v)
        assert len(info.descending) == 1 and len(info.ascending) == q and not info.partial
        top = t.links(t.vertices_at(3)[0])
        assert top.partial_ascending
        assert t.links(t.vertices[0]).partial_descending


@given(st.integers(2, 3), st.integers(-2, 1), st.integers(0, 3))
def test_truncation_invariants(q, a, span):
    t = build_truncation(TreeParams(q), (a, a + span))
    index = t.index
    for v in t.vertices:
        assert HVertex.decode(v.encode()) == v
        if v.level > a:
            assert v.lower() in index
        if v.level < a + span:
            assert all(u in index for u in v.uppers(q))
            if v.level > a:
                assert len(t.links(v).descending) + len(t.links(v).ascending) == q + 1
    # connected: every vertex flows to the root
    root = t.vertices[0]
    assert all(v.ancestor(a) == root for v in t.vertices)
    assert {t.height(v) for v in t.vertices} == set(range(a, a + span + 1))


@given(st.integers(2, 3), st.integers(1, 4))
def test_flows_meet(q, top):
    t = build_truncation(TreeParams(q), (0, top))
    vs = t.vertices
    for u in vs[:: max(1, len(vs) // 6)]:
        for v in vs[:: max(1, len(vs) // 5)]:
            lvl = meeting_level(u, v)
            assert u.ancestor(lvl) == v.ancestor(lvl)
            assert lvl >= 0


def test_json_and_dot():
    t = build_truncation(TreeParams(2, Fraction(2)), (0, 2))
    doc = t.to_json()
    validate(doc, "tree")
    assert doc["weight"] == "2" and len(doc["vertices"]) == 7
    dot = t.to_dot()
    assert dot.count("--") == 6 and dot.startswith("graph")
