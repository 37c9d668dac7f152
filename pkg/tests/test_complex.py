from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

import oracles
from sarith.complex import (DirectedSystem, RetractDiagram, RetractError, SlabError, build_ladder,
                            build_slab, collapse_factor, common_refinement, constant_section,
                            essential_triviality, flow_witness, identity_map, inclusion_induced_map,
                            kernel_slab_connectivity, refine, retract_transfer, unconstrained_product,
                            verify_witness_nontrivial, witness_class, witness_sphere)
from sarith.root_data import PlaceSpec, build_root_system, unit_places
from sarith.schema import validate
from sarith.trees import TreeParams, build_truncation


def trees(m, q=2, window=(0, 5), weights=None):
    weights = weights or [1] * m
    return [build_truncation(TreeParams(q, w, f"T{i + 1}"), window) for i, w in enumerate(weights)]


@pytest.fixture(scope="module")
def t2():
    return trees(2)


def test_single_tree_vertex_aligned_interval():
    slab = build_slab(trees(1, window=(0, 4)), (0, 2))
    assert slab.cells_per_dim == {0: 7, 1: 6}
    assert slab.summary().betti == {0: 0, 1: 0}


def test_level_set_has_no_top_cells(t2):
    slab = build_slab(t2, F(3, 2))
    assert slab.is_level_set and slab.cells_per_dim.get(2, 0) == 0
    assert slab.summary().vanishes_through(0)


def test_euler_matches_oracle_cell_counts(t2):
    slab = build_slab(t2, (0, 2))
    assert slab.cells_per_dim == oracles.cells_per_dim(t2, 0, 2)
    s = slab.summary()
    assert s.euler_from_cells == s.euler_from_betti
    assert s.betti == oracles.reduced_betti_rational(t2, 0, 2)
    assert s.betti[0] == 0


@pytest.mark.parametrize("m,q,window,iv", [
    (2, 2, (0, 5), (F(1, 2), F(3, 2))),
    (2, 2, (0, 5), (F(2), F(3))),
    (2, 3, (0, 4), (F(1), F(2))),
    (2, 2, (0, 5), (F(5, 2), F(5, 2))),
    (3, 2, (0, 4), (F(3, 2), F(3, 2))),
])
def test_homology_matches_order_complex_oracle(m, q, window, iv):
    ts = trees(m, q, window)
    slab = build_slab(ts, iv)
    assert slab.size <= 5000
    assert slab.check_boundary_squared()
    assert slab.cells_per_dim == oracles.cells_per_dim(ts, *iv)
    assert slab.summary().betti == oracles.reduced_betti_rational(ts, *iv)
    assert slab.summary().vanishes_through(m - 2)


def test_insufficient_slack_names_vertex():
    with pytest.raises(SlabError, match="boundary vertex"):
        build_slab(trees(2, window=(0, 3)), (F(2), F(3)))


def test_empty_slab_rejected(t2):
    with pytest.raises(SlabError):
        build_slab(t2, (F(30), F(31)), slack=0)


def test_unconstrained_product_is_acyclic():
    for m in (1, 2, 3):
        s = unconstrained_product(trees(m, window=(0, 2))).summary()
        assert all(b == 0 for b in s.betti.values()) and not any(s.torsion.values())


def test_halfspace_slab_is_connected(t2):
    s = build_slab(t2, (F(3, 2), None), slack=2).summary()
    assert s.vanishes_through(0) and s.betti[1] > 0


def test_inclusion_maps(t2):
    I = build_slab(t2, (F(2), F(3)))
    J = build_slab(t2, (F(1), F(3)))
    small, large = common_refinement(I, J)
    M = inclusion_induced_map(small, large, 1)
    assert any(any(r) for r in M)
    same = inclusion_induced_map(I, I, 1)
    assert same == [[int(i == j) for j in range(5)] for i in range(5)]
    assert inclusion_induced_map(small, large, 0) == []


def test_witness_m2(t2):
    tau = tuple(t.vertices[0] for t in t2)
    w2 = witness_sphere(t2, tau, 2)
    assert w2.level == 2 and len(w2.chain) == 8
    w1 = witness_sphere(t2, tau, 1)
    assert flow_witness(w2, t2) == w1.chain
    level = build_slab(t2, w2.level)
    assert not level.boundary_of(w2.chain)
    assert verify_witness_nontrivial(w2, level)
    w0 = witness_sphere(t2, tau, 0)
    assert not verify_witness_nontrivial(w0, build_slab(t2, F(0), slack=2))
    J = build_slab(t2, (F(1), F(3)))
    free, tors = witness_class(w2, J)
    assert any(free) or any(tors)


def test_witness_lattice_points(t2):
    tau = tuple(t.vertices[0] for t in t2)
    w = witness_sphere(t2, tau, 2)
    # signed line coordinates of the vertices touched by the cycle
    plus = [set(line[0]) for line in w.lines]
    pts = set()
    geometry = build_slab(t2, w.level).geometry
    for key in w.chain:
        for c in geometry.corners(key):
            coords = []
            for i, (_, idx) in enumerate(c):
                v = t2[i].vertices[idx]
                coords.append(v.level if v in plus[i] else -v.level)
            pts.add(tuple(coords))
    assert pts == {(2, 0), (-2, 0), (0, 2), (0, -2), (1, 1), (1, -1), (-1, 1), (-1, -1)}


def test_witness_m3_octahedron():
    ts = trees(3, window=(0, 3))
    tau = tuple(t.vertices[0] for t in ts)
    w = witness_sphere(ts, tau, 1)
    assert w.dim == 2 and len(w.chain) == 8
    level = build_slab(ts, w.level)
    assert set(level.boundary_of(w.chain)) == set()


def test_witness_persistence_radius_three():
    ts = trees(2, window=(0, 6))
    tau = tuple(t.vertices[0] for t in ts)
    assert flow_witness(witness_sphere(ts, tau, 3), ts) == witness_sphere(ts, tau, 2).chain


def test_essential_triviality_examples():
    ident = DirectedSystem.from_matrices([1, 1, 1, 1], [[[1]]] * 3)
    assert not essential_triviality(ident).essentially_trivial
    alt = DirectedSystem.from_matrices([1, 1, 1, 1, 1], [[[1]], [[0]], [[1]], [[0]]])
    rep = essential_triviality(alt)
    assert rep.essentially_trivial and rep.horizon == 4
    with pytest.raises(ValueError):
        essential_triviality(DirectedSystem.from_matrices([1], []))


def test_ladder_not_essentially_trivial(t2):
    system, slabs = build_ladder(t2, [(F(2), F(3)), (F(1), F(3)), (F(1, 2), F(3))], 1)
    assert system.check_composites()
    rep = essential_triviality(system)
    assert not rep.essentially_trivial
    assert all(v is None for v in rep.killing_stage.values())


def test_ladder_rejects_non_nested(t2):
    with pytest.raises(SlabError, match="nested"):
        build_ladder(t2, [(F(1), F(3)), (F(2), F(3))], 1)


@pytest.fixture(scope="module")
def retract_data():
    base = trees(2)
    extra = build_truncation(TreeParams(2, 0, "X"), (0, 1))
    big = base + [extra]
    S1, S2 = build_slab(base, (F(2), F(3))), build_slab(base, (F(1), F(3)), extra_cuts=[2])
    B1, B2 = build_slab(big, (F(2), F(3))), build_slab(big, (F(1), F(3)), extra_cuts=[2])
    return base, extra, S1, S2, B1, B2


def test_retract_transfer(retract_data):
    _, extra, S1, S2, B1, B2 = retract_data
    v = extra.vertices[0]
    d = RetractDiagram((B1, B2), (S1, S2), (collapse_factor(B1, S1, 2), collapse_factor(B2, S2, 2)),
                       (constant_section(S1, B1, 2, v), constant_section(S2, B2, 2, v)), 1)
    rep = retract_transfer(d)
    assert rep.small_nonzero and rep.big_nonzero and rep.transfers and rep.retract_identity


def test_retract_tautology(retract_data):
    _, _, S1, S2, _, _ = retract_data
    d = RetractDiagram((S1, S2), (S1, S2), (identity_map(S1), identity_map(S2)),
                       (identity_map(S1), identity_map(S2)), 1)
    assert retract_transfer(d).transfers


def test_broken_section_rejected(retract_data):
    _, extra, S1, S2, B1, B2 = retract_data
    v0, v1 = extra.vertices[0], extra.vertices[1]
    d = RetractDiagram((B1, B2), (S1, S2), (collapse_factor(B1, S1, 2), collapse_factor(B2, S2, 2)),
                       (constant_section(S1, B1, 2, v0), constant_section(S2, B2, 2, v1)), 1)
    with pytest.raises(RetractError, match="cell"):
        retract_transfer(d)


def test_kernel_slabs():
    a1 = build_root_system("A", 1)
    s = kernel_slab_connectivity(a1, unit_places(2))
    assert s.betti[0] == 0
    s = kernel_slab_connectivity(a1, [PlaceSpec("a", 1, 2), PlaceSpec("b", 2, 2)])
    assert s.betti[0] == 0
    with pytest.raises(SlabError, match="rank one"):
        kernel_slab_connectivity(build_root_system("A", 2), unit_places(2))
    validate(s.to_json(), "homology")


@given(st.integers(0, 3), st.integers(1, 4), st.sampled_from([2, 3]))
def test_boundary_squared_and_euler_property(lo2, span2, q):
    lo, hi = F(lo2, 2), F(lo2 + span2, 2)
    top = int(hi) + 3
    ts = trees(2, q, (0, min(top, 5 if q == 2 else 4)))
    try:
        slab = build_slab(ts, (lo, hi))
    except SlabError:
        return
    assert slab.check_boundary_squared()
    s = slab.summary()
    assert s.euler_from_cells == s.euler_from_betti
    assert s.vanishes_through(0)


def test_refine_keeps_homology(t2):
    slab = build_slab(t2, (F(1), F(3)))
    fine = refine(slab, [F(3, 2), F(2)])
    assert fine.summary().betti == slab.summary().betti
    assert fine.size > slab.size
