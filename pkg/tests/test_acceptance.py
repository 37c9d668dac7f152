"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""
import contextlib
import itertools
import random
import time
from fractions import Fraction as F

import pytest

import oracles
from sarith.complex import (DirectedSystem, build_ladder, build_slab, common_refinement, essential_triviality,
                            flow_witness, inclusion_induced_map, is_zero_matrix, kernel_slab_connectivity,
                            unconstrained_product, verify_witness_nontrivial, witness_class, witness_sphere)
from sarith.cones import (INDETERMINATE, cocharacter_direction, conv_m_member, conv_mS_member, is_m_tame,
                          normal_subgroup_certificate, sigma_bound_classify, sl_diagonal_pairings)
from sarith.homology import matmul, smith_normal_form
from sarith.moufang import (all_words, coverage_window, directed_enumeration_of_range,
                            extend_directed_enumeration, fixed_chamber_set, fixed_chambers_by_action,
                            seed_enumeration, verify_covering)
from sarith.root_data import build_root_system, restricted_systems, unit_places
from sarith.scenarios import ExperimentConfig, run_scenario, strip_timing
from sarith.trees import TreeParams, build_truncation


@pytest.fixture
def criterion(capsys):
    """Context manager timing one criterion and printing its PASS/FAIL line."""
    @contextlib.contextmanager
    def run(n, label):
        info = {"detail": ""}
        started = time.perf_counter()
        ok = False
        try:
            yield info
            ok = True
        finally:
            with capsys.disabled():
                extra = f" ({info['detail']})" if info["detail"] else ""
                print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {label} "
                      f"[{time.perf_counter() - started:.1f}s]{extra}")
    return run


def trees(m, q, window):
    return [build_truncation(TreeParams(q, 1, f"T{i + 1}"), window) for i in range(m)]


CONNECTIVITY_CASES = [
    (2, 2, (0, 5), (F(1, 2), F(3, 2))),
    (2, 2, (0, 6), (F(1, 2), F(7, 2))),
    (2, 3, (0, 4), (F(1, 2), F(3, 2))),
    (2, 3, (0, 5), (F(3, 2), F(5, 2))),
    (3, 2, (0, 4), (F(1, 2), F(3, 2))),
    (3, 2, (0, 6), (F(5, 2), F(7, 2))),
    (3, 3, (0, 4), (F(1, 2), F(3, 2))),
    (3, 3, (0, 5), (F(3, 2), F(5, 2))),
]


def test_criterion_1_connectivity(criterion):
    with criterion(1, 'sliced tree products are (m-2)-connected') as info:
        sizes = []
        for m, q, window, iv in CONNECTIVITY_CASES:
            slab = build_slab(trees(m, q, window), iv, slack=2)
            s = slab.summary()
            assert slab.check_boundary_squared()
            assert s.vanishes_through(m - 2), (m, q, window, iv, s.betti)
            assert all(not s.torsion.get(d) for d in range(m - 1))
            sizes.append(slab.size)
        info["detail"] = f"{len(CONNECTIVITY_CASES)} slabs, up to {max(sizes)} cells"


def test_criterion_2_nontriviality(criterion):
    with criterion(2, 'inclusion is nonzero in degree m-1 and the witness persists') as info:
        ts = trees(2, 2, (0, 5))
        small, large = common_refinement(build_slab(ts, (F(2), F(3))), build_slab(ts, (F(1), F(3))))
        M = inclusion_induced_map(small, large, 1)
        assert not is_zero_matrix(M)
        tau = tuple(t.vertices[0] for t in ts)
        w2, w1 = witness_sphere(ts, tau, 2), witness_sphere(ts, tau, 1)
        free, tors = witness_class(w2, large)
        assert any(free) or any(tors)
        assert flow_witness(w2, ts) == w1.chain
        assert w1.level == large.lo
        assert verify_witness_nontrivial(w1, build_slab(ts, large.lo))
        info["detail"] = f"map rank >= 1 on {len(M)}x{len(M[0])}"


def test_criterion_3_kernel_slab(criterion):
    with criterion(3, 'kernel slabs are (|S|-2)-connected') as info:
        a1 = build_root_system("A", 1)
        for s in (2, 3):
            summary = kernel_slab_connectivity(a1, unit_places(s))
            assert summary.vanishes_through(s - 2), summary.betti
        info["detail"] = "|S| = 2, 3"


def test_criterion_4_tameness(criterion):
    with criterion(4, 'restricted negative roots are (|S|-1)-tame, not |S|-tame') as info:
        for (t, n), s in itertools.product([("A", 1), ("A", 2), ("B", 2)], (2, 3, 4)):
            sys = restricted_systems(build_root_system(t, n), unit_places(s))
            assert is_m_tame(sys.negative, s - 1)[0], (t, n, s)
            ok, cert = is_m_tame(sys.negative, s)
            assert not ok and not cert.degenerate
            used = [(sys.negative.forms[i], sys.negative.tags[i]) for i, _ in cert.combination]
            base = set(zip(sys.base.forms, sys.base.tags))
            assert all(u in base for u in used)
            assert sorted(tag[0] for _, tag in used) == sorted(p.label for p in sys.places)
            total = [sum(c * f[k] for (i, c), (f, _) in zip(cert.combination, used)) for k in range(sys.kernel.dim)]
            assert not any(total)
        info["detail"] = "9 cases"


def test_criterion_5_sigma_bounds(criterion):
    with criterion(5, 'cone bounds coincide in rank one; A2 examples are indeterminate') as info:
        a1 = restricted_systems(build_root_system("A", 1), unit_places(3))
        grid = [(a, b) for a in range(-5, 6) for b in range(-5, 6) if (a, b) != (0, 0)]
        grid += [(F(a, 3), F(b, 2)) for a in (-1, 1) for b in (-1, 1)]
        assert len(grid) >= 100
        for m in (1, 2):
            for query in grid:
                lower = conv_mS_member(a1.base_by_place(), m, query).member
                upper = conv_m_member(a1.negative, m, query).member
                assert lower == upper, (m, query)
        a2, places = build_root_system("A", 2), unit_places(2)
        assert sigma_bound_classify(a2, places, 1, (1, 1)).verdict == INDETERMINATE
        u = cocharacter_direction(sl_diagonal_pairings([1, -2, 1]), [1, -1], places)
        assert normal_subgroup_certificate(a2, places, [u], 1).verdict == INDETERMINATE
        info["detail"] = f"{len(grid)} queries x 2 values of m"


def test_criterion_6_moufang(criterion):
    with criterion(6, 'fixed sets, directed extensions and apartment coverage') as info:
        for q in (2, 3):
            for w in all_words(-3, 3, q):
                assert fixed_chamber_set(w).restrict(-5, 5) == fixed_chambers_by_action(w, -5, 5)
            enum = seed_enumeration(q)
            for _ in range(2):
                enum = extend_directed_enumeration(enum)
                assert enum.audit.passed
            window = coverage_window(3, q)
            uncovered = []
            for r in (1, 2, 3):
                e = directed_enumeration_of_range(r, q)
                assert e.audit.passed
                assert verify_covering(e, coverage_window(r, q)).covered
                uncovered.append(len(verify_covering(e, window).uncovered))
            assert all(a > b for a, b in zip(uncovered, uncovered[1:])) and uncovered[-1] == 0
        info["detail"] = "q = 2, 3"


def _dense_boundary(slab, d):
    rows = {k: i for i, k in enumerate(slab.cells.get(d - 1, []))}
    cols = slab.cells.get(d, [])
    M = [[0] * len(cols) for _ in rows]
    for j, c in enumerate(cols):
        for f, v in slab.boundary[c].items():
            if f in rows:
                M[rows[f]][j] = v
    return M


def _snf_ok(A):
    r = smith_normal_form(A)
    D = matmul(matmul(r.U, A), r.V)
    m, n = r.shape
    diag_ok = all(D[i][j] == 0 for i in range(m) for j in range(n) if i != j)
    nz = [x for x in r.diagonal if x]
    return diag_ok and all(b % a == 0 for a, b in zip(nz, nz[1:])) and r.rank == oracles.rank_q(A)


ORACLE_CASES = [
    (1, 2, (0, 4), (F(0), F(2))),
    (2, 2, (0, 5), (F(0), F(2))),
    (2, 2, (0, 5), (F(1, 2), F(3, 2))),
    (2, 2, (0, 5), (F(2), F(3))),
    (2, 3, (0, 4), (F(1), F(2))),
    (2, 3, (0, 4), (F(3, 2), F(3, 2))),
    (3, 2, (0, 4), (F(3, 2), F(3, 2))),
    (3, 2, (0, 4), (F(1, 2), F(3, 2))),
]


def test_criterion_7_infrastructure(criterion, tmp_path):
    with criterion(7, 'boundary, SNF, oracle agreement, acyclic products, determinism') as info:
        for m, q, window, iv in ORACLE_CASES:
            ts = trees(m, q, window)
            slab = build_slab(ts, iv)
            assert slab.size <= 5000 and slab.check_boundary_squared()
            assert slab.cells_per_dim == oracles.cells_per_dim(ts, *iv)
            assert slab.summary().betti == oracles.reduced_betti_rational(ts, *iv)
        small = build_slab(trees(2, 2, (0, 5)), (F(2), F(3)))
        for d in (1, 2):
            assert _snf_ok(_dense_boundary(small, d))
        rng = random.Random(20240601)
        for _ in range(40):
            A = [[rng.randint(-6, 6) for _ in range(rng.randint(1, 6))]]
            A += [[rng.randint(-6, 6) for _ in A[0]] for _ in range(rng.randint(0, 5))]
            assert _snf_ok(A)
        for m in (1, 2, 3):
            s = unconstrained_product(trees(m, 2, (0, 2))).summary()
            assert s.vanishes_through(m - 1) and not any(s.torsion.values())
        cfg = {"scenario": "baumprodukt", "seed": 3, "trees": {"q": 2, "factors": 2, "window": [0, 5]},
               "baumprodukt": {"inner": ["2", "3"], "outer": ["1", "3"], "radius": 2}}
        a = run_scenario(ExperimentConfig.from_dict(cfg), tmp_path / "a", figures=False)[0]
        b = run_scenario(ExperimentConfig.from_dict(cfg), tmp_path / "b", figures=False)[0]
        assert strip_timing(a) == strip_timing(b)
        info["detail"] = f"{len(ORACLE_CASES)} oracle slabs"


def test_criterion_8_essential_triviality(criterion):
    with criterion(8, 'essential triviality detector') as info:
        ident = DirectedSystem.from_matrices([2] * 5, [[[1, 0], [0, 1]]] * 4)
        assert not essential_triviality(ident).essentially_trivial
        zero_late = DirectedSystem.from_matrices([1] * 5, [[[1]], [[1]], [[0]], [[0]]])
        assert essential_triviality(zero_late).essentially_trivial
        ts = trees(2, 2, (0, 5))
        system, _ = build_ladder(ts, [(F(2), F(3)), (F(1), F(3)), (F(1, 2), F(3))], 1)
        for horizon in range(2, len(system.ranks) + 1):
            truncated = DirectedSystem.from_matrices(system.ranks[:horizon], system.maps[:horizon - 1])
            assert not essential_triviality(truncated).essentially_trivial
        info["detail"] = "3 ladders"
