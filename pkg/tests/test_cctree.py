import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evasets.cctree import (
    CCTree, SupersatParams, aleph_log2, bool_to_mask, build_collinear_cctree, build_krset_cctree, mask_to_bool,
    progress_violations, supersat_hypergraph, supersat_tau, tree_stats, verify_cctree,
)
from evasets.errors import InvalidParams, NonTermination, RichFlatPresent, TooLarge, TooSmall
from evasets.fieldcore import field_of_order
from evasets.geom import PointSet, affine_rank, flats_meeting, random_subset
from evasets.hyper import (
    Hypergraph, bits_of, collinear_triple_hypergraph, enumerate_independent_sets, fano_plane, krset_hypergraph, mask_of,
)
from oracles import ref_collinear, ref_field


def plane(q):
    F = field_of_order(q)
    return F, collinear_triple_hypergraph(PointSet.full(F, 2))


def labels_are_collinear(T, F):
    pts = PointSet.full(F, 2).points
    for x in T.nodes:
        for L in x.labels[1:]:
            if affine_rank(F, [pts[i] for i in bits_of(L)]) > 1:
                return False
    return True


# -- masks, trees, serialization --------------------------------------------------

def test_mask_conversions():
    for nv in (1, 7, 8, 9, 30):
        rng = np.random.default_rng(nv)
        arr = rng.random(nv) < 0.4
        m = bool_to_mask(arr)
        assert m == mask_of(np.flatnonzero(arr).tolist())
        assert (mask_to_bool(m, nv) == arr).all()


def test_single_node_tree_is_valid():
    H = fano_plane()
    T = CCTree.single(7, 3)
    rep = verify_cctree(T, H)
    assert rep.ok and rep.checked_sets == len(list(enumerate_independent_sets(H)))
    st_ = tree_stats(T)
    assert (st_.nu, st_.lam, st_.kappa) == (1, 0, 0) and st_.aleph_log2 == 7


def test_non_clique_label_is_reported():
    H = fano_plane()
    # {0, 1, 2} is an edge, {0, 1, 3} is not; a triple off every edge is not a clique
    edges = {tuple(e) for e in H.edges().tolist()}
    bad = next(t for t in itertools.combinations(range(7), 3) if t not in edges)
    T = CCTree.single(7, 3, [(1 << 7) - 1, mask_of(bad)])
    rep = verify_cctree(T, H)
    assert rep.coverage_ok and rep.structure_ok and not rep.cliques_ok
    assert rep.bad_label == (0, 1, list(bad))


def test_uncovered_set_is_reported():
    H = fano_plane()
    T = CCTree.single(7, 3, [0b0011111])
    rep = verify_cctree(T, H)
    assert not rep.coverage_ok and H.is_independent(rep.uncovered)
    assert any(v in (5, 6) for v in rep.uncovered)


def test_structure_problems():
    T = CCTree.single(5, 3)
    T.add_node(0, [1], ["x"])
    assert "leaf 0 has children" in verify_cctree(T, Hypergraph.empty(3, 5)).problems
    T2 = CCTree(4, 3)
    T2.add_node(-1, [15, 3], ["root", "given"])
    T2.add_node(0, [15], ["x"])
    T2.nodes[0].case, T2.nodes[1].case = "deletion", "leaf"
    assert any("inherit" in p for p in verify_cctree(T2, Hypergraph.empty(3, 4)).problems)
    T3 = CCTree.single(4, 3, [1 << 6])
    assert not verify_cctree(T3, Hypergraph.empty(3, 4)).structure_ok


def test_exhaustive_verification_size_limit():
    _, H = plane(5)
    with pytest.raises(TooLarge):
        verify_cctree(CCTree.single(25, 3), H, mode="exhaustive")
    with pytest.raises(InvalidParams):
        verify_cctree(CCTree.single(24, 3), H, mode="sampled")


def test_text_round_trip():
    F, H = plane(3)
    T, stats, _ = build_collinear_cctree(F, c=0.7, lazy=False, allow_small=True)
    text = T.to_text(stats)
    assert text.splitlines()[0].startswith("0 -1 deletion {") or text.splitlines()[0].startswith("0 -1 container {")
    assert '"aleph_log2"' in text.splitlines()[-1]
    U = CCTree.from_text(text, T.nv, 3)
    assert [(x.parent, x.case, x.labels) for x in U.nodes] == [(x.parent, x.case, x.labels) for x in T.nodes]
    assert U.to_text(stats) == text
    assert verify_cctree(U, H).ok


def test_stats_examples():
    T = CCTree(10, 3)
    T.add_node(-1, [(1 << 10) - 1], ["root"])
    K = mask_of([5, 6, 7, 8, 9])
    T.add_node(0, [0b11, K], ["container", "deleted"])
    T.add_node(0, [0b1111, K], ["container", "deleted"])
    T.nodes[0].case = "container"
    T.nodes[1].case = T.nodes[2].case = "leaf"
    s = tree_stats(T)
    assert (s.nu, s.chi, s.kappa, s.lam, s.height) == (2, 4, 5, 1, 1)
    assert s.aleph_log2 == pytest.approx(1 + math.log2(10) + (4 + 3))
    assert aleph_log2(1, 9, 0, 0, 3) == 9
    assert s.as_dict()["lambda"] == 1


# -- collinear process --------------------------------------------------------------

def test_collinear_rejects_small_fields():
    with pytest.raises(InvalidParams):
        build_collinear_cctree(field_of_order(7))
    with pytest.raises(InvalidParams):
        build_collinear_cctree(field_of_order(9), eps=0)


def test_collinear_stalls_when_an_independent_set_is_too_big():
    # AG(2, 4) has a 6-point set with no three collinear, and 6 >= (1 + 0.5) * 4
    with pytest.raises(NonTermination) as err:
        build_collinear_cctree(field_of_order(4), c=0.7, lazy=False, allow_small=True)
    assert "node" in err.value.diagnostic


def test_collinear_full_tree_q3_exhaustive():
    F, H = plane(3)
    T, stats, logs = build_collinear_cctree(F, eps=0.5, c=0.7, lazy=False, allow_small=True)
    rep = verify_cctree(T, H, mode="exhaustive")
    assert rep.ok and rep.checked_sets == 172
    assert all(x.labels[0].bit_count() < 4.5 for x in T.leaves())
    assert labels_are_collinear(T, F)
    assert not stats.partial and stats.nu == len(T.leaves())
    assert progress_violations(T, T.process.edges_of, 4.5) == []
    for x in T.nodes:
        if x.case == "deletion":
            assert len(x.children) == 1
        elif x.case == "container":
            assert len(x.children) == x.log["containers"]


def test_collinear_lazy_q7_sampled():
    F, H = plane(7)
    T, _, _ = build_collinear_cctree(F, eps=0.5, c=0.7, allow_small=True)
    rep = verify_cctree(T, H, mode="sampled", samples=10**4, rng=np.random.default_rng(7))
    assert rep.ok and rep.checked_sets == 10**4
    assert all(x.labels[0].bit_count() < 10.5 for x in T.leaves())
    assert labels_are_collinear(T, F)
    assert T.partial and tree_stats(T).partial


def test_collinear_q9_leaves_and_cliques():
    F, H = plane(9)
    T, stats, logs = build_collinear_cctree(F, eps=0.5, c=0.7)
    rep = verify_cctree(T, H, mode="sampled", samples=500, rng=np.random.default_rng(9))
    assert rep.ok
    assert all(x.labels[0].bit_count() < 13.5 for x in T.leaves())
    assert labels_are_collinear(T, F)
    assert progress_violations(T, T.process.edges_of, 13.5) == []
    assert math.isfinite(tree_stats(T).aleph_log2)
    assert logs[0]["c0"] == 81


def test_lazy_tree_is_deterministic():
    F, H = plane(9)
    texts = []
    for _ in range(2):
        T, _, _ = build_collinear_cctree(F, c=0.7)
        verify_cctree(T, H, mode="sampled", samples=100, rng=np.random.default_rng(3))
        texts.append(T.to_text(tree_stats(T)))
    assert texts[0] == texts[1]


def test_rich_exponent_hook():
    F = field_of_order(9)
    with pytest.raises(InvalidParams):
        build_collinear_cctree(F, rich_exponent=0)
    T, _, logs = build_collinear_cctree(F, c=0.7, rich_exponent=2 / 3)
    assert T.process.is_rich(81 // 9 ** (2 / 3) + 1, 81)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), keep=st.floats(0.2, 1.0))
def test_routed_independent_sets_land_in_their_leaf(seed, keep):
    F, H = _Q9
    T = _Q9_TREE
    rng = np.random.default_rng(seed)
    from evasets.hyper import random_maximal_independent_set
    full = bits_of(random_maximal_independent_set(H, rng))
    I = mask_of([v for v in full if rng.random() < keep])
    leaf = T.descend(I)
    assert leaf.case == "leaf" and I & ~leaf.union() == 0


_Q9 = plane(9)
_Q9_TREE = build_collinear_cctree(_Q9[0], c=0.7)[0]


# -- supersaturated hypergraph --------------------------------------------------------

def test_supersat_params():
    p = SupersatParams(1, 3, 2.0)
    assert p.epsilon == 1 / 6 and p.fraction == 1 / 6
    with pytest.raises(InvalidParams):
        SupersatParams(3, 3, 2.0)
    with pytest.raises(InvalidParams):
        SupersatParams(1, 3, 0.5)
    assert supersat_tau(2.0, 11, 2, 1, 60, 3) == pytest.approx(22 / (60 * 11 ** (1 / 6)))


def test_supersat_too_small():
    F = field_of_order(11)
    P = random_subset(F, 2, np.random.default_rng(0), size=20)
    with pytest.raises(TooSmall):
        supersat_hypergraph(P, SupersatParams(1, 3, 2.0), np.random.default_rng(0))


def test_supersat_rich_line():
    F = field_of_order(11)
    line = [(0, y) for y in range(11)]
    rest = [(x, y) for x in range(1, 11) for y in range(11) if (x * 7 + y * 3) % 5 == 0][:5]
    P = PointSet(F, 2, tuple(sorted(line + rest)))
    # 11 points on one line exceed 2 * 16 / sqrt(11)
    with pytest.raises(RichFlatPresent) as err:
        supersat_hypergraph(P, SupersatParams(1, 3, 1.0), np.random.default_rng(0))
    assert set(err.value.witness.points()) == set(line)


def _passing_set(q, m, seed):
    F = field_of_order(q)
    rng = np.random.default_rng(seed)
    while True:
        P = random_subset(F, 2, rng, size=m)
        if max(len(mem) for _, mem in flats_meeting(P, 1)) <= 2 * m / math.sqrt(q):
            return P


def test_supersat_edges_are_collinear_triples():
    P = _passing_set(11, 60, 1)
    H, cert = supersat_hypergraph(P, SupersatParams(1, 3, 2.0), np.random.default_rng(5))
    R = ref_field(11)
    pts = P.points
    edges = [tuple(e) for e in H.edges().tolist()]
    assert edges and len(edges) == len(set(edges))
    assert all(len(set(e)) == 3 and ref_collinear(R, *(pts[i] for i in e)) for e in edges)
    assert H.max_codegree(3) <= 1
    assert cert.edges == len(edges) and cert.m == 60 and not cert.sparse_branch
    assert [r["i"] for r in cert.rows] == [2, 3]
    assert cert.theta_needed == pytest.approx(cert.delta1 * 60 / cert.edges)


def test_supersat_is_a_subhypergraph_of_all_collinear_triples():
    P = _passing_set(13, 80, 2)
    H, _ = supersat_hypergraph(P, SupersatParams(1, 3, 2.0), np.random.default_rng(0))
    full = {tuple(e) for e in collinear_triple_hypergraph(P).edges().tolist()}
    assert {tuple(e) for e in H.edges().tolist()} <= full


def test_supersat_is_seed_deterministic():
    P = _passing_set(11, 60, 3)
    a, _ = supersat_hypergraph(P, SupersatParams(1, 3, 2.0), np.random.default_rng(9))
    b, _ = supersat_hypergraph(P, SupersatParams(1, 3, 2.0), np.random.default_rng(9))
    assert a.edges().tolist() == b.edges().tolist()


def test_supersat_sparse_branch_takes_every_krset():
    P = _passing_set(11, 60, 4)
    H, cert = supersat_hypergraph(P, SupersatParams(1, 3, 2.0, sparse_fraction=2.0), np.random.default_rng(0))
    assert cert.sparse_branch
    assert H.edges().tolist() == krset_hypergraph(P, 1, 3).edges().tolist()


def test_supersat_in_three_space():
    F = field_of_order(3)
    P = PointSet.full(F, 3)
    H, cert = supersat_hypergraph(P, SupersatParams(2, 4, 1.0), np.random.default_rng(0), check_rich=False)
    pts = P.points
    assert all(affine_rank(F, [pts[i] for i in e]) <= 2 for e in H.edges().tolist())
    assert H.max_codegree(4) <= 1


# -- (k, r) process -------------------------------------------------------------------

@pytest.mark.parametrize("theta", [1.0, 1.5])
def test_krset_tree_q4_exhaustive(theta):
    F = field_of_order(4)
    T, stats, logs = build_krset_cctree(F, 2, 1, 3, theta, 0.3, seed=1)
    H = krset_hypergraph(PointSet.full(F, 2), 1, 3)
    assert verify_cctree(T, H, mode="exhaustive").ok
    assert all(x.labels[0].bit_count() < 2 * theta * 4 for x in T.leaves())
    assert labels_are_collinear(T, F)
    for x in T.nodes:
        if x.case == "deletion":
            assert len(x.children) == 1
        elif x.case == "container":
            assert len(x.children) == x.log["containers"]
    assert math.isfinite(stats.aleph_log2) and not stats.partial
    if theta == 1.0:
        # small enough that rich lines are deleted, so the collinear check is not vacuous
        assert stats.kappa > 0


def test_krset_tree_is_seed_deterministic():
    F = field_of_order(4)
    a = build_krset_cctree(F, 2, 1, 3, 1.0, 0.3, seed=4)
    b = build_krset_cctree(F, 2, 1, 3, 1.0, 0.3, seed=4)
    assert a[0].to_text(a[1]) == b[0].to_text(b[1])


def test_krset_node_cap():
    with pytest.raises(NonTermination):
        build_krset_cctree(field_of_order(4), 2, 1, 3, 1.0, 0.3, seed=1, max_nodes=50)
    with pytest.raises(InvalidParams):
        build_krset_cctree(field_of_order(4), 2, 2, 3, 1.0, 0.3)
