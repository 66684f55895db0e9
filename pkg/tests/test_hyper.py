import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evasets.errors import TooLarge, UnknownVertex
from evasets.fieldcore import field_new, field_of_order
from evasets.geom import PointSet, affine_rank, flats_meeting, random_subset
from evasets.hyper import (
    Hypergraph, bits_of, collinear_triple_hypergraph, complete_hypergraph, enumerate_independent_sets, fano_plane,
    greedy_independent_set, krset_hypergraph, mask_of, max_independent_set_brute, max_independent_set_exact,
    max_independent_set_heuristic, max_independent_set_milp, random_maximal_independent_set,
)
from oracles import ref_alpha, ref_codegree, ref_independent_sets

# maximum no-three-in-line sets of AG(2, q), computed once with the integer-programming oracle
ALPHA_PLANE = {3: 4, 4: 6, 5: 6, 7: 8}


def random_hypergraph(rng, nv, ne, r=3):
    edges = {tuple(sorted(rng.choice(nv, r, replace=False).tolist())) for _ in range(ne)}
    return Hypergraph.from_edges(r, nv, edges)


def corpus():
    rng = np.random.default_rng(7)
    out = [fano_plane(), complete_hypergraph(5, 3), complete_hypergraph(6, 3), Hypergraph.empty(3, 6)]
    out += [random_hypergraph(rng, nv, ne) for nv, ne in [(8, 10), (10, 25), (12, 30), (14, 20), (16, 60), (18, 40)]]
    out.append(collinear_triple_hypergraph(PointSet.full(field_new(3, 1), 2)))
    out.append(collinear_triple_hypergraph(PointSet.full(field_new(2, 2), 2)))
    return out


def test_codegree_examples():
    K4 = complete_hypergraph(4, 3)
    assert [K4.max_codegree(i) for i in (1, 2, 3)] == [3, 2, 1]
    F = fano_plane()
    assert F.max_codegree(1) == 3 and F.max_codegree(2) == 1
    E = Hypergraph.empty(3, 5)
    assert [E.max_codegree(i) for i in (1, 2, 3)] == [0, 0, 0]


@pytest.mark.parametrize("H", corpus()[:8], ids=lambda H: repr(H))
def test_codegree_matches_oracle(H):
    edges = H.edges().tolist()
    for i in range(1, H.r + 1):
        assert H.max_codegree(i) == ref_codegree(edges, i, H.nv)


def test_independence_and_clique_examples():
    F = fano_plane()
    assert F.is_clique([0, 1]) and F.is_independent([0, 1])
    assert not F.is_independent([0, 1, 2, 3])
    Hc = collinear_triple_hypergraph(PointSet.full(field_new(5, 1), 2))
    line = [i for i, p in enumerate(Hc.labels) if p[0] == 2]
    assert Hc.is_clique(line)
    with pytest.raises(UnknownVertex):
        F.is_independent([9])


def test_induced_examples():
    rng = np.random.default_rng(3)
    H = random_hypergraph(rng, 12, 30)
    assert H.induced(range(12)).edges().tolist() == H.edges().tolist()
    assert H.induced([]).num_edges() == 0
    C = [0, 2, 3, 5, 7, 8, 11]
    expected = sorted(tuple(C.index(v) for v in e) for e in H.edges().tolist() if set(e) <= set(C))
    assert [tuple(e) for e in H.induced(C).edges().tolist()] == expected
    assert H.induced(C).parent_map.tolist() == C


def test_text_round_trip():
    H = fano_plane()
    text = H.to_text()
    assert text.splitlines()[0] == "3 7 7"
    assert Hypergraph.from_text(text).edges().tolist() == H.edges().tolist()


def test_duplicate_edges_are_merged():
    H = Hypergraph.from_edges(3, 4, [(0, 1, 2), (2, 1, 0), (1, 2, 3)])
    assert H.num_edges() == 2
    with pytest.raises(ValueError):
        Hypergraph.from_edges(3, 4, [(0, 0, 1)])


def test_block_storage_matches_explicit_edges():
    F = field_new(3, 1)
    P = PointSet.full(F, 2)
    H = collinear_triple_hypergraph(P)
    edges = {t for t in itertools.combinations(range(9), 3) if affine_rank(F, [P.points[i] for i in t]) <= 1}
    assert {tuple(e) for e in H.edges().tolist()} == edges
    K = krset_hypergraph(PointSet.full(field_new(2, 1), 3), 2, 4)
    F2 = field_new(2, 1)
    P3 = PointSet.full(F2, 3)
    coplanar = {t for t in itertools.combinations(range(8), 4) if affine_rank(F2, [P3.points[i] for i in t]) <= 2}
    assert {tuple(e) for e in K.edges().tolist()} == coplanar


def test_mis_examples():
    assert max_independent_set_exact(Hypergraph.empty(3, 9))[0] == 9
    assert max_independent_set_exact(complete_hypergraph(5, 3))[0] == 2
    assert max_independent_set_exact(fano_plane())[0] == 4
    with pytest.raises(TooLarge):
        max_independent_set_exact(Hypergraph.empty(3, 200))


@pytest.mark.parametrize("H", corpus(), ids=lambda H: repr(H))
def test_exact_mis_agrees_with_brute_force(H):
    size, witness = max_independent_set_exact(H)
    assert H.is_independent(witness) and len(witness) == size
    assert size == max_independent_set_brute(H)[0] == ref_alpha(H.nv, H.edges().tolist())


@pytest.mark.parametrize("q", sorted(ALPHA_PLANE))
def test_exact_mis_on_planes(q):
    H = collinear_triple_hypergraph(PointSet.full(field_of_order(q), 2))
    size, witness = max_independent_set_exact(H)
    assert size == ALPHA_PLANE[q] <= 2 * q
    assert max_independent_set_milp(H)[0] == size
    # at most two points on each line
    for _, m in flats_meeting(PointSet.full(field_of_order(q), 2), 1):
        assert len(set(m.tolist()) & set(witness)) <= 2


def test_exact_mis_matches_milp_on_random_plane_subsets():
    rng = np.random.default_rng(11)
    for q in (7, 9, 11):
        F = field_of_order(q)
        for _ in range(3):
            H = collinear_triple_hypergraph(random_subset(F, 2, rng, p=0.5))
            assert max_independent_set_exact(H)[0] == max_independent_set_milp(H)[0]


def test_heuristic_and_greedy_are_lower_bounds():
    rng = np.random.default_rng(5)
    for H in corpus():
        best = max_independent_set_brute(H)[0]
        h, w = max_independent_set_heuristic(H, rng, restarts=20)
        assert H.is_independent(w) and h <= best
        assert H.is_independent(bits_of(greedy_independent_set(H)))


def test_enumerate_independent_sets_matches_oracle():
    for H in corpus()[:6]:
        ours = {frozenset(bits_of(m)) for m in enumerate_independent_sets(H)}
        assert ours == set(ref_independent_sets(H.nv, H.edges().tolist()))


def test_random_maximal_independent_set_is_maximal():
    rng = np.random.default_rng(2)
    H = collinear_triple_hypergraph(PointSet.full(field_new(7, 1), 2))
    for _ in range(20):
        S = random_maximal_independent_set(H, rng)
        assert H.is_independent(bits_of(S))
        for v in range(H.nv):
            if not S >> v & 1:
                assert not H.is_independent(bits_of(S | 1 << v))


@st.composite
def hypergraphs(draw):
    nv = draw(st.integers(3, 11))
    r = draw(st.integers(2, 4).filter(lambda r: r <= nv))
    edges = draw(st.lists(st.lists(st.integers(0, nv - 1), min_size=r, max_size=r, unique=True), max_size=25))
    return Hypergraph.from_edges(r, nv, [tuple(e) for e in edges])


@settings(max_examples=80, deadline=None)
@given(H=hypergraphs())
def test_codegree_monotone_and_handshake(H):
    deltas = [H.max_codegree(i) for i in range(1, H.r + 1)]
    assert all(a >= b for a, b in zip(deltas, deltas[1:]))
    assert deltas[-1] in (0, 1)
    assert int(H.degrees().sum()) == H.r * H.num_edges()


@settings(max_examples=80, deadline=None)
@given(H=hypergraphs(), data=st.data())
def test_independent_set_meets_clique_in_fewer_than_r(H, data):
    S = data.draw(st.sets(st.integers(0, H.nv - 1)))
    T = data.draw(st.sets(st.integers(0, H.nv - 1)))
    if H.is_independent(sorted(S)) and H.is_clique(sorted(T)):
        assert len(S & T) < H.r
    if len(S) >= H.r and any(H.is_edge(e) for e in itertools.combinations(sorted(S), H.r)):
        assert not H.is_independent(sorted(S))


@settings(max_examples=60, deadline=None)
@given(H=hypergraphs())
def test_exact_mis_property(H):
    size, witness = max_independent_set_exact(H)
    assert H.is_independent(witness)
    assert size == max_independent_set_brute(H)[0]


def test_mask_helpers():
    assert bits_of(mask_of([0, 3, 5])) == [0, 3, 5]
    assert mask_of([]) == 0
