import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evasets.container import (
    ContainerFamily, ContainerParams, Scythe, build_containers, check_codegree_condition, container_of,
    verify_containers,
)
from evasets.errors import InvalidParams, TooLarge
from evasets.fieldcore import field_new
from evasets.geom import PointSet
from evasets.hyper import (
    Hypergraph, bits_of, collinear_triple_hypergraph, complete_hypergraph, enumerate_independent_sets, fano_plane,
    mask_of,
)
from oracles import ref_independent_sets


def corpus():
    rng = np.random.default_rng(17)
    out = [fano_plane(), complete_hypergraph(6, 3), complete_hypergraph(8, 3), Hypergraph.empty(3, 7)]
    for nv, ne in [(9, 12), (12, 30), (15, 50), (18, 80)]:
        edges = {tuple(sorted(rng.choice(nv, 3, replace=False).tolist())) for _ in range(ne)}
        out.append(Hypergraph.from_edges(3, nv, edges))
    out.append(collinear_triple_hypergraph(PointSet.full(field_new(3, 1), 2)))
    out.append(collinear_triple_hypergraph(PointSet.full(field_new(2, 2), 2)))
    return out


def test_params_validation():
    with pytest.raises(InvalidParams):
        ContainerParams(0.5, 0.1)
    with pytest.raises(InvalidParams):
        ContainerParams(0.2, 1.0)
    assert ContainerParams(0.3, 0.1).cap_for(10, 3) == 9


def test_edgeless_gives_single_container():
    H = Hypergraph.empty(3, 6)
    fam = build_containers(H, ContainerParams(0.3, 0.1))
    assert fam.containers == [(1 << 6) - 1] and fam.fingerprints == [0]
    rep = verify_containers(H, fam)
    assert rep.a_pass and rep.c_pass


def test_complete_six_vertices():
    H = complete_hypergraph(6, 3)
    fam = build_containers(H, ContainerParams(0.4, 0.1))
    rep = verify_containers(H, fam)
    assert rep.checked_sets == 1 + 6 + 15
    assert rep.a_pass and rep.c_pass
    assert all(math.comb(C.bit_count(), 3) <= 0.9 * 20 for C in fam.containers)


def test_fano_fixture():
    H = fano_plane()
    fam = build_containers(H, ContainerParams(0.45, 0.05))
    rep = verify_containers(H, fam)
    assert rep.a_pass and rep.c_pass and rep.checked_sets == len(set(ref_independent_sets(7, H.edges().tolist())))


def test_missing_container_is_reported():
    H = fano_plane()
    fam = build_containers(H, ContainerParams(0.45, 0.05))
    broken = ContainerFamily(H.nv, fam.containers[1:], fam.fingerprints[1:], fam.params)
    rep = verify_containers(H, broken)
    assert not rep.a_pass and H.is_independent(rep.witness)
    assert not any(mask_of(rep.witness) & ~C == 0 for C in broken.containers)


def test_exhaustive_size_limit():
    H = Hypergraph.empty(3, 30)
    fam = build_containers(H, ContainerParams(0.3, 0.1))
    with pytest.raises(TooLarge):
        verify_containers(H, fam, mode="exhaustive")
    assert verify_containers(H, fam, mode="sampled", samples=5).a_pass


def test_family_text_round_trip():
    H = fano_plane()
    fam = build_containers(H, ContainerParams(0.45, 0.05))
    again = ContainerFamily.from_text(fam.to_text(), H.nv, fam.params)
    assert again.containers == fam.containers and again.fingerprints == fam.fingerprints


@pytest.mark.parametrize("H", corpus(), ids=lambda H: repr(H))
@pytest.mark.parametrize("tau,c", [(0.45, 0.05), (0.3, 0.2), (0.1, 0.5)])
def test_property_a_on_corpus(H, tau, c):
    fam = build_containers(H, ContainerParams(tau, c))
    rep = verify_containers(H, fam)
    assert rep.a_pass
    for F, C in zip(fam.fingerprints, fam.containers):
        assert F & ~C == 0
        assert H.is_independent(bits_of(F))


@pytest.mark.parametrize("H", corpus(), ids=lambda H: repr(H))
def test_trace_lands_in_family(H):
    params = ContainerParams(0.45, 0.05)
    fam = build_containers(H, params)
    pairs = dict(zip(fam.fingerprints, fam.containers))
    for I in enumerate_independent_sets(H):
        F, C = container_of(H, bits_of(I), params)
        assert pairs[mask_of(F)] == mask_of(C)
        assert I & ~mask_of(C) == 0


def test_determinism():
    H = corpus()[6]
    a = build_containers(H, ContainerParams(0.3, 0.1))
    b = build_containers(H, ContainerParams(0.3, 0.1))
    assert a.containers == b.containers and a.fingerprints == b.fingerprints


@pytest.mark.parametrize("H", corpus(), ids=lambda H: repr(H))
def test_fingerprint_size_is_monotone_in_tau(H):
    # tau only enters through the fingerprint cap, so a larger tau can only lengthen fingerprints
    sizes = [build_containers(H, ContainerParams(t, 0.05)).stats["max_fingerprint"] for t in (0.05, 0.1, 0.2, 0.3, 0.45)]
    assert sizes == sorted(sizes)


def test_support_runs_match_induced_hypergraph():
    H = corpus()[7]
    C = [0, 1, 2, 4, 6, 7, 9, 10, 13, 15, 16, 17]
    params = ContainerParams(0.45, 0.05)
    sub = H.induced(C)
    ours = Scythe(H).enumerate(params, support=C)
    theirs = Scythe(sub).enumerate(params)
    mapped = sorted((tuple(C[v] for v in F), tuple(C[v] for v in X.tolist())) for F, X in theirs)
    assert sorted((F, tuple(X.tolist())) for F, X in ours) == mapped


def test_codegree_condition_examples():
    holds, rows = check_codegree_condition(Hypergraph.empty(3, 5), 0.2, 0.1)
    assert holds and all(r["delta"] == 0 for r in rows)
    q = 11
    Hq = collinear_triple_hypergraph(PointSet.full(field_new(q, 1), 2))
    tau = 2 * math.sqrt(q) / Hq.nv
    holds, rows = check_codegree_condition(Hq, tau, 0.01)
    assert [r["i"] for r in rows] == [2, 3]
    assert rows[1]["delta"] <= 1 and rows[0]["delta"] == q - 2
    single = Hypergraph.from_edges(3, 10, [(0, 1, 2)])
    holds, rows = check_codegree_condition(single, 1e-3, 0.01)
    assert not holds and not rows[0]["holds"]


@st.composite
def small_hypergraphs(draw):
    nv = draw(st.integers(3, 12))
    edges = draw(st.lists(st.lists(st.integers(0, nv - 1), min_size=3, max_size=3, unique=True), max_size=30))
    return Hypergraph.from_edges(3, nv, [tuple(e) for e in edges])


@settings(max_examples=60, deadline=None)
@given(H=small_hypergraphs(), tau=st.floats(0.05, 0.49), c=st.floats(0.01, 0.9))
def test_property_a_is_unconditional(H, tau, c):
    fam = build_containers(H, ContainerParams(tau, c))
    assert verify_containers(H, fam).a_pass
