"""Uniform hypergraphs stored as blocks, plus independence, cliques and exact MIS.

An r-uniform hypergraph is stored through a list of *blocks*: vertex sets of
size >= r such that the edges are exactly the r-subsets of the blocks, and any
two blocks share fewer than r vertices (so every edge lies in exactly one
block).  A general hypergraph simply uses its edges as blocks.  Geometric
hypergraphs are much more compact this way: the collinear-triple hypergraph of
a planar point set has one block per line carrying at least three points.
"""
from __future__ import annotations

import itertools
import sys
from functools import lru_cache
from math import comb

import numpy as np

from .errors import DimensionMismatch, TooLarge, UnknownVertex

DEFAULT_MIS_CAP = 128


@lru_cache(maxsize=None)
def _combos(s: int, r: int) -> np.ndarray:
    out = np.array(list(itertools.combinations(range(s), r)), dtype=np.int64)
    return out.reshape(-1, r)


def _popcount(x: int) -> int:
    return x.bit_count()


def mask_of(vertices) -> int:
    m = 0
    for v in vertices:
        m |= 1 << int(v)
    return m


def bits_of(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class Hypergraph:
    """An r-uniform hypergraph on vertices 0..nv-1.

    ``labels`` optionally maps each vertex to an object (e.g. a point), and
    ``parent_map`` records the vertex index in the hypergraph this one was
    induced from.
    """

    def __init__(self, r: int, nv: int, blocks, labels=None, parent_map=None, _trusted=False):
        if r < 1:
            raise ValueError("uniformity must be >= 1")
        self.r = int(r)
        self.nv = int(nv)
        blks = []
        for b in blocks:
            t = tuple(sorted(int(v) for v in b))
            if not _trusted:
                if len(set(t)) != len(t):
                    raise ValueError(f"block {t} repeats a vertex")
                if t and (t[0] < 0 or t[-1] >= self.nv):
                    raise UnknownVertex(f"block {t} mentions a vertex outside 0..{self.nv - 1}")
            if len(t) >= self.r:
                blks.append(t)
        self.blocks = blks
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.nv:
            raise DimensionMismatch("one label per vertex is required")
        self.parent_map = None if parent_map is None else np.asarray(parent_map, dtype=np.int64)
        self.block_sizes = np.array([len(b) for b in blks], dtype=np.int64)
        self._vertex_blocks = None
        self._block_masks = None
        self._edges = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_edges(cls, r: int, nv: int, edges, labels=None) -> "Hypergraph":
        seen = set()
        for e in edges:
            t = tuple(sorted(int(v) for v in e))
            if len(t) != r or len(set(t)) != r:
                raise ValueError(f"edge {tuple(e)} does not have {r} distinct vertices")
            seen.add(t)
        return cls(r, nv, sorted(seen), labels)

    @classmethod
    def empty(cls, r: int, nv: int, labels=None) -> "Hypergraph":
        return cls(r, nv, [], labels)

    # -- basic structure ------------------------------------------------------

    @property
    def vertex_blocks(self) -> list[list[int]]:
        if self._vertex_blocks is None:
            vb = [[] for _ in range(self.nv)]
            for i, b in enumerate(self.blocks):
                for v in b:
                    vb[v].append(i)
            self._vertex_blocks = vb
        return self._vertex_blocks

    @property
    def block_masks(self) -> list[int]:
        if self._block_masks is None:
            self._block_masks = [mask_of(b) for b in self.blocks]
        return self._block_masks

    def num_edges(self) -> int:
        return sum(comb(len(b), self.r) for b in self.blocks)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.nv, dtype=np.int64)
        for b in self.blocks:
            deg[list(b)] += comb(len(b) - 1, self.r - 1)
        return deg

    def edges(self) -> np.ndarray:
        """All edges as a lexicographically sorted (|E|, r) array."""
        if self._edges is None:
            chunks = []
            by_size: dict = {}
            for b in self.blocks:
                by_size.setdefault(len(b), []).append(b)
            for s, group in by_size.items():
                arr = np.array(group, dtype=np.int64)
                chunks.append(arr[:, _combos(s, self.r)].reshape(-1, self.r))
            if chunks:
                E = np.concatenate(chunks)
                E = E[np.lexsort(E.T[::-1])]
            else:
                E = np.zeros((0, self.r), dtype=np.int64)
            self._edges = E
        return self._edges

    def __repr__(self):
        return f"Hypergraph(r={self.r}, |V|={self.nv}, |E|={self.num_edges()})"

    def _check_vertices(self, S) -> list[int]:
        if isinstance(S, int) and not isinstance(S, bool):
            S = bits_of(S)
        S = sorted(set(int(v) for v in S))
        if S and (S[0] < 0 or S[-1] >= self.nv):
            raise UnknownVertex(f"vertex set mentions a vertex outside 0..{self.nv - 1}")
        return S

    # -- codegrees ------------------------------------------------------------

    def max_codegree(self, i: int) -> int:
        """Largest number of edges containing a fixed i-set."""
        return int(self.codegree_profile(i).max(initial=0))

    def codegree_profile(self, i: int) -> np.ndarray:
        """Edge counts of every i-set that lies in at least one edge."""
        r = self.r
        if not 1 <= i <= r:
            raise ValueError(f"need 1 <= i <= r, got {i}")
        if not self.blocks:
            return np.zeros(0, dtype=np.int64)
        keys, weights = [], []
        by_size: dict = {}
        for b in self.blocks:
            by_size.setdefault(len(b), []).append(b)
        for s, group in by_size.items():
            arr = np.array(group, dtype=np.int64)
            subs = arr[:, _combos(s, i)].reshape(-1, i)
            keys.append(subs)
            weights.append(np.full(len(subs), comb(s - i, r - i), dtype=np.int64))
        K = np.concatenate(keys)
        W = np.concatenate(weights)
        if self.nv ** i < 2**62:
            code = np.zeros(len(K), dtype=np.int64)
            for j in range(i):
                code = code * self.nv + K[:, j]
            _, inv = np.unique(code, return_inverse=True)
        else:
            _, inv = np.unique(K, axis=0, return_inverse=True)
        return np.bincount(inv.ravel(), weights=W).astype(np.int64)

    # -- set predicates -------------------------------------------------------

    def block_counts(self, S) -> np.ndarray:
        """|B ∩ S| for every block B."""
        S = self._check_vertices(S)
        inS = np.zeros(self.nv, dtype=bool)
        inS[S] = True
        return np.array([int(inS[list(b)].sum()) for b in self.blocks], dtype=np.int64)

    def is_independent(self, S) -> bool:
        S = self._check_vertices(S)
        if len(S) < self.r:
            return True
        m = mask_of(S)
        vb = self.vertex_blocks
        masks = self.block_masks
        seen = set()
        for v in S:
            for b in vb[v]:
                if b not in seen:
                    seen.add(b)
                    if _popcount(masks[b] & m) >= self.r:
                        return False
        return True

    def is_edge(self, T) -> bool:
        T = self._check_vertices(T)
        if len(T) != self.r:
            return False
        common = set(self.vertex_blocks[T[0]])
        for v in T[1:]:
            common &= set(self.vertex_blocks[v])
            if not common:
                return False
        return bool(common)

    def is_clique(self, S) -> bool:
        S = self._check_vertices(S)
        if len(S) < self.r:
            return True
        m = mask_of(S)
        masks = self.block_masks
        for b in self.vertex_blocks[S[0]]:
            if masks[b] & m == m:
                return True
        return all(self.is_edge(T) for T in itertools.combinations(S, self.r))

    # -- derived hypergraphs ----------------------------------------------------

    def induced(self, C) -> "Hypergraph":
        """Sub-hypergraph on C, re-indexed by the sorted order of C."""
        C = self._check_vertices(C)
        newidx = np.full(self.nv, -1, dtype=np.int64)
        newidx[C] = np.arange(len(C))
        blocks = []
        for b in self.blocks:
            mapped = newidx[list(b)]
            mapped = mapped[mapped >= 0]
            if len(mapped) >= self.r:
                blocks.append(tuple(mapped.tolist()))
        labels = None if self.labels is None else [self.labels[v] for v in C]
        parent = np.array(C, dtype=np.int64)
        if self.parent_map is not None:
            parent = self.parent_map[parent]
        return Hypergraph(self.r, len(C), blocks, labels, parent, _trusted=True)

    # -- text format -------------------------------------------------------------

    def to_text(self) -> str:
        E = self.edges()
        lines = [f"{self.r} {self.nv} {len(E)}"]
        lines += [" ".join(map(str, e)) for e in E.tolist()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Hypergraph":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        r, nv, ne = (int(t) for t in lines[0].split())
        edges = [tuple(int(t) for t in ln.split()) for ln in lines[1: 1 + ne]]
        if len(edges) != ne:
            raise ValueError(f"header promises {ne} edges, found {len(edges)}")
        return cls.from_edges(r, nv, edges)


# -- standard hypergraphs --------------------------------------------------------

def complete_hypergraph(nv: int, r: int) -> Hypergraph:
    if nv < r:
        return Hypergraph.empty(r, nv)
    return Hypergraph(r, nv, [tuple(range(nv))])


def fano_plane() -> Hypergraph:
    lines = [(0, 1, 2), (0, 3, 4), (0, 5, 6), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5)]
    return Hypergraph.from_edges(3, 7, lines)


def collinear_triple_hypergraph(P) -> Hypergraph:
    """Vertices are the points of P (in sorted order); edges are its collinear triples."""
    from .geom import flats_meeting

    if P.n != 2:
        raise DimensionMismatch("collinear triples are planar")
    blocks = [tuple(m.tolist()) for _, m in flats_meeting(P, 1, min_count=3)]
    return Hypergraph(3, len(P), blocks, labels=P.points, _trusted=True)


def krset_hypergraph(P, k: int, r: int) -> Hypergraph:
    """Edges are the r-subsets of P lying in a common k-flat."""
    from .geom import flats_meeting

    if not 1 <= k < r:
        raise ValueError("need 1 <= k < r")
    found = flats_meeting(P, k, min_count=r)
    blocks = [tuple(m.tolist()) for _, m in found]
    if k == P.n or k == 1:
        # distinct lines share at most one point; the whole space is one block
        return Hypergraph(r, len(P), blocks, labels=P.points, _trusted=True)
    edges = set()
    for b in blocks:
        edges.update(itertools.combinations(b, r))
    return Hypergraph(r, len(P), sorted(edges), labels=P.points, _trusted=True)


# -- independent sets ---------------------------------------------------------------

def random_maximal_independent_set(H: Hypergraph, rng, within: int | None = None) -> int:
    """Greedy maximal independent set over a random vertex order, as a bitmask."""
    r = H.r
    order = rng.permutation(H.nv)
    allowed = (1 << H.nv) - 1 if within is None else within
    cnt = [0] * len(H.blocks)
    vb = H.vertex_blocks
    masks = H.block_masks
    forbidden = ~allowed
    S = 0
    for v in order.tolist():
        if (forbidden >> v) & 1:
            continue
        S |= 1 << v
        forbidden |= 1 << v
        for b in vb[v]:
            cnt[b] += 1
            if cnt[b] == r - 1:
                forbidden |= masks[b]
    return S


def enumerate_independent_sets(H: Hypergraph, cap: int = 10**7):
    """Yield every independent set of H as a bitmask (depth-first, increasing vertices)."""
    r = H.r
    vb = H.vertex_blocks
    masks = H.block_masks
    cnt = [0] * len(H.blocks)
    produced = 0

    def rec(start: int, S: int, blocked: int):
        nonlocal produced
        produced += 1
        if produced > cap:
            raise TooLarge(f"more than {cap} independent sets")
        yield S
        for v in range(start, H.nv):
            if (blocked >> v) & 1:
                continue
            newly = 0
            for b in vb[v]:
                cnt[b] += 1
                if cnt[b] == r - 1:
                    newly |= masks[b]
            yield from rec(v + 1, S | (1 << v), blocked | newly)
            for b in vb[v]:
                cnt[b] -= 1

    if r == 1:
        # every single vertex is an edge
        yield 0
        return
    yield from rec(0, 0, 0)


def max_independent_set_brute(H: Hypergraph) -> tuple[int, list[int]]:
    """Reference answer by scanning all 2^|V| subsets (small H only)."""
    if H.nv > 22:
        raise TooLarge("brute force limited to 22 vertices")
    best, witness = 0, 0
    for S in range(1 << H.nv):
        size = _popcount(S)
        if size > best and H.is_independent(S):
            best, witness = size, S
    return best, bits_of(witness)


def greedy_independent_set(H: Hypergraph, order=None) -> int:
    r = H.r
    order = range(H.nv) if order is None else order
    cnt = [0] * len(H.blocks)
    vb, masks = H.vertex_blocks, H.block_masks
    S, forbidden = 0, 0
    for v in order:
        v = int(v)
        if (forbidden >> v) & 1 or r == 1:
            continue
        S |= 1 << v
        forbidden |= 1 << v
        for b in vb[v]:
            cnt[b] += 1
            if cnt[b] == r - 1:
                forbidden |= masks[b]
    return S


def max_independent_set_heuristic(H: Hypergraph, rng, restarts: int = 200) -> tuple[int, list[int]]:
    """Best of many random greedy runs; a lower bound on the independence number."""
    best = greedy_independent_set(H, np.argsort(-H.degrees(), kind="stable"))
    for _ in range(restarts):
        S = random_maximal_independent_set(H, rng)
        if _popcount(S) > _popcount(best):
            best = S
    return _popcount(best), bits_of(best)


def max_independent_set_exact(H: Hypergraph, cap: int = DEFAULT_MIS_CAP) -> tuple[int, list[int]]:
    """Maximum independent set by branch and bound.

    Vertices are ranked by descending degree (ties by index).  With nothing
    chosen yet, the branch vertex is the first candidate in that order; once an
    anchor vertex is chosen, it is the first candidate of the emptiest block
    through the anchor (fail-first).  Taking a vertex removes every candidate
    that would complete an edge with the chosen ones.  A branch is cut when the
    chosen count plus an upper bound on the rest cannot beat the incumbent; the
    bound is the smaller of the candidate count and the sum of remaining block
    capacities over the blocks through the anchor.  The incumbent starts from
    the greedy set in rank order.
    """
    if H.nv > cap:
        raise TooLarge(f"|V| = {H.nv} exceeds the exact-solver cap {cap}")
    r = H.r
    if r == 1:
        return 0, []
    nv = H.nv
    order = np.lexsort((np.arange(nv), -H.degrees())).tolist()
    rank = [0] * nv
    for i, v in enumerate(order):
        rank[v] = i
    blocks = [[rank[v] for v in b] for b in H.blocks]
    bmask = [mask_of(b) for b in blocks]
    vblocks = [[] for _ in range(nv)]
    for i, b in enumerate(blocks):
        for v in b:
            vblocks[v].append(i)
    cover = [0] * nv
    for v in range(nv):
        for b in vblocks[v]:
            cover[v] |= bmask[b]
    cnt = [0] * len(blocks)

    inc = greedy_independent_set(H, order)
    best = [_popcount(inc), mask_of(rank[v] for v in bits_of(inc))]
    chosen: list[int] = []

    def anchor_bound(u: int, cand: int, limit: int) -> int:
        total = _popcount(cand & ~cover[u])
        for b in vblocks[u]:
            inside = _popcount(bmask[b] & cand)
            if inside:
                room = r - 1 - cnt[b]
                total += inside if inside < room else room
                if total >= limit:
                    break
        return total

    def rec(S: int, cand: int):
        size = len(chosen)
        if cand == 0:
            if size > best[0]:
                best[0], best[1] = size, S
            return
        if size + _popcount(cand) <= best[0]:
            return
        pool = cand
        if chosen:
            u = chosen[0]
            if size + anchor_bound(u, cand, best[0] + 1 - size) <= best[0]:
                return
            fewest = nv + 1
            for b in vblocks[u]:
                inside = bmask[b] & cand
                if inside:
                    k = _popcount(inside)
                    if k < fewest:
                        fewest, pool = k, inside
        low = pool & -pool
        v = low.bit_length() - 1
        rest = cand ^ low
        newcand = rest
        for b in vblocks[v]:
            cnt[b] += 1
            if cnt[b] >= r - 1:
                newcand &= ~bmask[b]
        chosen.append(v)
        rec(S | low, newcand)
        chosen.pop()
        for b in vblocks[v]:
            cnt[b] -= 1
        rec(S, rest)

    limit = sys.getrecursionlimit()
    if limit < 2 * nv + 100:
        sys.setrecursionlimit(2 * nv + 100)
    rec(0, (1 << nv) - 1)
    witness = sorted(order[i] for i in bits_of(best[1]))
    assert H.is_independent(witness)
    return best[0], witness


def max_independent_set_milp(H: Hypergraph) -> tuple[int, list[int]]:
    """Independence number from an integer program: each block holds at most r-1 chosen vertices.

    Used as an independent cross-check of the branch-and-bound solver.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import csr_matrix

    nv, r = H.nv, H.r
    if nv == 0:
        return 0, []
    if not H.blocks:
        return nv, list(range(nv))
    rows, cols = [], []
    for i, b in enumerate(H.blocks):
        rows.extend([i] * len(b))
        cols.extend(b)
    A = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(H.blocks), nv))
    res = milp(
        c=-np.ones(nv),
        constraints=LinearConstraint(A, -np.inf, r - 1),
        integrality=np.ones(nv),
        bounds=Bounds(0, 1),
    )
    if not res.success:
        raise RuntimeError(f"integer program failed: {res.message}")
    witness = [int(i) for i in np.flatnonzero(res.x > 0.5)]
    return len(witness), witness
