"""Hypergraph containers by the maximum-degree fingerprint procedure.

Given an r-uniform hypergraph H, an independent set I is traced as follows.
Keep a fingerprint F (vertices known to be in I) and an available set A
(vertices still undecided), starting from F = ∅ and A = V.  While the
hypergraph induced on F ∪ A still spans more than (1 - c)|E(H)| edges, the
fingerprint is below its cap and A is nonempty:

* pick the vertex v of A with the largest degree in H[F ∪ A]
  (ties to the smallest index);
* if v ∈ I, move it to F and drop from A every vertex that would complete an
  edge together with r - 1 vertices of F;
* otherwise drop v from A.

The container of I is F ∪ A.  Because the path is fixed by I, and F already
determines I's answers along it, the containers are indexed by fingerprints.
Enumerating both answers at every step yields the whole family, and every
independent set lies in the container of its own trace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, TooLarge
from .hyper import Hypergraph, bits_of, enumerate_independent_sets, mask_of, random_maximal_independent_set

DEFAULT_MAX_CONTAINERS = 10**6
# recorded in report metadata so a run says which container procedure produced it
CONTAINER_VARIANT = "max-degree fingerprint, unconditional coverage"


@dataclass(frozen=True)
class ContainerParams:
    tau: float
    c: float
    fingerprint_cap: int | None = None

    def __post_init__(self):
        if not 0 < self.tau < 0.5:
            raise InvalidParams(f"tau must lie in (0, 1/2), got {self.tau}")
        if not 0 < self.c < 1:
            raise InvalidParams(f"c must lie in (0, 1), got {self.c}")
        if self.fingerprint_cap is not None and self.fingerprint_cap < 0:
            raise InvalidParams("fingerprint_cap must be nonnegative")

    def cap_for(self, nv: int, r: int) -> int:
        if self.fingerprint_cap is not None:
            return self.fingerprint_cap
        return math.ceil(self.tau * nv) * r


@dataclass
class ContainerFamily:
    """Containers and their fingerprints, as vertex bitmasks, in fingerprint-lexicographic order."""

    nv: int
    containers: list
    fingerprints: list
    params: ContainerParams
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.containers)

    def container_sets(self) -> list[list[int]]:
        return [bits_of(C) for C in self.containers]

    def to_text(self) -> str:
        lines = []
        for F, C in zip(self.fingerprints, self.containers):
            lines.append(" ".join(map(str, bits_of(F))) + " | " + " ".join(map(str, bits_of(C))))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, nv: int, params: ContainerParams) -> "ContainerFamily":
        conts, fps = [], []
        for ln in text.splitlines():
            if not ln.strip():
                continue
            left, right = ln.split("|")
            fps.append(mask_of(int(t) for t in left.split()))
            conts.append(mask_of(int(t) for t in right.split()))
        return cls(nv, conts, fps, params)


class Scythe:
    """Precomputed incidence arrays for running the fingerprint procedure on H.

    Every run takes a *support*: the procedure then acts on the induced
    hypergraph H[support] without re-indexing, and vertex-index tie-breaking
    matches the induced hypergraph's own order.
    """

    def __init__(self, H: Hypergraph):
        self.H = H
        self.r = H.r
        self.nv = H.nv
        sizes = H.block_sizes
        self.nblocks = len(H.blocks)
        self.flat = np.array([v for b in H.blocks for v in b], dtype=np.int64)
        self.bid = np.repeat(np.arange(self.nblocks), sizes) if self.nblocks else np.zeros(0, dtype=np.int64)
        vb = H.vertex_blocks
        self.vblocks = [np.array(b, dtype=np.int64) for b in vb]
        top = int(sizes.max(initial=0)) + 1
        r = self.r
        self.deg_weight = np.array([math.comb(n - 1, r - 1) if n >= 1 else 0 for n in range(top)], dtype=np.int64)
        self.edge_weight = np.array([math.comb(n, r) for n in range(top)], dtype=np.int64)
        self.block_arrays = [np.array(b, dtype=np.int64) for b in H.blocks]
        # for each vertex, the members of its blocks and the position of the block in vblocks
        self.vmembers = []
        self.vmember_blocks = []
        for b in vb:
            if b:
                self.vmembers.append(np.concatenate([self.block_arrays[j] for j in b]))
                self.vmember_blocks.append(np.repeat(np.arange(len(b)), sizes[b]))
            else:
                self.vmembers.append(np.zeros(0, dtype=np.int64))
                self.vmember_blocks.append(np.zeros(0, dtype=np.int64))

    # -- state -------------------------------------------------------------
    # A state is (inX, inA, nX, nF, deg): X = F ∪ A, nX[b] = |B ∩ X|, nF[b] = |B ∩ F|,
    # and deg[u] is the degree of u in H[X] (kept for every vertex of X).

    def _start(self, support: np.ndarray):
        inX = support.copy()
        inA = support.copy()
        if self.nblocks:
            nX = np.bincount(self.bid, weights=inX[self.flat], minlength=self.nblocks).astype(np.int64)
            deg = np.bincount(self.flat, weights=self.deg_weight[nX][self.bid], minlength=self.nv).astype(np.int64)
        else:
            nX = np.zeros(0, dtype=np.int64)
            deg = np.zeros(self.nv, dtype=np.int64)
        nF = np.zeros(self.nblocks, dtype=np.int64)
        return [inX, inA, nX, nF, deg]

    @staticmethod
    def _copy(state):
        return [a.copy() for a in state]

    def edges_in(self, nX: np.ndarray) -> int:
        return int(self.edge_weight[nX].sum()) if len(nX) else 0

    def _pick(self, state) -> int:
        inA, deg = state[1], state[4]
        cand = np.flatnonzero(inA)
        return int(cand[np.argmax(deg[cand])])

    def _remove(self, state, drop):
        """Take the vertices in ``drop`` out of X (and A), updating counts and degrees."""
        inX, inA, nX, _, deg = state
        inA[drop] = False
        inX[drop] = False
        for u in drop:
            blocks = self.vblocks[u]
            if len(blocks) == 0:
                continue
            old = self.deg_weight[nX[blocks]]
            nX[blocks] -= 1
            delta = self.deg_weight[nX[blocks]] - old
            deg += np.bincount(self.vmembers[u], weights=delta[self.vmember_blocks[u]], minlength=self.nv).astype(np.int64)

    def _include(self, v, state):
        inA, nF = state[1], state[3]
        inA[v] = False
        blocks = self.vblocks[v]
        if len(blocks) == 0:
            return
        nF[blocks] += 1
        full = blocks[nF[blocks] >= self.r - 1]
        if len(full):
            members = np.concatenate([self.block_arrays[b] for b in full.tolist()])
            drop = np.unique(members[inA[members]])
            if len(drop):
                self._remove(state, drop.tolist())

    def _exclude(self, v, state):
        self._remove(state, [v])

    def _params(self, support, params: ContainerParams):
        nsup = int(support.sum())
        cap = params.cap_for(nsup, self.r)
        return cap

    # -- runs ----------------------------------------------------------------

    def trace(self, independent, params: ContainerParams, support=None):
        """Follow one independent set; returns (fingerprint, container, steps) as index arrays."""
        support = self._support(support)
        member = np.zeros(self.nv, dtype=bool)
        member[np.asarray(independent, dtype=np.int64)] = True
        state = self._start(support)
        inX, inA, nX = state[0], state[1], state[2]
        e0 = self.edges_in(nX)
        target = (1 - params.c) * e0
        cap = self._params(support, params)
        F = []
        steps = 0
        e = e0
        while e > target and len(F) < cap and inA.any():
            v = self._pick(state)
            if member[v]:
                F.append(v)
                self._include(v, state)
            else:
                self._exclude(v, state)
            e = self.edges_in(nX)
            steps += 1
        return np.array(sorted(F), dtype=np.int64), np.flatnonzero(inX), steps

    def enumerate(self, params: ContainerParams, support=None, max_containers=DEFAULT_MAX_CONTAINERS):
        """Every (fingerprint, container) pair reachable by some answer sequence."""
        support = self._support(support)
        state = self._start(support)
        e0 = self.edges_in(state[2])
        target = (1 - params.c) * e0
        cap = self._params(support, params)
        out = {}
        stack = [((), state)]
        while stack:
            F, state = stack.pop()
            e = self.edges_in(state[2])
            if e <= target or len(F) >= cap or not state[1].any():
                key = tuple(sorted(F))
                out.setdefault(key, np.flatnonzero(state[0]))
                if len(out) > max_containers:
                    raise TooLarge(f"container family exceeds {max_containers} members")
                continue
            v = self._pick(state)
            out_state = self._copy(state)
            self._exclude(v, out_state)
            stack.append((F, out_state))
            self._include(v, state)
            stack.append((F + (v,), state))
        return sorted(out.items())

    def _support(self, support):
        if support is None:
            return np.ones(self.nv, dtype=bool)
        support = np.asarray(support)
        if support.dtype == bool:
            return support.copy()
        s = np.zeros(self.nv, dtype=bool)
        s[support.astype(np.int64)] = True
        return s


def build_containers(H: Hypergraph, params: ContainerParams, max_containers: int = DEFAULT_MAX_CONTAINERS) -> ContainerFamily:
    """The full container family of H."""
    if H.nv == 0:
        raise InvalidParams("container families need a nonempty vertex set")
    if H.r < 2:
        raise InvalidParams("containers need uniformity r >= 2")
    sc = Scythe(H)
    pairs = sc.enumerate(params, max_containers=max_containers)
    fps = [mask_of(F) for F, _ in pairs]
    conts = [mask_of(C.tolist()) for _, C in pairs]
    e0 = H.num_edges()
    stats = container_stats(H, conts, fps, params)
    stats["edges"] = e0
    return ContainerFamily(H.nv, conts, fps, params, stats)


def container_of(H: Hypergraph, independent, params: ContainerParams) -> tuple[list[int], list[int]]:
    """The (fingerprint, container) pair that the procedure assigns to one independent set."""
    F, C, _ = Scythe(H).trace(independent, params)
    return F.tolist(), C.tolist()


def _edges_within(H: Hypergraph, mask: int) -> int:
    return sum(math.comb((bm & mask).bit_count(), H.r) for bm in H.block_masks)


def container_stats(H: Hypergraph, conts, fps, params: ContainerParams) -> dict:
    e0 = H.num_edges()
    fractions = [(_edges_within(H, C) / e0) if e0 else 0.0 for C in conts]
    return {
        "count": len(conts),
        "log2_count": math.log2(len(conts)) if conts else 0.0,
        "max_edge_fraction": max(fractions, default=0.0),
        "max_fingerprint": max((F.bit_count() for F in fps), default=0),
        "max_container": max((C.bit_count() for C in conts), default=0),
    }


def family_size_log2_bound(nv: int, params: ContainerParams) -> float:
    """c^{-1} tau |V| log2(1/tau), the advertised size of the log of the family."""
    return params.tau * nv * math.log2(1 / params.tau) / params.c


def check_codegree_condition(H: Hypergraph, tau: float, c: float) -> tuple[bool, list[dict]]:
    """Evaluate Δ_i <= c tau^{i-1} |E|/|V| for i = 2..r."""
    if H.r < 2:
        raise InvalidParams("codegree condition needs r >= 2")
    e, nv = H.num_edges(), H.nv
    rows = []
    for i in range(2, H.r + 1):
        delta = H.max_codegree(i)
        target = c * tau ** (i - 1) * e / nv if nv else 0.0
        rows.append({"i": i, "delta": delta, "target": target, "margin": target - delta, "holds": delta <= target})
    return all(r["holds"] for r in rows), rows


@dataclass
class ContainerReport:
    a_pass: bool
    b_log2_count: float
    b_bound: float
    b_pass: bool
    c_pass: bool
    c_max_fraction: float
    checked_sets: int
    witness: list | None = None
    c_witness: list | None = None

    @property
    def ok(self) -> bool:
        """Properties (a) and (c); (b) is informational."""
        return self.a_pass and self.c_pass


def verify_containers(H: Hypergraph, fam: ContainerFamily, mode="exhaustive", samples: int = 1000, rng=None) -> ContainerReport:
    """Check coverage of independent sets, edge shrinkage of containers, and the family size."""
    conts = list(fam.containers)
    if mode == "exhaustive":
        if H.nv > 24:
            raise TooLarge("exhaustive container verification is limited to 24 vertices")
        sets = enumerate_independent_sets(H)
    elif mode == "sampled":
        if rng is None:
            rng = np.random.default_rng(0)
        sets = (random_maximal_independent_set(H, rng) for _ in range(samples))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    a_pass, witness, checked = True, None, 0
    if H.nv <= 62:
        arr = np.array(conts, dtype=np.int64) if conts else np.zeros(0, dtype=np.int64)
        inv = ~arr
        for I in sets:
            checked += 1
            if not np.any((inv & I) == 0):
                a_pass, witness = False, bits_of(I)
                break
    else:
        for I in sets:
            checked += 1
            if not any(I & ~C == 0 for C in conts):
                a_pass, witness = False, bits_of(I)
                break

    e0 = H.num_edges()
    limit = (1 - fam.params.c) * e0
    c_pass, c_witness, worst = True, None, 0.0
    for C in conts:
        inside = _edges_within(H, C)
        if e0:
            worst = max(worst, inside / e0)
        if inside > limit:
            if c_pass:
                c_witness = bits_of(C)
            c_pass = False
    log_count = math.log2(len(conts)) if conts else 0.0
    bound = family_size_log2_bound(H.nv, fam.params)
    return ContainerReport(a_pass, log_count, bound, log_count <= bound, c_pass, worst, checked, witness, c_witness)
