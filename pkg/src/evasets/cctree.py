"""Container-clique trees, their checker, and the two tree-building processes.

A container-clique tree for a hypergraph H labels every node x with a sequence
C_0, C_1, ..., C_l of vertex sets.  The labels C_i with i >= 1 must be cliques
of H, and every independent set of H must lie inside the union of the labels
of some leaf.

Two processes build such trees over the affine space F_q^n:

* the collinear process (planar, r = 3) splits a node while |C_0| >= (1+eps)q;
* the (k, r) process splits a node while |C_0| >= 2 theta q^{n-k}, using a
  randomly thinned supersaturated hypergraph for its container step.

In both, a node first strips "rich" flats (those meeting C in at least
|C_0|/sqrt(q) points) and then either has a single child (if enough was
stripped) or one child per container of the remaining set.

Trees can be built in full, or lazily: container children are then created
only when an independent set is pushed down the tree with ``descend``.  The
lazy tree is a subtree of the full one, so every leaf it reaches is a leaf of
the full tree.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .container import ContainerParams, Scythe
from .errors import InvalidParams, NonTermination, RichFlatPresent, TooLarge, TooSmall
from .fieldcore import FieldCtx
from .geom import PointSet, affine_rank, annihilator, coords_to_index, flats_meeting, rref, span_of
from .hyper import Hypergraph, bits_of, enumerate_independent_sets, krset_hypergraph, mask_of, random_maximal_independent_set

TAU_CEILING = 0.499


def mask_to_bool(mask: int, nv: int) -> np.ndarray:
    raw = np.frombuffer(mask.to_bytes((nv + 7) // 8 or 1, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:nv].astype(bool)


def bool_to_mask(arr: np.ndarray) -> int:
    return int.from_bytes(np.packbits(np.asarray(arr, dtype=bool), bitorder="little").tobytes(), "little")


# -- tree ----------------------------------------------------------------------

@dataclass
class CCNode:
    id: int
    parent: int
    depth: int
    labels: list
    provenance: list
    case: str = "pending"
    children: list = field(default_factory=list)
    log: dict = field(default_factory=dict)
    child_keys: dict = field(default_factory=dict)
    work: dict = field(default_factory=dict)
    path: tuple = ()

    @property
    def length(self) -> int:
        """Number of clique labels, i.e. l in C_0, C_1, ..., C_l."""
        return len(self.labels) - 1

    def union(self) -> int:
        u = 0
        for L in self.labels:
            u |= L
        return u


class CCTree:
    """Rooted tree of label sequences over vertices 0..nv-1 (labels are bitmasks)."""

    def __init__(self, nv: int, r: int, process=None, lazy: bool = False):
        self.nv = nv
        self.r = r
        self.process = process
        self.lazy = lazy
        self.nodes: list[CCNode] = []
        self.operations = 0

    @classmethod
    def single(cls, nv: int, r: int, labels=None) -> "CCTree":
        T = cls(nv, r)
        labels = [(1 << nv) - 1] if labels is None else list(labels)
        T.add_node(-1, labels, ["root"] + ["given"] * (len(labels) - 1))
        T.nodes[0].case = "leaf"
        return T

    def add_node(self, parent: int, labels, provenance, step=None) -> int:
        """Append a node; ``step`` names the edge from the parent (a fingerprint, or "d" for deletion)."""
        depth = 0 if parent < 0 else self.nodes[parent].depth + 1
        path = () if parent < 0 else self.nodes[parent].path + (step,)
        node = CCNode(len(self.nodes), parent, depth, list(labels), list(provenance), path=path)
        self.nodes.append(node)
        if parent >= 0:
            self.nodes[parent].children.append(node.id)
        return node.id

    @property
    def root(self) -> CCNode:
        return self.nodes[0]

    def leaves(self) -> list[CCNode]:
        return [x for x in self.nodes if x.case == "leaf"]

    @property
    def partial(self) -> bool:
        """True when some container node has children that were never materialized."""
        return self.lazy and any(
            x.case == "pending" or (x.case == "container" and not x.work.get("complete")) for x in self.nodes
        )

    def descend(self, independent: int) -> CCNode:
        """Push an independent set (bitmask) down to the leaf whose labels contain it."""
        if self.process is None:
            raise InvalidParams("descend needs the tree's building process")
        x = self.root
        while True:
            if x.case == "pending":
                self.process.operate(self, x)
            if x.case == "leaf":
                return x
            if x.case == "deletion":
                x = self.nodes[x.children[0]]
                continue
            key, cont = self.process.trace(self, x, independent)
            cid = x.child_keys.get(key)
            if cid is None:
                cid = self.process.make_container_child(self, x, cont, key)
                x.child_keys[key] = cid
            x = self.nodes[cid]

    # -- serialization -----------------------------------------------------

    def to_text(self, stats: "TreeStats | None" = None) -> str:
        lines = []
        for x in self.nodes:
            sets = " | ".join("{" + ",".join(map(str, bits_of(L))) + "}" for L in x.labels)
            lines.append(f"{x.id} {x.parent} {x.case} {sets}")
        if stats is not None:
            lines.append(json.dumps(stats.as_dict(), sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, nv: int, r: int) -> "CCTree":
        T = cls(nv, r)
        for ln in text.splitlines():
            if not ln.strip() or ln.lstrip().startswith("{\""):
                continue
            head, _, rest = ln.partition(" {")
            nid, parent, case = head.split()
            labels = []
            for part in ("{" + rest).split(" | "):
                body = part.strip().strip("{}")
                labels.append(mask_of(int(t) for t in body.split(",")) if body else 0)
            got = T.add_node(int(parent), labels, ["parsed"] * len(labels))
            if got != int(nid):
                raise ValueError("node ids must be consecutive from 0")
            T.nodes[got].case = case
        return T


# -- statistics ----------------------------------------------------------------

@dataclass
class TreeStats:
    nu: int
    chi: int
    kappa: int
    lam: int
    height: int
    aleph_log2: float
    nodes: int
    partial: bool = False

    def as_dict(self) -> dict:
        return {
            "nu": self.nu, "chi": self.chi, "kappa": self.kappa, "lambda": self.lam,
            "height": self.height, "aleph_log2": self.aleph_log2, "nodes": self.nodes,
            "partial": self.partial,
        }


def aleph_log2(nu: int, chi: int, kappa: int, lam: int, r: int) -> float:
    """log2 of nu * C(kappa, r)^lam * 2^(chi + r lam); C(kappa, r) is floored at 1."""
    return math.log2(nu) + lam * math.log2(max(1, math.comb(kappa, r))) + chi + r * lam


def tree_stats(T: CCTree, r: int | None = None) -> TreeStats:
    r = T.r if r is None else r
    leaves = T.leaves()
    nu = len(leaves)
    chi = max((x.labels[0].bit_count() for x in leaves), default=0)
    kappa = max((L.bit_count() for x in T.nodes for L in x.labels[1:]), default=0)
    lam = max((x.length for x in T.nodes), default=0)
    height = max((x.depth for x in T.nodes), default=0)
    value = aleph_log2(nu, chi, kappa, lam, r) if nu else float("nan")
    return TreeStats(nu, chi, kappa, lam, height, value, len(T.nodes), T.partial)


# -- verification ----------------------------------------------------------------

@dataclass
class CCTreeReport:
    structure_ok: bool
    cliques_ok: bool
    coverage_ok: bool
    checked_sets: int
    problems: list = field(default_factory=list)
    bad_label: tuple | None = None
    uncovered: list | None = None

    @property
    def ok(self) -> bool:
        return self.structure_ok and self.cliques_ok and self.coverage_ok


def _check_structure(T: CCTree) -> list[str]:
    problems = []
    full = (1 << T.nv) - 1
    roots = [x for x in T.nodes if x.parent < 0]
    if len(roots) != 1 or (T.nodes and T.nodes[0].parent >= 0):
        problems.append("tree must have exactly one root, stored first")
    for x in T.nodes:
        for L in x.labels:
            if L & ~full:
                problems.append(f"node {x.id} has a label outside the vertex set")
        if x.parent >= 0:
            p = T.nodes[x.parent]
            if x.id not in p.children:
                problems.append(f"node {x.id} missing from its parent's children")
            if x.depth != p.depth + 1:
                problems.append(f"node {x.id} has inconsistent depth")
            if x.labels[1: len(p.labels)] != p.labels[1:]:
                problems.append(f"node {x.id} does not inherit its parent's cliques")
        if x.case == "leaf" and x.children:
            problems.append(f"leaf {x.id} has children")
        if x.case == "deletion" and len(x.children) != 1:
            problems.append(f"deletion node {x.id} must have exactly one child")
    return problems


def verify_cctree(T: CCTree, H: Hypergraph, mode: str = "exhaustive", samples: int = 10**4, rng=None) -> CCTreeReport:
    """Check the structure, the clique labels and the covering of independent sets.

    In sampled mode random maximal independent sets are drawn; a lazily built
    tree first routes each of them to its leaf, materializing the path.
    """
    if H.nv != T.nv:
        raise InvalidParams("tree and hypergraph have different vertex sets")
    if mode == "exhaustive":
        if H.nv > 24:
            raise TooLarge("exhaustive tree verification is limited to 24 vertices")
        sets = enumerate_independent_sets(H)
    elif mode == "sampled":
        rng = np.random.default_rng(0) if rng is None else rng
        sets = (random_maximal_independent_set(H, rng) for _ in range(samples))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    coverage_ok, uncovered, checked = True, None, 0
    routed = T.lazy and T.process is not None
    leaf_unions = None
    for I in sets:
        checked += 1
        if routed:
            leaf = T.descend(I)
            if I & ~leaf.union() == 0:
                continue
        if leaf_unions is None or routed:
            leaf_unions = [x.union() for x in T.leaves()]
        if not any(I & ~U == 0 for U in leaf_unions):
            coverage_ok, uncovered = False, bits_of(I)
            break

    problems = _check_structure(T)
    cliques_ok, bad = True, None
    seen: set = set()
    for x in T.nodes:
        for i, L in enumerate(x.labels[1:], start=1):
            if L in seen:
                continue
            seen.add(L)
            if not H.is_clique(L):
                cliques_ok, bad = False, (x.id, i, bits_of(L))
                break
        if not cliques_ok:
            break
    return CCTreeReport(not problems, cliques_ok, coverage_ok, checked, problems, bad, uncovered)


# -- shared process machinery ----------------------------------------------------

class _FlatProcess:
    """Rich-flat stripping and container splitting over a fixed family of flats."""

    r: int
    nv: int
    q: int

    def _setup_flats(self, P: PointSet, k: int):
        found = flats_meeting(P, k, min_count=1)
        self.flat_objects = [f for f, _ in found]
        self.flat_members = np.array([m for _, m in found], dtype=np.int64)

    def strip_rich(self, C0: np.ndarray, lower_of):
        """Delete rich flats until the stop rule; returns (C, cliques, case)."""
        m0 = int(C0.sum())
        lower = lower_of(m0)
        C = C0.copy()
        cliques = []
        while True:
            counts = C[self.flat_members].sum(axis=1)
            j = int(np.argmax(counts))
            cnt = int(counts[j])
            if cnt == 0 or not self.is_rich(cnt, m0):
                return C, cliques, "container"
            K = np.zeros_like(C)
            members = self.flat_members[j]
            K[members] = C[members]
            C[members] = False
            cliques.append(K)
            if C.sum() < lower:
                return C, cliques, "deletion"

    rich_exponent: float = 0.5

    def is_rich(self, cnt: int, m0: int) -> bool:
        if self.rich_exponent == 0.5:
            return cnt * cnt * self.q >= m0 * m0
        # experimental: other exponents use a floating threshold
        return cnt >= m0 / self.q ** self.rich_exponent

    def is_leaf(self, m0: int) -> bool:
        raise NotImplementedError

    def operate(self, T: CCTree, x: CCNode):
        T.operations += 1
        C0 = mask_to_bool(x.labels[0], self.nv)
        m0 = int(C0.sum())
        x.log = {"c0": m0}
        if self.is_leaf(m0):
            x.case = "leaf"
            return
        C, cliques, case = self.strip_rich(C0, self.lower_rule)
        x.log.update({"deleted": len(cliques), "remaining": int(C.sum())})
        x.work["cliques"] = [bool_to_mask(K) for K in cliques]
        x.work["C"] = C
        if case == "deletion":
            x.case = "deletion"
            labels = [bool_to_mask(C)] + x.labels[1:] + x.work["cliques"]
            prov = ["deletion"] + ["inherited"] * x.length + ["deleted"] * len(cliques)
            T.add_node(x.id, labels, prov, "d")
            x.work["complete"] = True
            return
        x.case = "container"
        self.prepare_containers(T, x, C)

    def make_container_child(self, T: CCTree, x: CCNode, cont_mask: int, key) -> int:
        cl = x.work["cliques"]
        labels = [cont_mask] + x.labels[1:] + cl
        prov = ["container"] + ["inherited"] * x.length + ["deleted"] * len(cl)
        cid = T.add_node(x.id, labels, prov, key)
        child = T.nodes[cid]
        if cont_mask == x.labels[0] and not cl:
            raise NonTermination(
                f"node {x.id}: container equals its parent's set",
                {"node": x.id, "size": cont_mask.bit_count(), "log": x.log},
            )
        return child.id

    def expand_all(self, T: CCTree, x: CCNode):
        fam = self.family(T, x)
        for key, cont in fam:
            cid = self.make_container_child(T, x, cont, key)
            x.child_keys[key] = cid
        x.log["containers"] = len(fam)
        x.work["complete"] = True


def _run_full(T: CCTree, process, max_nodes: int, max_ops: int):
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        x = T.nodes[nid]
        if T.operations >= max_ops:
            raise NonTermination("operation cap reached", {"operations": T.operations, "nodes": len(T.nodes)})
        process.operate(T, x)
        if x.case == "container":
            process.expand_all(T, x)
        if len(T.nodes) > max_nodes:
            raise NonTermination("node cap reached", {"operations": T.operations, "nodes": len(T.nodes)})
        queue.extend(x.children)


# -- collinear process ----------------------------------------------------------

class CollinearProcess(_FlatProcess):
    """Node operation for the collinear-triple hypergraph of F_q^2."""

    def __init__(self, ctx: FieldCtx, eps: float, c_prime: float, c: float, fingerprint_cap: int | None = None,
                 rich_exponent: float = 0.5):
        if eps <= 0:
            raise InvalidParams("eps must be positive")
        if not 0 < rich_exponent <= 1:
            raise InvalidParams("rich_exponent must lie in (0, 1]")
        self.rich_exponent = rich_exponent
        self.ctx = ctx
        self.q = ctx.q
        self.r = 3
        self.eps = eps
        self.c_prime = c_prime
        self.c = c
        self.fingerprint_cap = fingerprint_cap
        self.points = PointSet.full(ctx, 2)
        self.nv = len(self.points)
        self._setup_flats(self.points, 1)
        self.H = Hypergraph(3, self.nv, [tuple(m) for m in self.flat_members.tolist()], labels=self.points.points, _trusted=True)
        self.scythe = Scythe(self.H)
        self.clamped = 0

    def is_leaf(self, m0: int) -> bool:
        return m0 < (1 + self.eps) * self.q

    def lower_rule(self, m0: int) -> float:
        return max(m0 / 2, (1 + self.eps) * self.q)

    def container_params(self, size: int) -> ContainerParams:
        tau = self.c_prime * math.sqrt(self.q) / size
        if tau > TAU_CEILING:
            self.clamped += 1
            tau = TAU_CEILING
        return ContainerParams(tau, self.c, self.fingerprint_cap)

    def prepare_containers(self, T, x, C):
        params = self.container_params(int(C.sum()))
        x.work["params"] = params
        x.log.update({"tau": params.tau, "edges": self.scythe.edges_in(self._counts(C))})

    def _counts(self, C):
        return C[self.flat_members].sum(axis=1)

    def edges_of(self, mask: int) -> int:
        return self.scythe.edges_in(self._counts(mask_to_bool(mask, self.nv)))

    def family(self, T, x):
        pairs = self.scythe.enumerate(x.work["params"], support=x.work["C"])
        return [(F, bool_to_mask(np.isin(np.arange(self.nv), Cont))) for F, Cont in pairs]

    def trace(self, T, x, independent: int):
        member = bits_of(independent)
        F, Cont, _ = self.scythe.trace(member, x.work["params"], support=x.work["C"])
        cont = np.zeros(self.nv, dtype=bool)
        cont[Cont] = True
        return tuple(F.tolist()), bool_to_mask(cont)


def build_collinear_cctree(
    ctx: FieldCtx,
    eps: float = 0.5,
    c_prime: float = 2.0,
    c: float = 0.01,
    lazy: bool = True,
    fingerprint_cap: int | None = None,
    max_nodes: int = 10**6,
    max_ops: int = 10**6,
    rich_exponent: float = 0.5,
    allow_small: bool = False,
):
    """Container-clique tree for collinear triples of F_q^2.

    With ``lazy`` (the default) only the root is processed and container
    children appear as independent sets are routed through ``T.descend``.
    ``rich_exponent`` sets the rich threshold |C0| / q^e (experimental away
    from 1/2).  Fields below order 9 are refused unless ``allow_small``.
    Returns (tree, stats, log).
    """
    if ctx.q < 9 and not allow_small:
        raise InvalidParams("the collinear process needs q >= 9 (pass allow_small to override)")
    proc = CollinearProcess(ctx, eps, c_prime, c, fingerprint_cap, rich_exponent)
    T = CCTree(proc.nv, 3, proc, lazy)
    T.add_node(-1, [(1 << proc.nv) - 1], ["root"])
    if lazy:
        proc.operate(T, T.root)
    else:
        _run_full(T, proc, max_nodes, max_ops)
    return T, tree_stats(T), [x.log for x in T.nodes]


# -- supersaturated (k, r)-set hypergraphs ----------------------------------------

@dataclass(frozen=True)
class SupersatParams:
    k: int
    r: int
    theta: float
    c: float = 0.01
    sparse_fraction: float | None = None

    def __post_init__(self):
        if not 1 <= self.k < self.r:
            raise InvalidParams("need r > k >= 1")
        if self.theta < 1:
            raise InvalidParams("theta must be >= 1")

    @property
    def epsilon(self) -> float:
        return 1 / (2 * self.r)

    @property
    def fraction(self) -> float:
        return self.sparse_fraction if self.sparse_fraction is not None else 1 / (2 * self.r**self.k)


@dataclass
class DeltaCertificate:
    m: int
    edges: int
    tau: float
    rows: list
    delta1: int
    delta1_target: float
    theta_needed: float
    sparse_branch: bool
    general_k_sets: int
    clamped: int

    @property
    def holds(self) -> bool:
        return all(r["holds"] for r in self.rows) and self.delta1 <= self.delta1_target

    def as_dict(self) -> dict:
        return {
            "m": self.m, "edges": self.edges, "tau": self.tau, "rows": self.rows,
            "delta1": self.delta1, "delta1_target": self.delta1_target,
            "theta_needed": self.theta_needed, "sparse_branch": self.sparse_branch,
            "general_k_sets": self.general_k_sets, "clamped_probabilities": self.clamped,
        }


def _general_k_sets(ctx: FieldCtx, coords: np.ndarray, k: int):
    """k-subsets (as position tuples) whose span has dimension k - 1, in lexicographic order."""
    m = len(coords)
    if k == 1:
        return [(i,) for i in range(m)]
    pts = [tuple(p) for p in coords.tolist()]
    return [K for K in itertools.combinations(range(m), k) if affine_rank(ctx, [pts[i] for i in K]) == k - 1]


def _group_by_extension(ctx: FieldCtx, coords: np.ndarray, K: tuple, n: int, k: int):
    """Group the points outside span(K) by the k-flat span(K ∪ {x}); returns {flat key: positions}."""
    base = coords[K[0]]
    G_rows = [ctx.vsub(coords[i], base).tolist() for i in K[1:]]
    G_basis, G_piv = rref(ctx, G_rows) if G_rows else ([], [])
    A = annihilator(ctx, G_basis, G_piv, n)
    diff = ctx.vsub(coords, base[None, :])
    # reduce the difference vectors modulo span(K) - base, then read off a projective class
    red = ctx.vdot(diff[:, None, :], A[None, :, :]) if len(A) else np.zeros((len(coords), 0), dtype=np.int64)
    outside = np.flatnonzero(np.any(red != 0, axis=1))
    if len(outside) == 0:
        return {}
    R = red[outside]
    lead = np.argmax(R != 0, axis=1)
    lead_val = R[np.arange(len(R)), lead]
    norm = ctx.vmul(R, ctx.vinv(lead_val)[:, None])
    code = coords_to_index(norm, ctx.q)
    groups: dict = {}
    for key, pos in zip(code.tolist(), outside.tolist()):
        groups.setdefault(key, []).append(pos)
    # order flats canonically: by the canonical form of span(K ∪ {first point})
    pts = [tuple(p) for p in coords.tolist()]
    keyed = []
    for key, members in groups.items():
        flat = span_of(ctx, [pts[i] for i in K] + [pts[members[0]]])
        keyed.append((flat.order_key, members))
    keyed.sort(key=lambda t: t[0])
    return keyed


def supersat_hypergraph(P: PointSet, params: SupersatParams, rng, check_rich: bool = True):
    """Randomly thinned hypergraph of (k, r)-sets of P with a codegree certificate.

    For each affinely independent k-subset K and each k-flat F through span(K)
    holding m_KF >= m / (3 q^{n-k}) points of P outside span(K), every
    (r-k)-subset S of those points contributes the edge K ∪ S with probability
    min(1, (m / (q^{n-k} m_KF))^{r-k-1}).  Candidates are visited in
    lexicographic order of K, canonical order of F and lexicographic order of
    S, one uniform draw each.  If the affinely independent k-subsets are
    fewer than ``fraction * m^k``, all (k, r)-sets of P are taken instead.

    Returns (H, certificate); H has the points of P as vertices.
    """
    ctx, n, q = P.ctx, P.n, P.q
    k, r, theta = params.k, params.r, params.theta
    if not k < n:
        raise InvalidParams("need k < n")
    m = len(P)
    scale = q ** (n - k)
    if m < theta * scale:
        raise TooSmall(f"|P| = {m} is below theta q^(n-k) = {theta * scale}")
    if check_rich:
        heavy = flats_meeting(P, k, min_count=int(math.floor(2 * m / math.sqrt(q))) + 1)
        heavy = [(f, mem) for f, mem in heavy if len(mem) > 2 * m / math.sqrt(q)]
        if heavy:
            f, mem = heavy[0]
            raise RichFlatPresent(f"a {k}-flat meets P in {len(mem)} > 2m/sqrt(q) points", witness=f, count=len(mem))
    coords = P.coords()
    G = _general_k_sets(ctx, coords, k)
    sparse = len(G) < params.fraction * m**k
    clamped = 0
    if sparse:
        H = krset_hypergraph(P, k, r)
    else:
        edges = set()
        threshold = m / (3 * scale)
        for K in G:
            for _, members in _group_by_extension(ctx, coords, K, n, k):
                mkf = len(members)
                if mkf < threshold or mkf < r - k:
                    continue
                prob = (m / (scale * mkf)) ** (r - k - 1)
                if prob > 1:
                    clamped += 1
                    prob = 1.0
                subsets = list(itertools.combinations(members, r - k))
                draws = rng.random(len(subsets))
                for S, u in zip(subsets, draws.tolist()):
                    if u < prob:
                        edges.add(tuple(sorted(K + S)))
        H = Hypergraph(r, m, sorted(edges), labels=P.points, _trusted=True)
    cert = delta_certificate(H, params, q, n, sparse, len(G), clamped)
    return H, cert


def supersat_tau(theta: float, q: int, n: int, k: int, m: int, r: int) -> float:
    return theta * q ** (n - k) / (m * q ** (1 / (2 * r)))


def delta_certificate(H: Hypergraph, params: SupersatParams, q: int, n: int, sparse=False, general=0, clamped=0) -> DeltaCertificate:
    m, E = H.nv, H.num_edges()
    tau = supersat_tau(params.theta, q, n, params.k, m, params.r)
    rows = []
    for i in range(2, H.r + 1):
        delta = H.max_codegree(i)
        target = params.c * tau ** (i - 1) * E / m if m else 0.0
        rows.append({"i": i, "delta": delta, "target": target, "margin": target - delta, "holds": delta <= target})
    d1 = H.max_codegree(1)
    d1_target = params.theta * E / m if m else 0.0
    theta_needed = d1 * m / E if E else float("inf")
    return DeltaCertificate(m, E, tau, rows, d1, d1_target, theta_needed, sparse, general, clamped)


# -- (k, r) process ----------------------------------------------------------------

class KrsetProcess(_FlatProcess):
    """Node operation for the hypergraph of all (k, r)-sets of F_q^n."""

    def __init__(self, ctx: FieldCtx, n: int, k: int, r: int, theta: float, c: float, seed: int,
                 fingerprint_cap: int | None = None, sparse_fraction: float | None = None, retries: int = 3):
        if not 1 <= k < r or k >= n:
            raise InvalidParams("need 1 <= k < n and r > k")
        self.ctx, self.n, self.k, self.r = ctx, n, k, r
        self.q = ctx.q
        self.theta, self.c, self.seed = theta, c, seed
        self.fingerprint_cap = fingerprint_cap
        self.sparse_fraction = sparse_fraction
        self.retries = retries
        self.points = PointSet.full(ctx, n)
        self.nv = len(self.points)
        self._setup_flats(self.points, k)
        self.H = krset_hypergraph(self.points, k, r)
        self.retried = 0
        self.clamped = 0

    @property
    def leaf_threshold(self) -> float:
        return 2 * self.theta * self.q ** (self.n - self.k)

    def is_leaf(self, m0: int) -> bool:
        return m0 < self.leaf_threshold

    def lower_rule(self, m0: int) -> float:
        return m0 / 2

    def node_rng(self, x: CCNode, attempt: int = 0):
        digest = hashlib.sha256(x.labels[0].to_bytes((self.nv + 7) // 8, "little")).digest()
        words = [int.from_bytes(digest[i: i + 4], "little") for i in range(0, 16, 4)]
        return np.random.default_rng(np.random.SeedSequence([self.seed, x.depth, attempt] + words))

    def prepare_containers(self, T, x, C):
        support = np.flatnonzero(C)
        P = self.points.subset(support.tolist())
        sp = SupersatParams(self.k, self.r, self.theta, self.c, self.sparse_fraction)
        last = None
        for attempt in range(self.retries):
            try:
                Hs, cert = supersat_hypergraph(P, sp, self.node_rng(x, attempt))
                break
            except (TooSmall, RichFlatPresent) as err:
                self.retried += 1
                last = err
        else:
            raise NonTermination(f"supersaturation failed at node {x.id}: {last}", {"node": x.id})
        tau = supersat_tau(self.theta, self.q, self.n, self.k, len(P), self.r)
        if tau > TAU_CEILING:
            self.clamped += 1
            tau = TAU_CEILING
        x.work.update({"support": support, "scythe": Scythe(Hs), "params": ContainerParams(tau, self.c, self.fingerprint_cap)})
        x.log.update({"tau": tau, "edges": Hs.num_edges(), "certificate": cert.as_dict()})

    def _globalize(self, support, local) -> int:
        cont = np.zeros(self.nv, dtype=bool)
        cont[support[np.asarray(local, dtype=np.int64)]] = True
        return bool_to_mask(cont)

    def family(self, T, x):
        support = x.work["support"]
        pairs = x.work["scythe"].enumerate(x.work["params"])
        return [(tuple(support[list(F)].tolist()), self._globalize(support, Cont)) for F, Cont in pairs]

    def trace(self, T, x, independent: int):
        support = x.work["support"]
        local = np.flatnonzero(mask_to_bool(independent, self.nv)[support])
        F, Cont, _ = x.work["scythe"].trace(local, x.work["params"])
        return tuple(support[F].tolist()), self._globalize(support, Cont)


def build_krset_cctree(
    ctx: FieldCtx,
    n: int,
    k: int,
    r: int,
    theta: float,
    c: float,
    seed: int = 0,
    lazy: bool = False,
    fingerprint_cap: int | None = None,
    sparse_fraction: float | None = None,
    max_nodes: int = 10**6,
    max_ops: int = 10**5,
):
    """Container-clique tree for the (k, r)-sets of F_q^n.  Returns (tree, stats, log)."""
    proc = KrsetProcess(ctx, n, k, r, theta, c, seed, fingerprint_cap, sparse_fraction)
    T = CCTree(proc.nv, r, proc, lazy)
    T.add_node(-1, [(1 << proc.nv) - 1], ["root"])
    if lazy:
        proc.operate(T, T.root)
    else:
        _run_full(T, proc, max_nodes, max_ops)
    return T, tree_stats(T), [x.log for x in T.nodes]


def progress_violations(T: CCTree, edges_of, leaf_size: float) -> list[int]:
    """Nodes whose child neither halves C_0, drops below ``leaf_size``, nor loses edges."""
    bad = []
    for x in T.nodes:
        if x.parent < 0:
            continue
        p = T.nodes[x.parent]
        a, b = p.labels[0].bit_count(), x.labels[0].bit_count()
        if 2 * b <= a or b < leaf_size:
            continue
        if edges_of(x.labels[0]) < edges_of(p.labels[0]):
            continue
        bad.append(x.id)
    return bad
