"""Affine geometry over F_q: point sets, flats in canonical form, incidences.

A point of F_q^n is a tuple of field encodings.  Its integer index reads the
coordinates as base-q digits with the first coordinate most significant, so
sorting by index and sorting tuples lexicographically agree.

A k-flat is stored canonically as a reduced row-echelon basis of its direction
space plus the base point that is zero at every pivot column; that base point
is also the lexicographically smallest point of the flat.  Two flats are equal
as point sets exactly when their canonical forms agree.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .errors import DegenerateTriple, DimensionMismatch, EmptyInput, TooLarge
from .fieldcore import ENUMERATION_CAP, FieldCtx, field_new, index_to_coords

Point = tuple


# -- linear algebra over F_q ------------------------------------------------

def rref(ctx: FieldCtx, rows) -> tuple[list[list[int]], list[int]]:
    """Reduced row-echelon form of the given vectors; returns (nonzero rows, pivot columns)."""
    rows = [list(map(int, r)) for r in rows]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = ctx.inv(rows[r][c])
        rows[r] = [ctx.mul(inv, x) for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [ctx.sub(x, ctx.mul(f, y)) for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rank(ctx: FieldCtx, rows) -> int:
    return len(rref(ctx, rows)[1])


def annihilator(ctx: FieldCtx, basis, pivots, n: int) -> np.ndarray:
    """Rows spanning the orthogonal complement of an RREF basis, one per free column."""
    free = [j for j in range(n) if j not in pivots]
    A = np.zeros((len(free), n), dtype=np.int64)
    for a, f in enumerate(free):
        A[a, f] = 1
        for i, p in enumerate(pivots):
            A[a, p] = ctx.neg(basis[i][f])
    return A


# -- point sets -------------------------------------------------------------

def coords_to_index(coords, q: int) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.int64)
    idx = np.zeros(coords.shape[:-1], dtype=np.int64)
    for j in range(coords.shape[-1]):
        idx = idx * q + coords[..., j]
    return idx


@dataclass(frozen=True)
class PointSet:
    """A deduplicated, sorted set of points of F_q^n."""

    ctx: FieldCtx
    n: int
    points: tuple = ()

    def __post_init__(self):
        pts = sorted(set(tuple(int(x) for x in p) for p in self.points))
        for p in pts:
            if len(p) != self.n:
                raise DimensionMismatch(f"point {p} does not have {self.n} coordinates")
            if any(not 0 <= x < self.ctx.q for x in p):
                raise ValueError(f"point {p} has a coordinate outside F_q")
        object.__setattr__(self, "points", tuple(pts))

    @classmethod
    def from_indices(cls, ctx: FieldCtx, n: int, idx) -> "PointSet":
        idx = np.unique(np.asarray(idx, dtype=np.int64))
        coords = index_to_coords(idx, ctx.q, n)
        obj = object.__new__(cls)
        object.__setattr__(obj, "ctx", ctx)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "points", tuple(map(tuple, coords.tolist())))
        return obj

    @classmethod
    def full(cls, ctx: FieldCtx, n: int) -> "PointSet":
        if ctx.q**n > ENUMERATION_CAP:
            raise TooLarge("ambient space too large to list")
        return cls.from_indices(ctx, n, np.arange(ctx.q**n))

    @property
    def q(self) -> int:
        return self.ctx.q

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, pt):
        return tuple(pt) in self._lookup

    @property
    def _lookup(self) -> dict:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = {p: i for i, p in enumerate(self.points)}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache

    def position(self, pt) -> int:
        """Position of a point in the sorted order."""
        return self._lookup[tuple(pt)]

    def coords(self) -> np.ndarray:
        return np.array(self.points, dtype=np.int64).reshape(len(self.points), self.n)

    def indices(self) -> np.ndarray:
        return coords_to_index(self.coords(), self.q)

    def subset(self, positions) -> "PointSet":
        return PointSet(self.ctx, self.n, tuple(self.points[i] for i in positions))

    def union(self, other: "PointSet") -> "PointSet":
        return PointSet(self.ctx, self.n, self.points + other.points)

    def intersection(self, other: "PointSet") -> "PointSet":
        return PointSet(self.ctx, self.n, tuple(p for p in self.points if p in other))

    def to_text(self) -> str:
        head = f"{self.ctx.p}^{self.ctx.e} {self.n} {len(self)}"
        return "\n".join([head] + [",".join(map(str, p)) for p in self.points]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PointSet":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        qs, ns, ms = lines[0].split()
        p, e = (int(t) for t in qs.split("^"))
        n, m = int(ns), int(ms)
        pts = [tuple(int(t) for t in ln.split(",")) for ln in lines[1: 1 + m]]
        if len(pts) != m:
            raise ValueError(f"header promises {m} points, found {len(pts)}")
        return cls(field_new(p, e), n, tuple(pts))


def random_subset(ctx: FieldCtx, n: int, rng, p: float | None = None, size: int | None = None) -> PointSet:
    """Each point kept independently with probability p, or a uniform subset of given size."""
    total = ctx.q**n
    if (p is None) == (size is None):
        raise ValueError("give exactly one of p or size")
    if p is not None:
        idx = np.flatnonzero(rng.random(total) < p)
    else:
        idx = np.sort(rng.choice(total, size=size, replace=False))
    return PointSet.from_indices(ctx, n, idx)


# -- flats ------------------------------------------------------------------

@dataclass(frozen=True)
class Flat:
    """A k-dimensional affine subspace in canonical form."""

    ctx: FieldCtx
    n: int
    base: tuple
    basis: tuple
    pivots: tuple = field(default=())

    @classmethod
    def make(cls, ctx: FieldCtx, base, directions=()) -> "Flat":
        base = [int(x) for x in base]
        n = len(base)
        rows, pivots = rref(ctx, [list(d) for d in directions]) if directions else ([], [])
        for row, pc in zip(rows, pivots):
            if base[pc]:
                f = base[pc]
                base = [ctx.sub(x, ctx.mul(f, y)) for x, y in zip(base, row)]
        return cls(ctx, n, tuple(base), tuple(tuple(r) for r in rows), tuple(pivots))

    @property
    def k(self) -> int:
        return len(self.basis)

    @property
    def order_key(self):
        """Sort key matching the order of ``enumerate_flats``."""
        return (self.pivots, tuple(x for row in self.basis for x in row), self.base)

    def annihilator(self) -> np.ndarray:
        return annihilator(self.ctx, self.basis, self.pivots, self.n)

    def key(self) -> tuple:
        """Free-column coordinates of the canonical base point."""
        return tuple(self.base[j] for j in range(self.n) if j not in self.pivots)

    def size(self) -> int:
        return self.ctx.q**self.k

    def points_array(self) -> np.ndarray:
        ctx, k = self.ctx, self.k
        params = index_to_coords(np.arange(ctx.q**k), ctx.q, k)
        out = np.broadcast_to(np.array(self.base, dtype=np.int64), (len(params), self.n)).copy()
        for i, row in enumerate(self.basis):
            out = ctx.vadd(out, ctx.vmul(params[:, i: i + 1], np.array(row, dtype=np.int64)[None, :]))
        return out

    def points(self) -> PointSet:
        return PointSet(self.ctx, self.n, tuple(map(tuple, self.points_array().tolist())))

    def contains(self, pt) -> bool:
        pt = np.asarray(pt, dtype=np.int64)
        A = self.annihilator()
        if len(A) == 0:
            return True
        return tuple(self.ctx.vdot(A, pt[None, :]).tolist()) == self.key()

    def contains_many(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64)
        A = self.annihilator()
        if len(A) == 0:
            return np.ones(len(coords), dtype=bool)
        vals = self.ctx.vdot(coords[:, None, :], A[None, :, :])
        return np.all(vals == np.array(self.key(), dtype=np.int64)[None, :], axis=1)

    def __repr__(self):
        return f"Flat(k={self.k}, base={self.base}, basis={self.basis})"


def gaussian_binomial(n: int, k: int, q: int) -> int:
    if not 0 <= k <= n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def count_flats(q: int, n: int, k: int) -> int:
    return q ** (n - k) * gaussian_binomial(n, k, q)


def linear_subspaces(ctx: FieldCtx, n: int, k: int):
    """Yield (pivots, rref_basis) for every k-dimensional subspace of F_q^n in canonical order."""
    q = ctx.q
    for pivots in itertools.combinations(range(n), k):
        slots = [(i, j) for i, p in enumerate(pivots) for j in range(p + 1, n) if j not in pivots]
        for values in itertools.product(range(q), repeat=len(slots)):
            basis = [[0] * n for _ in range(k)]
            for i, p in enumerate(pivots):
                basis[i][p] = 1
            for (i, j), v in zip(slots, values):
                basis[i][j] = v
            yield pivots, tuple(tuple(r) for r in basis)


def enumerate_flats(ctx: FieldCtx, n: int, k: int, cap: int = ENUMERATION_CAP):
    """Yield every k-flat of AG(n, q) exactly once, in canonical order."""
    if not 0 <= k <= n:
        raise DimensionMismatch("need 0 <= k <= n")
    if count_flats(ctx.q, n, k) > cap:
        raise TooLarge(f"{count_flats(ctx.q, n, k)} flats exceed the cap {cap}")
    q = ctx.q
    for pivots, basis in linear_subspaces(ctx, n, k):
        free = [j for j in range(n) if j not in pivots]
        for vals in itertools.product(range(q), repeat=len(free)):
            base = [0] * n
            for j, v in zip(free, vals):
                base[j] = v
            yield Flat(ctx, n, tuple(base), basis, tuple(pivots))


def _flat_from_key(ctx, n, pivots, basis, key) -> Flat:
    base = [0] * n
    for j, v in zip([j for j in range(n) if j not in pivots], key):
        base[j] = int(v)
    return Flat(ctx, n, tuple(base), basis, tuple(pivots))


def _bucket(ctx, coords, A):
    """Group point rows by their image under A; returns (keys, counts, inverse)."""
    if len(A) == 0:
        return np.zeros((1, 0), dtype=np.int64), np.array([len(coords)]), np.zeros(len(coords), dtype=np.int64)
    vals = ctx.vdot(coords[:, None, :], A[None, :, :])
    code = coords_to_index(vals, ctx.q)
    uniq, inverse, counts = np.unique(code, return_inverse=True, return_counts=True)
    keys = index_to_coords(uniq, ctx.q, len(A))
    return keys, counts, inverse


def flats_meeting(P: PointSet, k: int, min_count: int = 1, cap: int = ENUMERATION_CAP):
    """All k-flats F with |P ∩ F| >= min_count, as (flat, positions in P), in canonical order."""
    ctx, n = P.ctx, P.n
    if count_flats(ctx.q, n, k) // max(1, ctx.q ** (n - k)) > cap:
        raise TooLarge("too many direction spaces to scan")
    if len(P) == 0 or min_count > len(P):
        return []
    coords = P.coords()
    out = []
    for pivots, basis in linear_subspaces(ctx, n, k):
        A = annihilator(ctx, basis, pivots, n)
        keys, counts, inverse = _bucket(ctx, coords, A)
        order = np.argsort(inverse, kind="stable")
        splits = np.cumsum(counts)[:-1]
        groups = np.split(order, splits)
        for key, cnt, members in zip(keys, counts, groups):
            if cnt >= min_count:
                out.append((_flat_from_key(ctx, n, pivots, basis, key.tolist()), np.sort(members)))
    return out


@dataclass
class IncidenceProfile:
    max_count: int
    argmax: Flat | None
    histogram: dict


def incidence_profile(P: PointSet, k: int, cap: int = ENUMERATION_CAP) -> IncidenceProfile:
    """Largest intersection of P with a k-flat, the first flat attaining it, and the size histogram.

    The histogram maps an intersection size to the number of k-flats with that
    size, zero included.
    """
    ctx, n = P.ctx, P.n
    total_flats = count_flats(ctx.q, n, k)
    if total_flats > cap:
        raise TooLarge(f"{total_flats} flats exceed the cap {cap}")
    per_space = ctx.q ** (n - k)
    hist: dict = {}
    best, best_flat = -1, None
    coords = P.coords() if len(P) else np.zeros((0, n), dtype=np.int64)
    for pivots, basis in linear_subspaces(ctx, n, k):
        if len(P) == 0:
            hist[0] = hist.get(0, 0) + per_space
            if best < 0:
                best, best_flat = 0, _flat_from_key(ctx, n, pivots, basis, [0] * (n - k))
            continue
        A = annihilator(ctx, basis, pivots, n)
        keys, counts, _ = _bucket(ctx, coords, A)
        for c in counts.tolist():
            hist[c] = hist.get(c, 0) + 1
        empty = per_space - len(counts)
        if empty:
            hist[0] = hist.get(0, 0) + empty
        i = int(np.argmax(counts))
        if counts[i] > best:
            best = int(counts[i])
            best_flat = _flat_from_key(ctx, n, pivots, basis, keys[i].tolist())
    return IncidenceProfile(max(best, 0), best_flat, dict(sorted(hist.items())))


# -- basic operations -------------------------------------------------------

def span(points) -> Flat:
    """Smallest affine subspace containing the given points."""
    pts = list(points.points if isinstance(points, PointSet) else points)
    if not pts:
        raise EmptyInput("span of an empty set")
    ctx = points.ctx if isinstance(points, PointSet) else None
    if ctx is None:
        raise TypeError("span needs a PointSet (it carries the field)")
    a = pts[0]
    diffs = [[ctx.sub(x, y) for x, y in zip(p, a)] for p in pts[1:]]
    diffs = [d for d in diffs if any(d)]
    return Flat.make(ctx, a, diffs)


def span_of(ctx: FieldCtx, pts) -> Flat:
    pts = [tuple(p) for p in pts]
    if not pts:
        raise EmptyInput("span of an empty set")
    a = pts[0]
    diffs = [[ctx.sub(x, y) for x, y in zip(p, a)] for p in pts[1:]]
    diffs = [d for d in diffs if any(d)]
    return Flat.make(ctx, a, diffs)


def affine_rank(ctx: FieldCtx, pts) -> int:
    """Dimension of the span of the given points."""
    pts = [tuple(p) for p in pts]
    if len(pts) <= 1:
        return 0
    a = pts[0]
    return rank(ctx, [[ctx.sub(x, y) for x, y in zip(p, a)] for p in pts[1:]])


def collinear(ctx: FieldCtx, a, b, c) -> bool:
    a, b, c = tuple(a), tuple(b), tuple(c)
    if a == b or a == c or b == c:
        raise DegenerateTriple("collinearity is only defined for distinct points")
    return affine_rank(ctx, [a, b, c]) <= 1


def moment_curve(ctx: FieldCtx, n: int) -> PointSet:
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = []
    for x in range(ctx.q):
        row = [x]
        for _ in range(n - 1):
            row.append(ctx.mul(row[-1], x))
        pts.append(tuple(row))
    return PointSet(ctx, n, tuple(pts))


def count_collinear_triples(P: PointSet) -> int:
    """Collinear triples in a planar set, summed line by line."""
    if P.n != 2:
        raise DimensionMismatch("collinear-triple counting is planar")
    return sum(comb(len(members), 3) for _, members in flats_meeting(P, 1, min_count=3))


def count_collinear_triples_brute(P: PointSet) -> int:
    """Reference count over all unordered triples (cubic time)."""
    if P.n != 2:
        raise DimensionMismatch("collinear-triple counting is planar")
    m = len(P)
    if m < 3:
        return 0
    ctx = P.ctx
    X = P.coords()
    total = 0
    for i in range(m - 2):
        d = ctx.vsub(X[i + 1:], X[i][None, :])
        # det(d_j, d_l) for j < l, all relative to point i
        det = ctx.vsub(
            ctx.vmul(d[:, None, 0], d[None, :, 1]),
            ctx.vmul(d[:, None, 1], d[None, :, 0]),
        )
        total += int(np.count_nonzero(np.triu(det == 0, k=1)))
    return total


def supersat_lower_bound_exact(m: int, q: int) -> Fraction:
    if m < 0:
        raise ValueError("m must be nonnegative")
    x = Fraction(m - 1, q + 1)
    val = Fraction(1, 3) * m * (q + 1) * x * (x - 1) / 2
    return max(Fraction(0), val)


def supersat_lower_bound(m: int, q: int) -> float:
    """Guaranteed minimum number of collinear triples among m points of F_q^2."""
    return float(supersat_lower_bound_exact(m, q))
