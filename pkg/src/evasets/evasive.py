"""Evasive sets: formula calculators, exhaustive verification, and a random-algebraic constructor.

A set S in F_q^n is (d, k, r)-evasive when every k-dimensional variety of
degree at most d meets S in fewer than r points.  For d = 1 the varieties are
the k-flats.  For d >= 2 only plane curves (n = 2, k = 1) are checked.

The constructor samples k homogeneous polynomials in n + 1 variables and
takes the affine zero locus on the chart where it is largest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExhaustedAttempts, InvalidParams, TooLarge, Unsupported
from .fieldcore import ENUMERATION_CAP, FieldCtx, MultiPoly, field_of_order, index_to_coords, monomials, sample_poly, zero_locus_affine
from .geom import Flat, PointSet, count_flats, enumerate_flats

CURVE_CAP = 10**7


@dataclass(frozen=True)
class EvasiveParams:
    n: int
    k: int
    d: int
    r: int
    q: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise InvalidParams("need 1 <= k <= n")
        if self.d < 1 or self.r < 1:
            raise InvalidParams("need d >= 1 and r >= 1")
        if self.q < 2:
            raise InvalidParams("q must be a prime power >= 2")


@dataclass(frozen=True)
class DegreeSchedule:
    degrees: tuple
    chow_dimension: int
    r_value: int
    degree_product: int

    def as_dict(self) -> dict:
        return {
            "degrees": list(self.degrees), "chow_dimension": self.chow_dimension,
            "r_value": self.r_value, "degree_product": self.degree_product,
        }


@dataclass(frozen=True)
class EvasiveVerdict:
    evasive: bool
    r: int
    max_intersection: int
    witness: Flat | MultiPoly | None = None

    def to_record(self, schedule: DegreeSchedule | None = None, chart: int | None = None) -> dict:
        if isinstance(self.witness, Flat):
            kind, enc = "flat", {"base": list(self.witness.base), "basis": [list(b) for b in self.witness.basis]}
        elif isinstance(self.witness, MultiPoly):
            kind, enc = "curve", self.witness.to_text()
        else:
            kind, enc = None, None
        return {
            "evasive": self.evasive, "r": self.r, "max_intersection": self.max_intersection,
            "witness_kind": kind, "witness_encoding": enc,
            "schedule": None if schedule is None else schedule.as_dict(), "chart": chart,
        }


# -- calculators -----------------------------------------------------------------

def slice_bound(*args) -> int:
    """floor((r - 1) q^(n-k) / d); takes EvasiveParams or positional (d, k, n, r, q)."""
    if len(args) == 1 and isinstance(args[0], EvasiveParams):
        P = args[0]
        d, k, n, r, q = P.d, P.k, P.n, P.r, P.q
    elif len(args) == 5:
        d, k, n, r, q = (int(a) for a in args)
    else:
        raise TypeError("slice_bound takes EvasiveParams or (d, k, n, r, q)")
    return (r - 1) * q ** (n - k) // d


def _chow_formula(d: int, k: int, n: int) -> int:
    return max(d * (k + 1) * (n - k), math.comb(d + k + 1, k + 1) - 1 + (k + 2) * (n - k - 1))


def chow_dim(d: int, k: int, n: int) -> int:
    """Dimension of the Chow variety of degree-d, dimension-k cycles in P^n, by the closed formula."""
    if d < 1 or not 0 <= k < n:
        raise InvalidParams("need d >= 1 and 0 <= k < n")
    return _chow_formula(d, k, n)


def degree_schedule(n: int, k: int, d: int) -> DegreeSchedule:
    """Smallest degrees d_i with C(d_i + k + 1 - i, k + 1 - i) above the Chow dimension."""
    if not 1 <= k <= n or d < 1:
        raise InvalidParams("need 1 <= k <= n and d >= 1")
    dim = _chow_formula(d, k, n)
    degrees = []
    for i in range(1, k + 1):
        j = k + 1 - i
        di = 1
        while math.comb(di + j, j) <= dim:
            di += 1
        degrees.append(di)
    prod = math.prod(degrees)
    return DegreeSchedule(tuple(degrees), dim, d * prod, prod)


def twisted_degree_bound(n: int, k: int, d: int) -> int:
    return degree_schedule(n, k, d).degree_product


def bezout_threshold(schedule: DegreeSchedule) -> int:
    """Intersection size that no curve of the schedule can reach without sharing a component."""
    return schedule.r_value + 1


# -- verification -------------------------------------------------------------------

def _check_flats(S: PointSet, params: EvasiveParams, cap: int) -> EvasiveVerdict:
    ctx, n, k = S.ctx, S.n, params.k
    if count_flats(ctx.q, n, k) > cap:
        raise TooLarge(f"too many {k}-flats to check")
    coords = S.coords()
    best, witness = 0, None
    for F in enumerate_flats(ctx, n, k, cap):
        cnt = int(F.contains_many(coords).sum())
        if cnt > best:
            best, witness = cnt, F
    if best < params.r:
        return EvasiveVerdict(True, params.r, best)
    return EvasiveVerdict(False, params.r, best, witness)


def _monomial_matrix(ctx: FieldCtx, coords: np.ndarray, exps) -> np.ndarray:
    out = np.ones((len(coords), len(exps)), dtype=np.int64)
    for j, e in enumerate(exps):
        for var, a in enumerate(e):
            for _ in range(a):
                out[:, j] = ctx.vmul(out[:, j], coords[:, var])
    return out


def _check_curves(S: PointSet, params: EvasiveParams, cap: int) -> EvasiveVerdict:
    """Every nonzero plane curve of degree <= d, one per projective class of coefficient vectors."""
    ctx, q, d = S.ctx, S.q, params.d
    exps = monomials(2, d, False)
    N = len(exps)
    classes = (q**N - 1) // (q - 1)
    if classes > cap:
        raise TooLarge(f"{classes} curves exceed the cap {cap}")
    coords = S.coords()
    if len(coords) == 0:
        return EvasiveVerdict(True, params.r, 0)
    M = _monomial_matrix(ctx, coords, exps)
    best, witness = -1, None
    chunk = max(1, (1 << 21) // len(coords))
    for lead in range(N):
        free = N - 1 - lead
        total = q**free
        for start in range(0, total, chunk):
            idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
            tail = index_to_coords(idx, q, free) if free else np.zeros((len(idx), 0), dtype=np.int64)
            vals = np.broadcast_to(M[:, lead][None, :], (len(idx), len(coords))).copy()
            for t in range(free):
                vals = ctx.vadd(vals, ctx.vmul(tail[:, t: t + 1], M[None, :, lead + 1 + t]))
            counts = (vals == 0).sum(axis=1)
            i = int(np.argmax(counts))
            if counts[i] > best:
                best = int(counts[i])
                coeffs = [0] * lead + [1] + tail[i].tolist()
                witness = MultiPoly(ctx, 2, d, coeffs)
    if best < params.r:
        return EvasiveVerdict(True, params.r, best)
    return EvasiveVerdict(False, params.r, best, witness)


def is_evasive(S: PointSet, params: EvasiveParams, cap: int = CURVE_CAP) -> EvasiveVerdict:
    """Exhaustive check that every admissible variety meets S in fewer than r points."""
    if S.q != params.q or S.n != params.n:
        raise InvalidParams("point set and parameters disagree on q or n")
    if params.d == 1:
        return _check_flats(S, params, cap)
    if params.n != 2 or params.k != 1:
        raise Unsupported("curves of degree >= 2 are only checked in the plane")
    return _check_curves(S, params, cap)


def witness_intersection(S: PointSet, witness) -> int:
    """|S ∩ W| recomputed from scratch, for flats and for plane curves."""
    if isinstance(witness, Flat):
        return sum(1 for p in S if witness.contains(p))
    if isinstance(witness, MultiPoly):
        return sum(1 for p in S if witness(p) == 0)
    raise TypeError("unknown witness kind")


def check_slice_consistency(S: PointSet, params: EvasiveParams, verdict: EvasiveVerdict) -> bool:
    if not verdict.evasive:
        raise InvalidParams("the slice bound only applies to evasive sets")
    return len(S) <= slice_bound(params)


# -- construction ------------------------------------------------------------------

def _degenerate(fs, ctx: FieldCtx, n: int) -> bool:
    """True when some polynomial vanishes on a whole affine chart."""
    total = ctx.q**n
    return any(len(zero_locus_affine([f], ctx, n, chart)) == total for f in fs for chart in range(n + 1))


def construct_evasive(params: EvasiveParams, rng, attempts: int = 1, verify_r: int | None = None,
                      max_resamples: int = 100, cap: int = CURVE_CAP):
    """Sample zero loci of random homogeneous polynomials until one is verified evasive.

    The schedule fixes the degrees; ``verify_r`` (default: the schedule's r)
    is the intersection threshold used for verification.  Returns
    (candidate, schedule, verdict, chart, trials_used): the first verified
    candidate, or the last failed one with its witness.
    """
    n, k, d, q = params.n, params.k, params.d, params.q
    ctx = field_of_order(q)
    schedule = degree_schedule(n, k, d)
    r = schedule.r_value if verify_r is None else verify_r
    if q <= schedule.r_value or q <= r:
        raise InvalidParams(f"q = {q} must exceed the verification threshold {max(r, schedule.r_value)}")
    if d >= 2 and (n != 2 or k != 1):
        raise Unsupported("verification for d >= 2 needs n = 2, k = 1")
    if q**n > ENUMERATION_CAP:
        raise TooLarge("q^n exceeds the enumeration cap")
    vparams = EvasiveParams(n, k, d, r, q)
    last = None
    for trial in range(1, attempts + 1):
        for _ in range(max_resamples):
            fs = [sample_poly(ctx, n + 1, di, True, rng) for di in schedule.degrees]
            if not _degenerate(fs, ctx, n):
                break
        else:
            continue
        loci = [zero_locus_affine(fs, ctx, n, chart) for chart in range(n + 1)]
        chart = max(range(n + 1), key=lambda j: (len(loci[j]), -j))
        cand = loci[chart]
        verdict = is_evasive(cand, vparams, cap)
        last = (cand, schedule, verdict, chart, trial)
        if verdict.evasive:
            return last
    if last is None:
        raise ExhaustedAttempts("every sample was degenerate", best=None)
    return last
