"""Finite fields F_q (q = p^e) and dense multivariate polynomials over them.

Field elements are plain integers in ``[0, q)``.  Read in base ``p``, the
digits of an element are the coefficients (lowest degree first) of its residue
polynomial modulo the field's irreducible modulus.  Prime fields are just the
integers mod ``p``.

Every arithmetic method has a scalar form (``add``, ``mul``, ...) and a
vectorised form over integer numpy arrays (``vadd``, ``vmul``, ...).
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb, isqrt

import numpy as np

from .errors import DimensionMismatch, NotPrime, Overflow, TooLarge

MAX_ORDER = 2**31
TABLE_LIMIT = 4096
ENUMERATION_CAP = 10**8


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for f in range(3, isqrt(n) + 1, 2):
        if n % f == 0:
            return False
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


# -- polynomials over F_p as coefficient lists, lowest degree first ----------

def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _polymod(a, m, p):
    """Remainder of a modulo the monic polynomial m over F_p."""
    a = _trim(a)
    dm = len(m) - 1
    while len(a) - 1 >= dm:
        lead = a[-1]
        shift = len(a) - 1 - dm
        for i, c in enumerate(m):
            a[shift + i] = (a[shift + i] - lead * c) % p
        a = _trim(a)
    return a


def _polymul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return out


def is_irreducible(modulus, p: int) -> bool:
    """Trial division of a monic polynomial by every monic polynomial of degree <= e/2."""
    e = len(modulus) - 1
    if e <= 1:
        return e == 1
    for d in range(1, e // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            divisor = list(low) + [1]
            if not _polymod(modulus, divisor, p):
                return False
    return True


def _digits(a: int, p: int, e: int) -> list[int]:
    out = []
    for _ in range(e):
        a, d = divmod(a, p)
        out.append(d)
    return out


def _undigits(ds, p: int) -> int:
    v = 0
    for d in reversed(ds):
        v = v * p + d
    return v


class FieldCtx:
    """Arithmetic context for F_q with q = p**e.

    For ``e > 1`` the modulus defaults to the monic irreducible polynomial of
    degree ``e`` with the smallest base-``p`` encoding.  Instances are
    immutable and safe to share.
    """

    def __init__(self, p: int, e: int = 1, modulus=None):
        if not is_prime(p):
            raise NotPrime(f"{p} is not prime")
        if e < 1:
            raise ValueError("extension degree must be >= 1")
        if p**e > MAX_ORDER:
            raise Overflow(f"{p}^{e} exceeds the supported order 2^31")
        self.p = p
        self.e = e
        self.q = p**e
        if e == 1:
            self.modulus = (0, 1)
        else:
            if modulus is None:
                modulus = self._lowest_irreducible()
            modulus = tuple(int(c) % p for c in modulus)
            if len(modulus) != e + 1 or modulus[-1] != 1:
                raise ValueError("modulus must be monic of degree e")
            if not is_irreducible(modulus, p):
                raise ValueError(f"modulus {modulus} is reducible over F_{p}")
            self.modulus = modulus
        self._exp = self._log = None
        self._add_table = None
        if e > 1 and self.q <= TABLE_LIMIT:
            self._build_tables()

    # -- construction helpers ----------------------------------------------

    def _lowest_irreducible(self):
        p, e = self.p, self.e
        for low in range(p**e):
            cand = tuple(_digits(low, p, e)) + (1,)
            if is_irreducible(cand, p):
                return cand
        raise AssertionError("no irreducible polynomial found")  # pragma: no cover

    def _slow_mul(self, a: int, b: int) -> int:
        p, e = self.p, self.e
        prod = _polymul(_trim(_digits(a, p, e)), _trim(_digits(b, p, e)), p)
        return _undigits(_polymod(prod, self.modulus, p), p)

    def _slow_pow(self, a: int, k: int) -> int:
        result = 1
        while k:
            if k & 1:
                result = self._slow_mul(result, a)
            a = self._slow_mul(a, a)
            k >>= 1
        return result

    def _build_tables(self):
        q = self.q
        factors = prime_factors(q - 1)
        g = next(
            a for a in range(2, q)
            if all(self._slow_pow(a, (q - 1) // f) != 1 for f in factors)
        )
        exp = np.zeros(2 * (q - 1), dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        x = 1
        for i in range(q - 1):
            exp[i] = x
            log[x] = i
            x = self._slow_mul(x, g)
        exp[q - 1:] = exp[: q - 1]
        self.generator = g
        self._exp = exp
        self._log = log
        self._exp_list = exp.tolist()
        self._log_list = log.tolist()
        if q <= 256:
            a = np.arange(q)
            self._add_table = self.vadd(a[:, None], a[None, :]).tolist()

    # -- identity ------------------------------------------------------------

    def _key(self):
        return (self.p, self.e, self.modulus)

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"FieldCtx(p={self.p}, e={self.e})"

    def __reduce__(self):
        return (FieldCtx, (self.p, self.e, self.modulus if self.e > 1 else None))

    @property
    def modulus_encoding(self) -> int:
        return _undigits(self.modulus, self.p) if self.e > 1 else 0

    @property
    def is_prime_field(self) -> bool:
        return self.e == 1

    def serialize(self) -> str:
        return f"{self.p} {self.e} {self.modulus_encoding}"

    @classmethod
    def deserialize(cls, text: str) -> "FieldCtx":
        p, e, enc = (int(t) for t in text.split())
        if e == 1:
            return cls(p, 1)
        return cls(p, e, _digits(enc, p, e + 1))

    # -- scalar arithmetic ---------------------------------------------------

    def elements(self) -> list[int]:
        return list(range(self.q))

    def add(self, a: int, b: int) -> int:
        if self.e == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        if self._add_table is not None:
            return self._add_table[a][b]
        p = self.p
        out, mul = 0, 1
        while a or b:
            a, x = divmod(a, p)
            b, y = divmod(b, p)
            out += ((x + y) % p) * mul
            mul *= p
        return out

    def neg(self, a: int) -> int:
        if self.e == 1:
            return (-a) % self.p
        if self.p == 2:
            return a
        p = self.p
        out, mul = 0, 1
        while a:
            a, x = divmod(a, p)
            out += ((-x) % p) * mul
            mul *= p
        return out

    def sub(self, a: int, b: int) -> int:
        if self.e == 1:
            return (a - b) % self.p
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.e == 1:
            return (a * b) % self.p
        if a == 0 or b == 0:
            return 0
        if self._exp is not None:
            return self._exp_list[self._log_list[a] + self._log_list[b]]
        return self._slow_mul(a, b)

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise ZeroDivisionError("inverse of zero in a finite field")
        if self.e == 1:
            return pow(a, self.p - 2, self.p)
        if self._exp is not None:
            return self._exp_list[(self.q - 1 - self._log_list[a]) % (self.q - 1)]
        return self._slow_pow(a, self.q - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, k: int) -> int:
        if k < 0:
            return self.pow(self.inv(a), -k)
        if self.e == 1:
            return pow(a, k, self.p)
        result = 1
        while k:
            if k & 1:
                result = self.mul(result, a)
            a = self.mul(a, a)
            k >>= 1
        return result

    # -- vectorised arithmetic -------------------------------------------------

    def vadd(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.e == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        p = self.p
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        mul = 1
        for _ in range(self.e):
            out += ((a // mul % p + b // mul % p) % p) * mul
            mul *= p
        return out

    def vneg(self, a):
        a = np.asarray(a, dtype=np.int64)
        if self.e == 1:
            return (-a) % self.p
        if self.p == 2:
            return a.copy()
        p = self.p
        out = np.zeros_like(a)
        mul = 1
        for _ in range(self.e):
            out += ((-(a // mul % p)) % p) * mul
            mul *= p
        return out

    def vsub(self, a, b):
        if self.e == 1:
            return (np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)) % self.p
        return self.vadd(a, self.vneg(b))

    def vmul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.e == 1:
            return (a * b) % self.p
        if self._exp is None:
            return np.vectorize(self._slow_mul, otypes=[np.int64])(a, b)
        zero = (a == 0) | (b == 0)
        out = self._exp[self._log[a] + self._log[b]]
        return np.where(zero, 0, out)

    def vinv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero in a finite field")
        if self.e == 1:
            return np.vectorize(lambda x: pow(int(x), self.p - 2, self.p), otypes=[np.int64])(a)
        if self._exp is None:
            return np.vectorize(self.inv, otypes=[np.int64])(a)
        return self._exp[(self.q - 1 - self._log[a]) % (self.q - 1)]

    def vdot(self, rows, vec):
        """Matrix-vector style contraction over the last axis: sum_j rows[..., j] * vec[..., j]."""
        rows = np.asarray(rows, dtype=np.int64)
        vec = np.asarray(vec, dtype=np.int64)
        if self.e == 1:
            return (rows * vec).sum(axis=-1) % self.p
        prod = self.vmul(rows, vec)
        out = np.zeros(prod.shape[:-1], dtype=np.int64)
        for j in range(prod.shape[-1]):
            out = self.vadd(out, prod[..., j])
        return out


@lru_cache(maxsize=None)
def _cached_field(p: int, e: int) -> FieldCtx:
    return FieldCtx(p, e)


def field_new(p: int, e: int = 1) -> FieldCtx:
    """Return the (cached) context for F_{p^e} with the lowest-encoding modulus."""
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if e >= 1 and p**e > MAX_ORDER:
        raise Overflow(f"{p}^{e} exceeds the supported order 2^31")
    return _cached_field(p, e)


def field_of_order(q: int) -> FieldCtx:
    """Context for the field with q elements; q must be a prime power."""
    for p in prime_factors(q)[:1]:
        e, r = 0, q
        while r % p == 0:
            r //= p
            e += 1
        if r == 1:
            return field_new(p, e)
    raise NotPrime(f"{q} is not a prime power")


def enumerate_elements(ctx: FieldCtx) -> list[int]:
    return ctx.elements()


# -- multivariate polynomials ------------------------------------------------

@lru_cache(maxsize=None)
def monomials(nvars: int, degree: int, homogeneous: bool) -> tuple[tuple[int, ...], ...]:
    """Exponent vectors of total degree <= degree (== degree when homogeneous), in lex order."""
    out = [
        exps for exps in itertools.product(range(degree + 1), repeat=nvars)
        if (sum(exps) == degree if homogeneous else sum(exps) <= degree)
    ]
    return tuple(out)


def num_monomials(nvars: int, degree: int, homogeneous: bool) -> int:
    if homogeneous:
        return comb(degree + nvars - 1, nvars - 1)
    return comb(degree + nvars, nvars)


class MultiPoly:
    """Dense polynomial over F_q; ``coeffs[i]`` multiplies ``monomials(...)[i]``."""

    __slots__ = ("ctx", "nvars", "degree", "homogeneous", "coeffs")

    def __init__(self, ctx: FieldCtx, nvars: int, degree: int, coeffs, homogeneous: bool = False):
        coeffs = tuple(int(c) for c in coeffs)
        if len(coeffs) != num_monomials(nvars, degree, homogeneous):
            raise DimensionMismatch(
                f"expected {num_monomials(nvars, degree, homogeneous)} coefficients, got {len(coeffs)}"
            )
        if any(not 0 <= c < ctx.q for c in coeffs):
            raise ValueError("coefficient outside [0, q)")
        self.ctx = ctx
        self.nvars = nvars
        self.degree = degree
        self.homogeneous = bool(homogeneous)
        self.coeffs = coeffs

    @classmethod
    def from_terms(cls, ctx, nvars, terms: dict, degree=None, homogeneous=False) -> "MultiPoly":
        """Build from ``{exponent_tuple: coefficient}``."""
        if degree is None:
            degree = max((sum(t) for t in terms), default=0)
        mons = monomials(nvars, degree, homogeneous)
        index = {m: i for i, m in enumerate(mons)}
        coeffs = [0] * len(mons)
        for exps, c in terms.items():
            exps = tuple(exps)
            if exps not in index:
                raise DimensionMismatch(f"monomial {exps} not allowed in this shape")
            coeffs[index[exps]] = ctx.add(coeffs[index[exps]], int(c) % ctx.q)
        return cls(ctx, nvars, degree, coeffs, homogeneous)

    @classmethod
    def zero(cls, ctx, nvars, degree=0, homogeneous=False) -> "MultiPoly":
        return cls(ctx, nvars, degree, [0] * num_monomials(nvars, degree, homogeneous), homogeneous)

    def terms(self) -> dict:
        mons = monomials(self.nvars, self.degree, self.homogeneous)
        return {m: c for m, c in zip(mons, self.coeffs) if c}

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __eq__(self, other):
        return (
            isinstance(other, MultiPoly)
            and self.ctx == other.ctx
            and self.nvars == other.nvars
            and self.terms() == other.terms()
        )

    def __hash__(self):
        return hash((self.ctx, self.nvars, tuple(sorted(self.terms().items()))))

    def __repr__(self):
        return f"MultiPoly(nvars={self.nvars}, degree={self.degree}, terms={self.terms()})"

    def _combine_shape(self, other, degree):
        homog = self.homogeneous and other.homogeneous and self.degree == other.degree
        return degree, homog

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        if self.nvars != other.nvars or self.ctx != other.ctx:
            raise DimensionMismatch("polynomials live in different rings")
        degree, homog = self._combine_shape(other, max(self.degree, other.degree))
        terms = dict(self.terms())
        for m, c in other.terms().items():
            terms[m] = self.ctx.add(terms.get(m, 0), c)
        return MultiPoly.from_terms(self.ctx, self.nvars, terms, degree, homog)

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        if self.nvars != other.nvars or self.ctx != other.ctx:
            raise DimensionMismatch("polynomials live in different rings")
        ctx = self.ctx
        terms: dict = {}
        for m1, c1 in self.terms().items():
            for m2, c2 in other.terms().items():
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = ctx.add(terms.get(m, 0), ctx.mul(c1, c2))
        homog = self.homogeneous and other.homogeneous
        return MultiPoly.from_terms(ctx, self.nvars, terms, self.degree + other.degree, homog)

    # -- evaluation ------------------------------------------------------------

    def __call__(self, point):
        return evaluate(self, point)

    def dehomogenize(self, chart: int = 0) -> "MultiPoly":
        """Set variable ``chart`` to 1; the result is affine in nvars - 1 variables."""
        if not 0 <= chart < self.nvars:
            raise DimensionMismatch("chart index out of range")
        terms: dict = {}
        for m, c in self.terms().items():
            m2 = m[:chart] + m[chart + 1:]
            terms[m2] = self.ctx.add(terms.get(m2, 0), c)
        return MultiPoly.from_terms(self.ctx, self.nvars - 1, terms, self.degree, False)

    def to_text(self) -> str:
        return f"{self.nvars} {self.degree} {int(self.homogeneous)}\n" + " ".join(map(str, self.coeffs))

    @classmethod
    def from_text(cls, ctx: FieldCtx, text: str) -> "MultiPoly":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        nvars, degree, homog = (int(t) for t in lines[0].split())
        coeffs = [int(t) for t in " ".join(lines[1:]).split()]
        return cls(ctx, nvars, degree, coeffs, bool(homog))


def evaluate(f: MultiPoly, point) -> int:
    point = tuple(int(x) for x in point)
    if len(point) != f.nvars:
        raise DimensionMismatch(f"point has {len(point)} coordinates, polynomial has {f.nvars} variables")
    ctx = f.ctx
    powers = []
    for x in point:
        row = [1]
        for _ in range(f.degree):
            row.append(ctx.mul(row[-1], x))
        powers.append(row)
    acc = 0
    for exps, c in zip(monomials(f.nvars, f.degree, f.homogeneous), f.coeffs):
        if c:
            term = c
            for j, a in enumerate(exps):
                if a:
                    term = ctx.mul(term, powers[j][a])
            acc = ctx.add(acc, term)
    return acc


def evaluate_many(f: MultiPoly, points) -> np.ndarray:
    """Evaluate at every row of an (N, nvars) integer array."""
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim != 2 or pts.shape[1] != f.nvars:
        raise DimensionMismatch("points must have shape (N, nvars)")
    ctx = f.ctx
    powers = []
    for j in range(f.nvars):
        col = [np.ones(len(pts), dtype=np.int64)]
        for _ in range(f.degree):
            col.append(ctx.vmul(col[-1], pts[:, j]))
        powers.append(col)
    acc = np.zeros(len(pts), dtype=np.int64)
    for exps, c in zip(monomials(f.nvars, f.degree, f.homogeneous), f.coeffs):
        if c:
            term = np.full(len(pts), c, dtype=np.int64)
            for j, a in enumerate(exps):
                if a:
                    term = ctx.vmul(term, powers[j][a])
            acc = ctx.vadd(acc, term)
    return acc


def sample_poly(ctx: FieldCtx, nvars: int, degree: int, homogeneous: bool, rng) -> MultiPoly:
    """Uniform sample among the nonzero polynomials of the given shape."""
    if degree < 1 or nvars < 1:
        raise ValueError("sample_poly needs degree >= 1 and nvars >= 1")
    size = num_monomials(nvars, degree, homogeneous)
    while True:
        coeffs = rng.integers(0, ctx.q, size=size)
        if coeffs.any():
            return MultiPoly(ctx, nvars, degree, coeffs.tolist(), homogeneous)


def index_to_coords(idx, q: int, n: int) -> np.ndarray:
    """Point indices -> coordinate rows; the first coordinate is the most significant digit."""
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty(idx.shape + (n,), dtype=np.int64)
    rem = idx.copy()
    for j in range(n - 1, -1, -1):
        out[..., j] = rem % q
        rem //= q
    return out


def zero_locus_affine(fs, ctx: FieldCtx, n: int, chart: int = 0, cap: int = ENUMERATION_CAP):
    """Common zeros in F_q^n of the given polynomials, by full enumeration.

    Polynomials in ``n + 1`` variables must be homogeneous; they are restricted
    to the affine chart where homogeneous coordinate ``chart`` equals 1.
    """
    from .geom import PointSet

    fs = list(fs)
    if not fs:
        raise ValueError("need at least one polynomial")
    nvars = fs[0].nvars
    if any(f.nvars != nvars for f in fs) or nvars not in (n, n + 1):
        raise DimensionMismatch("all polynomials must share nvars in {n, n+1}")
    if nvars == n + 1:
        if not all(f.homogeneous for f in fs):
            raise DimensionMismatch("projective input must be homogeneous")
        fs = [f.dehomogenize(chart) for f in fs]
    total = ctx.q**n
    if total > cap:
        raise TooLarge(f"q^n = {total} exceeds the enumeration cap {cap}")
    found = []
    chunk = 1 << 18
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        pts = index_to_coords(idx, ctx.q, n)
        mask = np.ones(len(idx), dtype=bool)
        for f in fs:
            mask &= evaluate_many(f, pts) == 0
        found.append(idx[mask])
    return PointSet.from_indices(ctx, n, np.concatenate(found))
