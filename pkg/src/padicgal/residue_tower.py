"""Finite fields F_{p^k} with a coherent lattice of embeddings.

A computable stand-in for an algebraic closure of F_p: fields are created on
demand, defining polynomials are the lexicographically least monic
irreducibles (coefficients compared low-to-high), and embeddings between
registered fields are chosen as the lex-least root *compatible with every
embedding already installed*, which keeps the whole lattice coherent without
Conway polynomials.

Elements are immutable; the registry is an append-only cache guarded by a
single writer lock.
"""
from __future__ import annotations

import itertools
import random
import threading
from dataclasses import dataclass

from .errors import TraceNonzero

_LEX_SEARCH_BOUND = 160  # defining-poly search is enumeration below this degree
_ENUM_FIELD_BOUND = 1 << 16  # brute-force root search bound (field size)


# ---------------------------------------------------------------------------
# dense polynomial arithmetic over F_p (coefficients are ints, low-to-high)

def _ptrim(f: list[int]) -> list[int]:
    while len(f) > 1 and f[-1] == 0:
        f.pop()
    return f


def _pmul(f: list[int], g: list[int], p: int) -> list[int]:
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] = (out[i + j] + a * b) % p
    return _ptrim(out)


def _pmod(f: list[int], m: list[int], p: int) -> list[int]:
    # m monic
    f = f[:]
    dm = len(m) - 1
    while len(f) - 1 >= dm and any(f):
        c = f[-1]
        if c:
            shift = len(f) - 1 - dm
            for i, b in enumerate(m):
                f[shift + i] = (f[shift + i] - c * b) % p
        f.pop()
    return _ptrim(f if f else [0])


def _pdivmod(f: list[int], g: list[int], p: int) -> tuple[list[int], list[int]]:
    """Quotient and remainder of f by g over F_p (g need not be monic)."""
    f = _ptrim(f[:])
    g = _ptrim(g[:])
    inv = pow(g[-1], -1, p)
    if len(f) < len(g):
        return [0], f
    q = [0] * (len(f) - len(g) + 1)
    while len(f) >= len(g) and any(f):
        d = len(f) - len(g)
        c = f[-1] * inv % p
        q[d] = c
        for i, b in enumerate(g):
            f[d + i] = (f[d + i] - c * b) % p
        f = _ptrim(f)
        if f == [0]:
            break
    return _ptrim(q), f


def _ppowmod(f: list[int], e: int, m: list[int], p: int) -> list[int]:
    result = [1]
    base = _pmod(f, m, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, base, p), m, p)
        base = _pmod(_pmul(base, base, p), m, p)
        e >>= 1
    return result


def _pgcd(f: list[int], g: list[int], p: int) -> list[int]:
    f, g = _ptrim(f[:]), _ptrim(g[:])
    while any(g):
        _, r = _pdivmod(f, g, p)
        f, g = g, r
    if any(f):
        lead_inv = pow(f[-1], -1, p)
        f = [x * lead_inv % p for x in f]
    return f


def _is_irreducible(f: list[int], p: int) -> bool:
    """Rabin test: x^{p^k} = x mod f and gcd(x^{p^{k/q}} - x, f) = 1."""
    k = len(f) - 1
    if k == 1:
        return True
    if f[0] == 0:
        return False
    x = [0, 1]
    xq = _ppowmod(x, p**k, f, p)
    if _ptrim([(a - b) % p for a, b in itertools.zip_longest(xq, x, fillvalue=0)]) != [0]:
        return False
    for q in _prime_divisors(k):
        xe = _ppowmod(x, p ** (k // q), f, p)
        diff = _ptrim([(a - b) % p for a, b in itertools.zip_longest(xe, x, fillvalue=0)])
        g = _pgcd(diff, f, p)
        if len(g) > 1:
            return False
    return True


def _prime_divisors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def lex_least_irreducible(p: int, k: int) -> tuple[int, ...]:
    """Lexicographically least monic irreducible of degree k (coefficients
    ordered low-to-high).

    For k >= 2 the constant term of an irreducible is nonzero, so the
    c_0 = 0 block (p^{k-1} candidates) is skipped outright.
    """
    if k > _LEX_SEARCH_BOUND:
        raise ValueError(
            f"defining-poly enumeration capped at degree {_LEX_SEARCH_BOUND}"
        )
    if k == 1:
        return (0, 1)
    for c0 in range(1, p):
        for tail in itertools.product(range(p), repeat=k - 1):
            f = [c0] + list(tail) + [1]
            if _is_irreducible(f, p):
                return tuple(f)
    raise RuntimeError("unreachable: irreducibles exist in every degree")


# ---------------------------------------------------------------------------
# fields and elements

@dataclass(frozen=True)
class FieldId:
    """Registered finite field F_{p^k} with its defining polynomial."""

    p: int
    k: int
    poly: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.p**self.k

    def zero(self) -> "FqElem":
        return FqElem(self, (0,) * self.k)

    def one(self) -> "FqElem":
        return FqElem(self, (1,) + (0,) * (self.k - 1))

    def gen(self) -> "FqElem":
        if self.k == 1:
            return self.zero()
        return FqElem(self, (0, 1) + (0,) * (self.k - 2))

    def from_int_vector(self, coeffs) -> "FqElem":
        c = [int(x) % self.p for x in coeffs]
        c += [0] * (self.k - len(c))
        return FqElem(self, tuple(c[: self.k]))

    def elements(self):
        for tup in itertools.product(range(self.p), repeat=self.k):
            yield FqElem(self, tup)


@dataclass(frozen=True)
class FqElem:
    field: FieldId
    coeffs: tuple[int, ...]

    def _check(self, other: "FqElem") -> None:
        if self.field != other.field:
            raise ValueError("elements of different fields; embed first")

    def __add__(self, other: "FqElem") -> "FqElem":
        self._check(other)
        p = self.field.p
        return FqElem(
            self.field, tuple((a + b) % p for a, b in zip(self.coeffs, other.coeffs))
        )

    def __sub__(self, other: "FqElem") -> "FqElem":
        self._check(other)
        p = self.field.p
        return FqElem(
            self.field, tuple((a - b) % p for a, b in zip(self.coeffs, other.coeffs))
        )

    def __neg__(self) -> "FqElem":
        p = self.field.p
        return FqElem(self.field, tuple(-a % p for a in self.coeffs))

    def __mul__(self, other: "FqElem") -> "FqElem":
        self._check(other)
        p = self.field.p
        prod = _pmul(list(self.coeffs), list(other.coeffs), p)
        red = _pmod(prod, list(self.field.poly), p)
        red += [0] * (self.field.k - len(red))
        return FqElem(self.field, tuple(red))

    def scale(self, c: int) -> "FqElem":
        p = self.field.p
        return FqElem(self.field, tuple(a * c % p for a in self.coeffs))

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.coeffs)

    def inverse(self) -> "FqElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        p = self.field.p
        r0, r1 = list(self.field.poly), _ptrim(list(self.coeffs))
        s0, s1 = [0], [1]
        while any(r1):
            q, r = _pdivmod(r0, r1, p)
            r0, r1 = r1, r
            s0, s1 = s1, _ptrim(
                [
                    (a - b) % p
                    for a, b in itertools.zip_longest(s0, _pmul(q, s1, p), fillvalue=0)
                ]
            )
        c_inv = pow(r0[-1], -1, p)
        inv = _pmod([x * c_inv % p for x in s0], list(self.field.poly), p)
        inv += [0] * (self.field.k - len(inv))
        return FqElem(self.field, tuple(inv))

    def __pow__(self, e: int) -> "FqElem":
        if e < 0:
            return self.inverse() ** (-e)
        result = self.field.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def to_json(self) -> dict:
        return {"p": self.field.p, "k": self.field.k, "coeffs": list(self.coeffs)}

    def __repr__(self) -> str:
        return f"Fq({self.field.p}^{self.field.k}; {list(self.coeffs)})"


# ---------------------------------------------------------------------------
# registry

class _Registry:
    def __init__(self):
        self._lock = threading.RLock()
        self._fields: dict[tuple[int, int], FieldId] = {}
        self._embeddings: dict[tuple[int, int, int], list[FqElem]] = {}

    def ensure_field(self, p: int, k: int) -> FieldId:
        key = (p, k)
        got = self._fields.get(key)
        if got is not None:
            return got
        with self._lock:
            got = self._fields.get(key)
            if got is not None:
                return got
            fid = FieldId(p, k, lex_least_irreducible(p, k))
            self._fields[key] = fid
            return fid

    def registered_degrees(self, p: int) -> list[int]:
        return sorted(k for (pp, k) in self._fields if pp == p)

    def embedding_basis(self, p: int, k1: int, k2: int) -> list[FqElem]:
        """Images of 1, g, g^2, ..., g^{k1-1} inside F_{p^{k2}}."""
        if k2 % k1:
            raise ValueError(f"no embedding F_{p}^{k1} -> F_{p}^{k2}")
        key = (p, k1, k2)
        got = self._embeddings.get(key)
        if got is not None:
            return got
        with self._lock:
            got = self._embeddings.get(key)
            if got is not None:
                return got
            basis = self._build_embedding(p, k1, k2)
            self._embeddings[key] = basis
            return basis

    def _build_embedding(self, p: int, k1: int, k2: int) -> list[FqElem]:
        big = self.ensure_field(p, k2)
        small = self.ensure_field(p, k1)
        if k1 == k2:
            root = big.gen()
        elif k1 == 1:
            root = big.zero() if small.poly == (0, 1) else _constant_root(small, big)
        else:
            # pin every smaller registered divisor of k1 into big first, in
            # increasing order: this keeps the lattice coherent by induction
            for d in self.registered_degrees(p):
                if 1 < d < k1 and k1 % d == 0:
                    self.embedding_basis(p, d, k2)
            root = self._choose_root(p, small, big)
        powers = [big.one()]
        for _ in range(1, k1):
            powers.append(powers[-1] * root)
        return powers

    def _choose_root(self, p: int, small: FieldId, big: FieldId) -> FqElem:
        k1, k2 = small.k, big.k
        # a fully memoized chain small -> m -> big forces the choice
        forced: FqElem | None = None
        for m in self.registered_degrees(p):
            if not (k1 < m < k2 and m % k1 == 0 and k2 % m == 0):
                continue
            if (p, k1, m) not in self._embeddings or (p, m, k2) not in self._embeddings:
                continue
            cand = embed(embed(small.gen(), self.ensure_field(p, m)), big)
            if forced is None:
                forced = cand
            elif forced != cand:
                raise RuntimeError("embedding lattice incoherent")
        poly = [FqElem(big, _embed_const(c, big)) for c in small.poly]
        roots = sorted(_all_roots(poly, big), key=lambda r: r.coeffs)
        if forced is not None:
            if forced not in roots:
                raise RuntimeError("forced embedding image is not a root")
            return forced
        # constrain by registered proper subfields (all pinned into big above)
        constraints = []
        for d in self.registered_degrees(p):
            if 1 < d < k1 and k1 % d == 0:
                gd = self.ensure_field(p, d).gen()
                constraints.append((embed(gd, small), embed(gd, big)))
        for r in roots:
            if all(_apply_root(alpha, r, big) == target for alpha, target in constraints):
                return r
        raise RuntimeError("no compatible root; lattice incoherent")


def _constant_root(small: FieldId, big: FieldId) -> FqElem:
    # degree-1 field with poly x - a: generator image is the constant a
    a = (-small.poly[0]) % small.p
    return FqElem(big, _embed_const(a, big))


def _embed_const(c: int, big: FieldId) -> tuple[int, ...]:
    return (c % big.p,) + (0,) * (big.k - 1)


def _apply_root(alpha: FqElem, root: FqElem, big: FieldId) -> FqElem:
    """Evaluate the coefficient vector of alpha (over the small field's
    generator) at `root` inside `big`."""
    acc = big.zero()
    power = big.one()
    for c in alpha.coeffs:
        acc = acc + power.scale(c)
        power = power * root
    return acc


_REGISTRY = _Registry()


def ensure_field(p: int, k: int) -> FieldId:
    """Register (idempotently) and return F_{p^k}."""
    if k < 1:
        raise ValueError("degree must be >= 1")
    return _REGISTRY.ensure_field(p, k)


def embed(x: FqElem, target: FieldId) -> FqElem:
    """Embed x into the registered field `target` (degree must divide)."""
    if x.field == target:
        return x
    basis = _REGISTRY.embedding_basis(x.field.p, x.field.k, target.k)
    acc = target.zero()
    for c, b in zip(x.coeffs, basis):
        if c:
            acc = acc + b.scale(c)
    return acc


def frobenius_pow(x: FqElem, j: int) -> FqElem:
    """x^{p^j}; j may be any integer (reduced mod k)."""
    k = x.field.k
    j %= k
    return x ** (x.field.p**j) if j else x


# ---------------------------------------------------------------------------
# root finding

def _poly_of_fq(coeffs: list[FqElem]) -> list[FqElem]:
    c = coeffs[:]
    while len(c) > 1 and c[-1].is_zero():
        c.pop()
    return c


def _fq_poly_mod(f: list[FqElem], m: list[FqElem], fid: FieldId) -> list[FqElem]:
    f = f[:]
    lead_inv = m[-1].inverse()
    dm = len(m) - 1
    while len(f) - 1 >= dm:
        c = f[-1] * lead_inv
        if not c.is_zero():
            shift = len(f) - 1 - dm
            for i, b in enumerate(m):
                f[shift + i] = f[shift + i] - c * b
        f.pop()
        f = _poly_of_fq(f) if len(f) - 1 < dm else f
    return _poly_of_fq(f if f else [fid.zero()])


def _fq_poly_mul(f: list[FqElem], g: list[FqElem], fid: FieldId) -> list[FqElem]:
    out = [fid.zero()] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if not a.is_zero():
            for j, b in enumerate(g):
                out[i + j] = out[i + j] + a * b
    return _poly_of_fq(out)


def _fq_poly_gcd(f: list[FqElem], g: list[FqElem], fid: FieldId) -> list[FqElem]:
    f, g = _poly_of_fq(f), _poly_of_fq(g)
    while not (len(g) == 1 and g[0].is_zero()):
        f, g = g, _fq_poly_mod(f, g, fid)
    if not f[-1].is_zero():
        inv = f[-1].inverse()
        f = [c * inv for c in f]
    return f


def _fq_powmod(base: list[FqElem], e: int, m: list[FqElem], fid: FieldId) -> list[FqElem]:
    result = [fid.one()]
    base = _fq_poly_mod(base, m, fid)
    while e:
        if e & 1:
            result = _fq_poly_mod(_fq_poly_mul(result, base, fid), m, fid)
        base = _fq_poly_mod(_fq_poly_mul(base, base, fid), m, fid)
        e >>= 1
    return result


def _poly_eval(f: list[FqElem], x: FqElem) -> FqElem:
    acc = f[-1]
    for c in reversed(f[:-1]):
        acc = acc * x + c
    return acc


def _all_roots(f: list[FqElem], fid: FieldId) -> list[FqElem]:
    """All roots in fid of a polynomial with coefficients in fid."""
    f = _poly_of_fq(f)
    if len(f) == 1:
        return []
    # keep only the part splitting over fid: gcd(f, x^q - x)
    q = fid.size
    x = [fid.zero(), fid.one()]
    if len(f) > 2:
        xq = _fq_powmod(x, q, f, fid)
        diff = [
            (xq[i] if i < len(xq) else fid.zero())
            - (x[i] if i < len(x) else fid.zero())
            for i in range(max(len(xq), len(x)))
        ]
        f = _fq_poly_gcd(f, _poly_of_fq(diff), fid)
    if len(f) == 1:
        return []
    if q <= _ENUM_FIELD_BOUND:
        return [e for e in fid.elements() if _poly_eval(f, e).is_zero()]
    return _cz_roots(f, fid)


def _cz_roots(f: list[FqElem], fid: FieldId) -> list[FqElem]:
    """Cantor-Zassenhaus splitting of a polynomial that splits completely
    over fid; seeded, so root sets are reproducible."""
    rng = random.Random(0xA5 + fid.k)
    p, q = fid.p, fid.size
    out: list[FqElem] = []
    stack = [f]
    while stack:
        h = _poly_of_fq(stack.pop())
        if len(h) == 1:
            continue
        if len(h) == 2:
            out.append(-(h[0] * h[1].inverse()))
            continue
        a = fid.from_int_vector([rng.randrange(p) for _ in range(fid.k)])
        xa = [a, fid.one()]
        if p == 2:
            # trace polynomial T = sum_{i < log2 q} (x+a)^{2^i} maps onto F_2
            acc = _fq_poly_mod(xa, h, fid)
            t = acc
            e = q
            while e > 2:
                acc = _fq_poly_mod(_fq_poly_mul(acc, acc, fid), h, fid)
                t = _fq_poly_add(t, acc, fid)
                e //= 2
            g = _fq_poly_gcd(h, t, fid)
        else:
            w = _fq_powmod(xa, (q - 1) // 2, h, fid)
            w = _poly_of_fq([w[0] - fid.one()] + list(w[1:]))
            g = _fq_poly_gcd(h, w, fid)
        if 1 < len(g) < len(h):
            stack.append(g)
            stack.append(_fq_poly_divide(h, g, fid))
        else:
            stack.append(h)  # resample and retry
    return out


def _fq_poly_add(f: list[FqElem], g: list[FqElem], fid: FieldId) -> list[FqElem]:
    out = [
        (f[i] if i < len(f) else fid.zero()) + (g[i] if i < len(g) else fid.zero())
        for i in range(max(len(f), len(g)))
    ]
    return _poly_of_fq(out)


def _fq_poly_divide(f: list[FqElem], g: list[FqElem], fid: FieldId) -> list[FqElem]:
    """Exact quotient f / g (remainder known to be zero)."""
    f = _poly_of_fq(f[:])
    g = _poly_of_fq(g)
    inv = g[-1].inverse()
    quo = [fid.zero()] * (len(f) - len(g) + 1)
    while len(f) >= len(g) and not (len(f) == 1 and f[0].is_zero()):
        d = len(f) - len(g)
        c = f[-1] * inv
        quo[d] = c
        for i, b in enumerate(g):
            f[d + i] = f[d + i] - c * b
        f.pop()
        f = _poly_of_fq(f)
    return _poly_of_fq(quo)


def find_root(coeffs: list[FqElem]) -> tuple[FieldId, FqElem]:
    """A root of the given nonconstant polynomial, extending the field as
    needed; returns (hosting field, root).

    The hosting field is the smallest extension containing a root; among the
    roots there the lexicographically least coefficient vector is returned.
    """
    f = _poly_of_fq(coeffs)
    if len(f) < 2:
        raise ValueError("polynomial must be nonconstant")
    fid = f[0].field
    p, k, q = fid.p, fid.k, fid.size
    deg = len(f) - 1
    x = [fid.zero(), fid.one()]
    for d in range(1, deg + 1):
        # roots in F_{q^d} exist iff gcd(x^{q^d} - x, f) != 1
        xqd = x
        for _ in range(d):
            xqd = _fq_powmod(xqd, q, f, fid)
        diff = [
            (xqd[i] if i < len(xqd) else fid.zero())
            - (x[i] if i < len(x) else fid.zero())
            for i in range(max(len(xqd), len(x)))
        ]
        g = _fq_poly_gcd(f, _poly_of_fq(diff), fid)
        if len(g) > 1:
            target = ensure_field(p, k * d)
            lifted = [embed(c, target) for c in g]
            roots = sorted(_all_roots(lifted, target), key=lambda r: r.coeffs)
            return target, roots[0]
    raise RuntimeError("unreachable: polynomial has a root in degree <= deg")


# ---------------------------------------------------------------------------
# additive Hilbert 90

def relative_trace(c: FqElem, base: FieldId) -> FqElem:
    """Trace of c from its field down to `base` (base.k | c.field.k)."""
    k0 = base.k
    m = c.field.k // k0
    acc = c
    cur = c
    for _ in range(m - 1):
        cur = frobenius_pow(cur, k0)
        acc = acc + cur
    return acc


def additive_h90(c: FqElem, base: FieldId) -> FqElem:
    """Solve sigma(b) - b = c for sigma = relative Frobenius over `base`.

    Requires the relative trace of c to vanish; raises TraceNonzero otherwise.
    The solution uses a fixed trace-generating element, so it is deterministic.
    """
    k0 = base.k
    K = c.field
    if K.k % k0:
        raise ValueError("base degree must divide the element's degree")
    m = K.k // k0
    if m == 1:
        if c.is_zero():
            return K.zero()
        raise TraceNonzero("relative trace is the identity here")
    tr = relative_trace(c, base)
    if not tr.is_zero():
        raise TraceNonzero(f"relative trace {tr!r} is nonzero")
    theta, tau = _trace_one_element(K, base)
    tau_inv = tau.inverse()
    # b = -(1/tau) * sum_i s_i sigma^i(theta), s_i = sum_{j<i} sigma^j(c)
    b = K.zero()
    s = K.zero()
    sig_theta = theta
    sig_c = c
    for i in range(m):
        if i:
            s = s + sig_c
            sig_c = frobenius_pow(sig_c, k0)
            sig_theta = frobenius_pow(sig_theta, k0)
            b = b + s * sig_theta
    return -(b * tau_inv)


def _trace_one_element(K: FieldId, base: FieldId) -> tuple[FqElem, FqElem]:
    """First basis monomial with nonzero relative trace, plus its trace."""
    g = K.gen()
    power = K.one()
    for _ in range(K.k):
        tr = relative_trace(power, base)
        if not tr.is_zero():
            return power, tr
        power = power * g
    raise RuntimeError("unreachable: trace form is nondegenerate")
