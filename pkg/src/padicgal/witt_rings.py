"""Unramified coefficient rings GR(p^n, k), a single Eisenstein layer on top,
and twisted unit vectors.

GR(p^n, k) = (Z/p^n)[x]/(f) where f is the integer lift of the residue_tower
defining polynomial, so reduction mod p literally lands in the registered
F_{p^k}.  The Frobenius lift acts through the Teichmueller digit expansion
x = sum [d_i] p^i, which is the unique ring lift of x -> x^p and is directly
testable (exact order k, fixes Z/p^n).

The ramified layer stores elements by their Teichmueller pi-adic digits
(d_0, ..., d_{m-1}), d_i in the residue field: this representation is
canonical, makes equality bit-exact, and makes the Frobenius of L (fix pi,
raise digits to the q-th power) an O(m) operation.

Everything is an immutable value; ring descriptors are cached in the same
append-only registry discipline as residue_tower.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

from .errors import ExponentOverflow, NotInvertible
from .padic_core import PadicMatrix, val_p
from .residue_tower import FieldId, FqElem, ensure_field, frobenius_pow

_VAL_BUDGET = 1 << 48  # valuation exponents beyond this raise ExponentOverflow


def _frobj(d, j: int):
    """Frobenius x -> x^{p^j} on a residue digit (FqElem or tower element)."""
    if isinstance(d, FqElem):
        return frobenius_pow(d, j)
    return d.frobenius(j)


# ---------------------------------------------------------------------------
# Galois rings

class GaloisRing:
    """Descriptor of GR(p^n, k); get instances via galois_ring()."""

    def __init__(self, p: int, n: int, k: int):
        self.p = p
        self.n = n
        self.k = k
        self.modulus = p**n
        self.residue_field = ensure_field(p, k)
        self.poly = self.residue_field.poly  # monic, integer coefficients
        self._teich_cache: dict[tuple[int, ...], GaloisRingElem] = {}

    def elem(self, coeffs: Sequence[int]) -> "GaloisRingElem":
        c = [int(x) % self.modulus for x in coeffs]
        c += [0] * (self.k - len(c))
        if len(c) > self.k:
            c = self._reduce(c)
        return GaloisRingElem(self, tuple(c[: self.k]))

    def zero(self) -> "GaloisRingElem":
        return GaloisRingElem(self, (0,) * self.k)

    def one(self) -> "GaloisRingElem":
        return GaloisRingElem(self, (1,) + (0,) * (self.k - 1))

    def from_int(self, a: int) -> "GaloisRingElem":
        return self.elem([a])

    def _reduce(self, c: list[int]) -> list[int]:
        mod = self.modulus
        dm = self.k
        c = c[:]
        while len(c) > dm:
            top = c.pop()
            if top:
                shift = len(c) - dm
                for i in range(dm):
                    c[shift + i] = (c[shift + i] - top * self.poly[i]) % mod
        return c

    def teichmuller(self, x: FqElem) -> "GaloisRingElem":
        """The unique lift t of x with t^{p^k} = t."""
        if x.field != self.residue_field:
            raise ValueError("digit lives in the wrong residue field")
        got = self._teich_cache.get(x.coeffs)
        if got is not None:
            return got
        t = self.elem(list(x.coeffs))
        q = self.p**self.k
        for _ in range(self.n):
            t = t**q
        self._teich_cache[x.coeffs] = t
        return t

    def __repr__(self) -> str:
        return f"GR({self.p}^{self.n}, {self.k})"


_GR_CACHE: dict[tuple[int, int, int], GaloisRing] = {}
_GR_LOCK = threading.Lock()


def galois_ring(p: int, n: int, k: int) -> GaloisRing:
    key = (p, n, k)
    got = _GR_CACHE.get(key)
    if got is None:
        with _GR_LOCK:
            got = _GR_CACHE.get(key)
            if got is None:
                got = GaloisRing(p, n, k)
                _GR_CACHE[key] = got
    return got


@dataclass(frozen=True)
class GaloisRingElem:
    ring: GaloisRing
    coeffs: tuple[int, ...]

    def _check(self, other: "GaloisRingElem") -> None:
        if self.ring is not other.ring:
            raise ValueError("elements of different Galois rings")

    def __add__(self, other):
        self._check(other)
        m = self.ring.modulus
        return GaloisRingElem(
            self.ring, tuple((a + b) % m for a, b in zip(self.coeffs, other.coeffs))
        )

    def __sub__(self, other):
        self._check(other)
        m = self.ring.modulus
        return GaloisRingElem(
            self.ring, tuple((a - b) % m for a, b in zip(self.coeffs, other.coeffs))
        )

    def __neg__(self):
        m = self.ring.modulus
        return GaloisRingElem(self.ring, tuple(-a % m for a in self.coeffs))

    def __mul__(self, other):
        self._check(other)
        mod = self.ring.modulus
        out = [0] * (2 * self.ring.k - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] = (out[i + j] + a * b) % mod
        red = self.ring._reduce(out)
        red += [0] * (self.ring.k - len(red))
        return GaloisRingElem(self.ring, tuple(red))

    def scale(self, c: int):
        m = self.ring.modulus
        return GaloisRingElem(self.ring, tuple(a * c % m for a in self.coeffs))

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.ring.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.coeffs)

    def is_unit(self) -> bool:
        return not self.residue().is_zero()

    def residue(self) -> FqElem:
        p = self.ring.p
        return FqElem(self.ring.residue_field, tuple(a % p for a in self.coeffs))

    def divide_exact_p(self) -> "GaloisRingElem":
        """Exact division by p; trust of the top p-digit is gone afterwards."""
        if any(a % self.ring.p for a in self.coeffs):
            raise ValueError("not divisible by p")
        return GaloisRingElem(self.ring, tuple(a // self.ring.p for a in self.coeffs))

    def inverse(self) -> "GaloisRingElem":
        res = self.residue()
        if res.is_zero():
            raise NotInvertible("reduction mod p is zero")
        y = self.ring.elem(list(res.inverse().coeffs))
        two = self.ring.one() + self.ring.one()
        steps = max(1, (self.ring.n - 1).bit_length() + 1)
        for _ in range(steps):
            y = y * (two - self * y)
        return y

    def teichmuller_digits(self) -> list[FqElem]:
        """Digits d_i of the expansion sum [d_i] p^i."""
        digits = []
        cur = self
        for _ in range(self.ring.n):
            d = cur.residue()
            digits.append(d)
            cur = (cur - self.ring.teichmuller(d)).divide_exact_p()
        return digits

    def frobenius(self, j: int = 1) -> "GaloisRingElem":
        """The Frobenius lift applied j times (j may be negative)."""
        j %= self.ring.k
        if j == 0:
            return self
        ring = self.ring
        acc = ring.zero()
        for i, d in enumerate(self.teichmuller_digits()):
            acc = acc + ring.teichmuller(frobenius_pow(d, j)).scale(ring.p**i)
        return acc

    def valuation(self) -> int:
        v = min(val_p(a, self.ring.p, self.ring.n) for a in self.coeffs)
        return v

    def __repr__(self) -> str:
        return f"GRElem({list(self.coeffs)} in {self.ring!r})"


def teichmuller(x: FqElem, n: int) -> GaloisRingElem:
    """Teichmueller lift of x into GR(p^n, k)."""
    ring = galois_ring(x.field.p, n, x.field.k)
    return ring.teichmuller(x)


def frobenius_lift(x: GaloisRingElem, j: int = 1) -> GaloisRingElem:
    """Ring-level Frobenius lift (order k, fixes Z/p^n, reduces to x -> x^p)."""
    return x.frobenius(j)


# ---------------------------------------------------------------------------
# Eisenstein layer

class LocalRing:
    """Truncation of O_{L_0} at pi-precision m over a coefficient ring.

    The coefficient ring `gr` must implement the GaloisRing element protocol
    (zero/one/elem/teichmuller/from_int plus element arithmetic); digits live
    in its residue field.  The Eisenstein polynomial E (monic, degree e,
    constant term p * unit, middle coefficients divisible by p) defines pi.
    frobenius_exponent k0 records that the Frobenius of L acts on digits as
    x -> x^{p^{k0}} while fixing pi.
    """

    def __init__(self, gr, eisenstein: Sequence, m: int, frobenius_exponent: int = 1):
        self.gr = gr
        self.p = gr.p
        self.m = m
        self.k0 = frobenius_exponent
        coeffs = [c if hasattr(c, "residue") else gr.from_int(int(c)) for c in eisenstein]
        if len(coeffs) < 2:
            raise ValueError("Eisenstein polynomial must have degree >= 1")
        if coeffs[-1] != gr.one():
            raise ValueError("Eisenstein polynomial must be monic")
        self.e = len(coeffs) - 1
        self.E = tuple(coeffs)
        self._validate()
        if m < 1:
            raise ValueError("pi-precision must be >= 1")
        # internal p-precision: ceil(m/e) + 1 slack for digit extraction
        # (but never more than the coefficient ring provides)
        self._pow_cache: dict = {}
        a0 = self.E[0]
        u0 = a0.divide_exact_p()
        mid = [self.E[i].divide_exact_p() for i in range(1, self.e)]
        # p / pi = -u0^{-1} (pi^{e-1} + a_{e-1} pi^{e-2} + ... + a_1)
        vec = [self.gr.zero()] * self.e
        vec[self.e - 1] = self.gr.one()
        for i in range(1, self.e):
            vec[i - 1] = self.E[i]
        neg_u0inv = -(u0.inverse())
        self.p_over_pi = tuple(neg_u0inv * c for c in vec)

    def _validate(self) -> None:
        a0 = self.E[0]
        if not _divisible_by_p(a0) or not _divisible_by_p_once(a0):
            raise ValueError("constant term must be p * unit")
        for i in range(1, self.e):
            if not _divisible_by_p(self.E[i]):
                raise ValueError("middle Eisenstein coefficients must be = 0 mod p")

    @property
    def residue_field(self):
        return self.gr.residue_field

    def zero_digits(self) -> tuple:
        z = self._fq_zero()
        return tuple(z for _ in range(self.m))

    def _fq_zero(self):
        return self.gr.zero().residue()

    def _fq_one(self):
        return self.gr.one().residue()

    def elem_from_digits(self, digits: Sequence) -> "LocalRingElem":
        d = list(digits)[: self.m]
        d += [self._fq_zero()] * (self.m - len(d))
        return LocalRingElem(self, tuple(d))

    def zero(self) -> "LocalRingElem":
        return self.elem_from_digits([])

    def one(self) -> "LocalRingElem":
        return self.elem_from_digits([self._fq_one()])

    def pi(self) -> "LocalRingElem":
        return self.elem_from_digits([self._fq_zero(), self._fq_one()])

    def from_coefficient(self, c) -> "LocalRingElem":
        """Constant from the coefficient ring."""
        vec = [c] + [self.gr.zero()] * (self.e - 1)
        return LocalRingElem(self, self._expanded_to_digits(vec))

    def from_int(self, a: int) -> "LocalRingElem":
        return self.from_coefficient(self.gr.from_int(a))

    # -- expanded form: vectors of e coefficient-ring entries = sum b_i pi^i

    def _exp_mul(self, x: list, y: list) -> list:
        zero = self.gr.zero()
        out = [zero] * (2 * self.e - 1)
        for i, a in enumerate(x):
            if not a.is_zero():
                for j, b in enumerate(y):
                    out[i + j] = out[i + j] + a * b
        for idx in range(2 * self.e - 2, self.e - 1, -1):
            c = out[idx]
            if not c.is_zero():
                out[idx] = zero
                for i in range(self.e):
                    out[idx - self.e + i] = out[idx - self.e + i] - c * self.E[i]
        return out[: self.e]

    def _exp_shift(self, x: list) -> list:
        """Multiply an expanded vector by pi."""
        zero = self.gr.zero()
        out = [zero] + x[:]
        c = out[self.e]
        out = out[: self.e]
        if not c.is_zero():
            for i in range(self.e):
                out[i] = out[i] - c * self.E[i]
        return out

    def _digits_to_expanded(self, digits: Sequence) -> list:
        acc = [self.gr.zero()] * self.e
        power = [self.gr.one()] + [self.gr.zero()] * (self.e - 1)
        for d in digits:
            if not d.is_zero():
                t = self.gr.teichmuller(d)
                acc = [a + t * b for a, b in zip(acc, power)]
            power = self._exp_shift(power)
        return acc

    def _expanded_to_digits(self, vec: list) -> tuple:
        digits = []
        cur = vec[:]
        for _ in range(self.m):
            d = cur[0].residue()
            digits.append(d)
            if not d.is_zero():
                cur[0] = cur[0] - self.gr.teichmuller(d)
            # divide by pi: (b_0/p) * (p/pi) + sum_{j>=1} b_j pi^{j-1}
            c = cur[0].divide_exact_p()
            nxt = cur[1:] + [self.gr.zero()]
            if not c.is_zero():
                nxt = [a + c * b for a, b in zip(nxt, self.p_over_pi)]
            cur = nxt
        return tuple(digits)

    def __repr__(self) -> str:
        return f"LocalRing({self.gr!r}, e={self.e}, m={self.m}, k0={self.k0})"


def _divisible_by_p(c) -> bool:
    return c.residue().is_zero()


def _divisible_by_p_once(c) -> bool:
    return not c.divide_exact_p().residue().is_zero()


@dataclass(frozen=True)
class LocalRingElem:
    ring: LocalRing
    digits: tuple

    def _check(self, other: "LocalRingElem") -> None:
        if self.ring is not other.ring:
            raise ValueError("elements of different local rings")

    def _expanded(self) -> list:
        return self.ring._digits_to_expanded(self.digits)

    def __add__(self, other):
        self._check(other)
        vec = [a + b for a, b in zip(self._expanded(), other._expanded())]
        return LocalRingElem(self.ring, self.ring._expanded_to_digits(vec))

    def __sub__(self, other):
        self._check(other)
        vec = [a - b for a, b in zip(self._expanded(), other._expanded())]
        return LocalRingElem(self.ring, self.ring._expanded_to_digits(vec))

    def __neg__(self):
        vec = [-a for a in self._expanded()]
        return LocalRingElem(self.ring, self.ring._expanded_to_digits(vec))

    def __mul__(self, other):
        self._check(other)
        vec = self.ring._exp_mul(self._expanded(), other._expanded())
        return LocalRingElem(self.ring, self.ring._expanded_to_digits(vec))

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.ring.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self) -> bool:
        return all(d.is_zero() for d in self.digits)

    def is_unit(self) -> bool:
        return not self.digits[0].is_zero()

    def is_principal_unit(self) -> bool:
        one = self.ring._fq_one()
        return self.digits[0] == one

    def pi_valuation(self) -> int:
        for i, d in enumerate(self.digits):
            if not d.is_zero():
                return i
        return self.ring.m

    def inverse(self) -> "LocalRingElem":
        if not self.is_unit():
            raise NotInvertible("pi divides the element")
        ring = self.ring
        x = self._expanded()
        y0 = ring.gr.teichmuller(self.digits[0].inverse())
        y = [y0] + [ring.gr.zero()] * (ring.e - 1)
        two = [ring.gr.from_int(2)] + [ring.gr.zero()] * (ring.e - 1)
        steps = max(1, (ring.m + ring.e).bit_length() + 1)
        for _ in range(steps):
            xy = ring._exp_mul(x, y)
            corr = [a - b for a, b in zip(two, xy)]
            y = ring._exp_mul(y, corr)
        return LocalRingElem(ring, ring._expanded_to_digits(y))

    def frobenius(self, times: int = 1) -> "LocalRingElem":
        """Naive Frobenius of L: fixes pi, digits -> digits^{p^{k0 * times}}."""
        return self.frobenius_exp(self.ring.k0 * times)

    def frobenius_exp(self, j: int) -> "LocalRingElem":
        """Fix pi, raise digits to the p^j-th power."""
        return LocalRingElem(self.ring, tuple(_frobj(d, j) for d in self.digits))

    def galois_apply(self, digit_power: int, pi_unit: "LocalRingElem | None") -> "LocalRingElem":
        """Apply the automorphism digits -> digits^{p^{digit_power}},
        pi -> pi_unit * pi (pi_unit None means pi fixed)."""
        ring = self.ring
        if pi_unit is None:
            return LocalRingElem(
                ring, tuple(_frobj(d, digit_power) for d in self.digits)
            )
        acc = ring.zero()
        pw = ring.one()
        shifted_pi = pi_unit * ring.pi()
        for d in self.digits:
            if not d.is_zero():
                td = ring.elem_from_digits([_frobj(d, digit_power)])
                acc = acc + td * pw
            pw = pw * shifted_pi
        return acc

    def __repr__(self) -> str:
        return f"LocalRingElem({[d for d in self.digits]})"


# ---------------------------------------------------------------------------
# twisted unit vectors

@dataclass(frozen=True)
class TwistedUnitVector:
    """Element (pi^{a_1} u_1, ..., pi^{a_r} u_r) of the p-completed Lambda_L
    at working precision; u_i are principal units, the twist matrix rho is
    the Frobenius image acting on this level."""

    ring: LocalRing
    rho: PadicMatrix
    vals: tuple[int, ...]
    units: tuple[LocalRingElem, ...]

    def __post_init__(self):
        if len(self.vals) != self.rho.rows or len(self.units) != self.rho.rows:
            raise ValueError("rank mismatch with twist matrix")
        for u in self.units:
            if not u.is_principal_unit():
                raise ValueError("unit parts must be principal units")
        for a in self.vals:
            if abs(a) > _VAL_BUDGET:
                raise ExponentOverflow(f"valuation {a} exceeds budget")

    @property
    def r(self) -> int:
        return self.rho.rows

    @classmethod
    def identity(cls, ring: LocalRing, rho: PadicMatrix) -> "TwistedUnitVector":
        one = ring.one()
        return cls(ring, rho, (0,) * rho.rows, tuple(one for _ in range(rho.rows)))

    def __mul__(self, other: "TwistedUnitVector") -> "TwistedUnitVector":
        if self.ring is not other.ring or self.rho != other.rho:
            raise ValueError("incompatible twisted vectors")
        return TwistedUnitVector(
            self.ring,
            self.rho,
            tuple(a + b for a, b in zip(self.vals, other.vals)),
            tuple(u * v for u, v in zip(self.units, other.units)),
        )

    def inverse(self) -> "TwistedUnitVector":
        return TwistedUnitVector(
            self.ring,
            self.rho,
            tuple(-a for a in self.vals),
            tuple(u.inverse() for u in self.units),
        )

    def matrix_power(self, M: PadicMatrix) -> "TwistedUnitVector":
        """Componentwise twisted power: result_i = prod_j x_j^{M_ij}."""
        vals = M.matvec_int(self.vals)
        units = []
        for i in range(M.rows):
            acc = self.ring.one()
            for j in range(M.cols):
                e = M.entries[i][j]
                if e:
                    acc = acc * self.units[j] ** e
            units.append(acc)
        return TwistedUnitVector(self.ring, self.rho, tuple(vals), tuple(units))

    def frobenius_semilinear(self) -> "TwistedUnitVector":
        """(F_L . x)_i = prod_j sigma(pi^{a_j} u_j)^{rho_ij}, sigma the naive
        Frobenius (fixes pi, digits to the q-th power)."""
        sig = TwistedUnitVector(
            self.ring,
            self.rho,
            self.vals,
            tuple(u.frobenius() for u in self.units),
        )
        return sig.matrix_power(self.rho)

    def congruent(self, other: "TwistedUnitVector", n: int) -> bool:
        """Equality in Lambda_L / p^n at the ring's pi-precision: valuation
        vectors mod p^n, unit parts digit-exact."""
        mod = self.ring.p**n
        if any((a - b) % mod for a, b in zip(self.vals, other.vals)):
            return False
        return self.units == other.units

    def __repr__(self) -> str:
        return f"TwistedUnitVector(vals={self.vals})"


def twisted_frobenius(x: TwistedUnitVector, rho: PadicMatrix | None = None,
                      k0: int | None = None) -> TwistedUnitVector:
    """Twisted Frobenius action on Lambda_L; rho/k0 default to the data the
    vector and its ring carry."""
    rho = x.rho if rho is None else rho
    k0 = x.ring.k0 if k0 is None else k0
    sig = TwistedUnitVector(
        x.ring, rho, x.vals, tuple(u.frobenius_exp(k0) for u in x.units)
    )
    return sig.matrix_power(rho)
