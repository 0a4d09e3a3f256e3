"""Fixed-precision arithmetic over Z/p^n: scalars, matrices, Smith normal form.

Everything here models Z_p through its finite quotient Z/p^n.  Residues are
canonical representatives in [0, p^n).  An elementary divisor whose valuation
reaches the working precision n is recorded as n and read as "zero at working
precision"; callers that need certainty pass certify=True and get
PrecisionInsufficient instead of a silent cap.

All values are immutable after construction; operations are pure functions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import NotInvertible, PrecisionInsufficient


def val_p(x: int, p: int, cap: int) -> int:
    """p-adic valuation of the residue x, capped at `cap` (v(0) = cap)."""
    if x % p**cap == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


@dataclass(frozen=True)
class PadicInt:
    """Element of Z/p^n with canonical residue in [0, p^n)."""

    p: int
    n: int
    residue: int

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        object.__setattr__(self, "residue", self.residue % self.p**self.n)

    def _check(self, other: "PadicInt") -> None:
        if (self.p, self.n) != (other.p, other.n):
            raise ValueError("operands must share (p, n)")

    @property
    def modulus(self) -> int:
        return self.p**self.n

    def __add__(self, other: "PadicInt") -> "PadicInt":
        self._check(other)
        return PadicInt(self.p, self.n, self.residue + other.residue)

    def __sub__(self, other: "PadicInt") -> "PadicInt":
        self._check(other)
        return PadicInt(self.p, self.n, self.residue - other.residue)

    def __mul__(self, other: "PadicInt") -> "PadicInt":
        self._check(other)
        return PadicInt(self.p, self.n, self.residue * other.residue)

    def __neg__(self) -> "PadicInt":
        return PadicInt(self.p, self.n, -self.residue)

    def valuation(self) -> int:
        return val_p(self.residue, self.p, self.n)

    def is_unit(self) -> bool:
        return self.residue % self.p != 0

    def inverse(self) -> "PadicInt":
        if not self.is_unit():
            raise NotInvertible(f"{self.residue} is divisible by {self.p}")
        return PadicInt(self.p, self.n, pow(self.residue, -1, self.modulus))

    def __repr__(self) -> str:
        return f"PadicInt({self.residue} mod {self.p}^{self.n})"


class PadicMatrix:
    """Immutable r x c matrix over Z/p^n."""

    __slots__ = ("p", "n", "rows", "cols", "entries")

    def __init__(self, p: int, n: int, entries: Iterable[Iterable[int]]):
        self.p = p
        self.n = n
        mod = p**n
        rows = tuple(tuple(int(x) % mod for x in row) for row in entries)
        if not rows or not rows[0]:
            raise ValueError("matrix must have at least one row and column")
        width = len(rows[0])
        if any(len(row) != width for row in rows):
            raise ValueError("ragged rows")
        self.entries = rows
        self.rows = len(rows)
        self.cols = width

    @property
    def modulus(self) -> int:
        return self.p**self.n

    @classmethod
    def identity(cls, p: int, n: int, r: int) -> "PadicMatrix":
        return cls(p, n, [[1 if i == j else 0 for j in range(r)] for i in range(r)])

    @classmethod
    def zero(cls, p: int, n: int, r: int, c: int | None = None) -> "PadicMatrix":
        c = r if c is None else c
        return cls(p, n, [[0] * c for _ in range(r)])

    def _check(self, other: "PadicMatrix") -> None:
        if (self.p, self.n) != (other.p, other.n):
            raise ValueError("operands must share (p, n)")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PadicMatrix)
            and (self.p, self.n) == (other.p, other.n)
            and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return hash((self.p, self.n, self.entries))

    def __add__(self, other: "PadicMatrix") -> "PadicMatrix":
        self._check(other)
        return PadicMatrix(
            self.p,
            self.n,
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ],
        )

    def __sub__(self, other: "PadicMatrix") -> "PadicMatrix":
        self._check(other)
        return PadicMatrix(
            self.p,
            self.n,
            [
                [a - b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ],
        )

    def __matmul__(self, other: "PadicMatrix") -> "PadicMatrix":
        self._check(other)
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        mod = self.modulus
        bt = list(zip(*other.entries))
        return PadicMatrix(
            self.p,
            self.n,
            [
                [sum(a * b for a, b in zip(row, col)) % mod for col in bt]
                for row in self.entries
            ],
        )

    def scale(self, c: int) -> "PadicMatrix":
        return PadicMatrix(
            self.p, self.n, [[c * x for x in row] for row in self.entries]
        )

    def transpose(self) -> "PadicMatrix":
        return PadicMatrix(self.p, self.n, zip(*self.entries))

    def matvec(self, v: Sequence[int]) -> tuple[int, ...]:
        mod = self.modulus
        return tuple(sum(a * b for a, b in zip(row, v)) % mod for row in self.entries)

    def matvec_int(self, v: Sequence[int]) -> tuple[int, ...]:
        """Integer matrix-vector product using canonical residue lifts (no
        reduction); used where valuation vectors live in Z, not Z/p^n."""
        return tuple(sum(a * b for a, b in zip(row, v)) for row in self.entries)

    def __pow__(self, k: int) -> "PadicMatrix":
        if self.rows != self.cols:
            raise ValueError("power of non-square matrix")
        if k < 0:
            return matrix_inverse(self) ** (-k)
        result = PadicMatrix.identity(self.p, self.n, self.rows)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def is_square(self) -> bool:
        return self.rows == self.cols

    def det(self) -> int:
        """Determinant mod p^n by fraction-free expansion (desk-scale sizes)."""
        if not self.is_square():
            raise ValueError("determinant of non-square matrix")
        m = [list(row) for row in self.entries]
        return _det_int(m) % self.modulus

    def reduce(self, n2: int) -> "PadicMatrix":
        if n2 > self.n:
            raise ValueError("cannot increase precision")
        return PadicMatrix(self.p, n2, self.entries)

    def lift(self, n2: int) -> "PadicMatrix":
        """Canonical-representative lift to precision n2 >= n."""
        if n2 < self.n:
            raise ValueError("use reduce() to lower precision")
        return PadicMatrix(self.p, n2, self.entries)

    def to_json(self) -> dict:
        return {"p": self.p, "n": self.n, "rows": [list(r) for r in self.entries]}

    @classmethod
    def from_json(cls, obj: dict | str) -> "PadicMatrix":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj["p"], obj["n"], obj["rows"])

    def __repr__(self) -> str:
        return f"PadicMatrix(p={self.p}, n={self.n}, {list(self.entries)})"


def _det_int(m: list[list[int]]) -> int:
    size = len(m)
    if size == 1:
        return m[0][0]
    total = 0
    for j in range(size):
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = m[0][j] * _det_int(minor)
        total += -term if j % 2 else term
    return total


@dataclass(frozen=True)
class SmithForm:
    """Diagonalization P*M*Q = diag(p^{e_i} * unit) over Z/p^n.

    exponents are nondecreasing, each in [0, n]; value n means the divisor is
    zero at working precision.
    """

    exponents: tuple[int, ...]
    left: PadicMatrix
    right: PadicMatrix

    def diagonal(self, M: PadicMatrix) -> PadicMatrix:
        return self.left @ M @ self.right


@dataclass(frozen=True)
class ModuleStructure:
    """Finitely generated Z/p^n-module shape: free part + p-power torsion."""

    free_rank: int
    torsion_exponents: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "free_rank": self.free_rank,
            "torsion": list(self.torsion_exponents),
        }


def smith_normal_form(M: PadicMatrix) -> SmithForm:
    """Smith normal form over the local ring Z/p^n.

    Pivot choice: entry of minimal p-adic valuation, ties broken row-major,
    which keeps the exponent sequence nondecreasing and the transforms
    reproducible bit-for-bit.
    """
    p, n = M.p, M.n
    mod = M.modulus
    a = [list(row) for row in M.entries]
    r, c = M.rows, M.cols
    P = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    Q = [[1 if i == j else 0 for j in range(c)] for i in range(c)]
    exponents: list[int] = []
    for k in range(min(r, c)):
        piv_v, piv = n, None
        for i in range(k, r):
            for j in range(k, c):
                v = val_p(a[i][j], p, n)
                if v < piv_v:
                    piv_v, piv = v, (i, j)
                    if v == 0:
                        break
            if piv_v == 0:
                break
        if piv is None:
            exponents.extend([n] * (min(r, c) - k))
            break
        pi, pj = piv
        if pi != k:
            a[k], a[pi] = a[pi], a[k]
            P[k], P[pi] = P[pi], P[k]
        if pj != k:
            for row in a:
                row[k], row[pj] = row[pj], row[k]
            for row in Q:
                row[k], row[pj] = row[pj], row[k]
        e = piv_v
        unit = a[k][k] // p**e
        unit_inv = pow(unit, -1, mod)
        for i in range(k + 1, r):
            if a[i][k]:
                factor = (a[i][k] // p**e) * unit_inv % mod
                for j in range(k, c):
                    a[i][j] = (a[i][j] - factor * a[k][j]) % mod
                for j in range(r):
                    P[i][j] = (P[i][j] - factor * P[k][j]) % mod
        for j in range(k + 1, c):
            if a[k][j]:
                factor = (a[k][j] // p**e) * unit_inv % mod
                for i in range(k, r):
                    a[i][j] = (a[i][j] - factor * a[i][k]) % mod
                for i in range(c):
                    Q[i][j] = (Q[i][j] - factor * Q[i][k]) % mod
        exponents.append(e)
    return SmithForm(
        tuple(exponents), PadicMatrix(p, n, P), PadicMatrix(p, n, Q)
    )


def kernel_cokernel(
    M: PadicMatrix, certify: bool = False
) -> tuple[ModuleStructure, ModuleStructure]:
    """Kernel and cokernel structure of a square matrix over Z/p^n, read as a
    Z_p-matrix at working precision.

    Exponents equal to n are taken as genuinely zero divisors (free rank);
    certify=True refuses that reading and raises PrecisionInsufficient.
    """
    if not M.is_square():
        raise ValueError("kernel_cokernel needs a square matrix")
    snf = smith_normal_form(M)
    n = M.n
    if certify and any(e == n for e in snf.exponents):
        raise PrecisionInsufficient(
            f"elementary divisor at precision cap n={n}; raise precision"
        )
    free = sum(1 for e in snf.exponents if e == n)
    torsion = tuple(e for e in snf.exponents if 0 < e < n)
    coker = ModuleStructure(free, torsion)
    ker = ModuleStructure(free, ())
    return ker, coker


def matrix_inverse(M: PadicMatrix) -> PadicMatrix:
    """Inverse mod p^n via Gaussian elimination with unit pivots."""
    if not M.is_square():
        raise ValueError("inverse of non-square matrix")
    p, mod, r = M.p, M.modulus, M.rows
    a = [list(row) + [1 if i == j else 0 for j in range(r)] for i, row in enumerate(M.entries)]
    for k in range(r):
        piv = next((i for i in range(k, r) if a[i][k] % p != 0), None)
        if piv is None:
            raise NotInvertible("determinant divisible by p")
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
        inv = pow(a[k][k], -1, mod)
        a[k] = [x * inv % mod for x in a[k]]
        for i in range(r):
            if i != k and a[i][k]:
                f = a[i][k]
                a[i] = [(x - f * y) % mod for x, y in zip(a[i], a[k])]
    return PadicMatrix(M.p, M.n, [row[r:] for row in a])


def solve_linear(M: PadicMatrix, v: Sequence[int]) -> tuple[int, ...] | None:
    """One solution w of M w = v mod p^n via Smith coordinates, or None.

    With PMQ = D diagonal: w = Q D^{-1} P v, where dividing coordinate i by
    p^{e_i}*unit requires p^{e_i} | (Pv)_i exactly.
    """
    p, n, mod = M.p, M.n, M.modulus
    snf = smith_normal_form(M)
    pv = snf.left.matvec(v)
    D = snf.diagonal(M)
    y = []
    for i in range(min(M.rows, M.cols)):
        e = snf.exponents[i]
        ti = pv[i]
        if e >= n:
            if ti % mod:
                return None
            y.append(0)
            continue
        if ti % p**e:
            return None
        unit = D.entries[i][i] // p**e
        y.append((ti // p**e) * pow(unit, -1, mod) % mod)
    for i in range(min(M.rows, M.cols), M.rows):
        if pv[i] % mod:
            return None
    y += [0] * (M.cols - len(y))
    return snf.right.matvec(y)


def image_generators(M: PadicMatrix) -> list[tuple[int, ...]]:
    """Generators of im(M) mod p^n: p^{e_i} * (P^{-1} e_i) for finite e_i."""
    snf = smith_normal_form(M)
    pinv = matrix_inverse(snf.left)
    gens = []
    for i, e in enumerate(snf.exponents):
        if e < M.n:
            col = tuple(pinv.entries[j][i] * M.p**e % M.modulus for j in range(M.rows))
            gens.append(col)
    return gens


def kernel_generators(M: PadicMatrix) -> list[tuple[int, ...]]:
    """Generators of ker(M) mod p^n: columns Q e_i scaled by p^{n-e_i}."""
    snf = smith_normal_form(M)
    gens = []
    for i, e in enumerate(snf.exponents):
        if e == 0:
            continue
        scale = M.p ** (M.n - e)
        col = tuple(snf.right.entries[j][i] * scale % M.modulus for j in range(M.cols))
        gens.append(col)
    return gens
