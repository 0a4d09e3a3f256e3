"""Artin-Schreier tower Galois rings GR(p^nu, m_t * p^L), numpy-backed.

The rings the matrix Lang-equation solver needs can have residue degree in
the thousands (the degree is the order of the twist matrix at the working
precision), far beyond what a dense one-variable representation with a
searched irreducible modulus can handle.  This engine builds the residue
degree as a tower

    base = GR(p^nu, m_t),   m_t prime to p,
    R_j  = R_{j-1}[t_j] / (t_j^p - t_j - c_j),
    c_1 = 1,  c_{j+1} = t_j^{p-1} c_j   (c_j is the monomial prod_{i<j} t_i^{p-1})

whose constants have absolute trace +-m_t != 0 mod p, so every layer is a
genuine unramified extension.  Elements are int64 arrays of shape
(p,)*L + (m_t,); axis L-j carries the exponent of t_j and the last axis the
base-field coordinate.  Multiplication is one outer product plus axis merging
and relation folding: ~degree^2 fused multiply-adds, all inside numpy.

The Frobenius lift is computed by substitution: phi(t_j) is the Hensel root
of X^p - X - phi(c_j) near t_j^p, precomputed per level.  The module also
provides the residue-level solver for (phi - 1) y = c (the workhorse behind
the constructive lifting steps) and the Artin-Schreier element x0 with
phi(x0) = x0 + 1, exact to one p-digit less than the number of layers.
"""
from __future__ import annotations

from math import comb

import numpy as np

from .errors import NotInvertible
from .residue_tower import FieldId, FqElem, additive_h90, ensure_field
from .witt_rings import galois_ring

_INT64_SAFE = 1 << 62

_TOWER_CACHE: dict[tuple[int, int, int, int], "TowerRing"] = {}


def tower_ring(p: int, nu: int, m_t: int, levels: int) -> "TowerRing":
    """Cached constructor: identical parameters share one ring object, so
    elements produced by independent solver calls interoperate."""
    key = (p, nu, m_t, levels)
    got = _TOWER_CACHE.get(key)
    if got is None:
        got = TowerRing(p, nu, m_t, levels)
        _TOWER_CACHE[key] = got
    return got


class TowerRing:
    """GR(p^nu, m_t * p^levels) with explicit tower structure."""

    def __init__(self, p: int, nu: int, m_t: int, levels: int):
        if m_t % p == 0:
            raise ValueError("tame degree must be prime to p")
        self.p = p
        self.nu = nu
        self.mod = p**nu
        self.m_t = m_t
        self.levels = levels
        self.degree = m_t * p**levels
        if self.degree * (self.mod - 1) ** 2 >= _INT64_SAFE:
            raise ValueError("modulus too large for exact int64 arithmetic")
        self.shape = (p,) * levels + (m_t,)
        self.base_field: FieldId = ensure_field(p, m_t)
        self.base_gr = galois_ring(p, nu, m_t)
        self._base_red = self._base_reduction_rows()
        self._phi_t: list[np.ndarray] | None = None  # phi(t_j) as level-j arrays
        self._phi_base: np.ndarray | None = None
        self._res_phi_base: np.ndarray | None = None

    # -- shapes --------------------------------------------------------------

    def sub_shape(self, level: int) -> tuple[int, ...]:
        return (self.p,) * level + (self.m_t,)

    def _sub_zero(self, level: int) -> np.ndarray:
        return np.zeros(self.sub_shape(level), dtype=np.int64)

    def _sub_one(self, level: int) -> np.ndarray:
        a = self._sub_zero(level)
        a[(0,) * (level + 1)] = 1
        return a

    def _embed_sub(self, arr: np.ndarray, level: int) -> np.ndarray:
        """View a level-l array inside a level-`level` array (l <= level)."""
        l = arr.ndim - 1
        if l == level:
            return arr
        out = self._sub_zero(level)
        out[(0,) * (level - l)] = arr
        return out

    # -- construction helpers ------------------------------------------------

    def _base_reduction_rows(self) -> np.ndarray:
        rows = np.zeros((max(self.m_t - 1, 0), self.m_t), dtype=np.int64)
        poly = list(self.base_field.poly)  # monic, length m_t + 1
        cur = [(-poly[i]) % self.mod for i in range(self.m_t)]  # x^{m_t}
        for j in range(self.m_t - 1):
            rows[j] = cur
            top = cur[-1]
            cur = [0] + cur[:-1]
            if top:
                for i in range(self.m_t):
                    cur[i] = (cur[i] - top * poly[i]) % self.mod
        return rows

    def zero(self) -> "TowerElem":
        return TowerElem(self, self._sub_zero(self.levels))

    def one(self) -> "TowerElem":
        return TowerElem(self, self._sub_one(self.levels))

    def from_int(self, c: int) -> "TowerElem":
        a = self._sub_zero(self.levels)
        a[(0,) * (self.levels + 1)] = c % self.mod
        return TowerElem(self, a)

    def gen(self, level: int) -> "TowerElem":
        """Generator t_level (1-based), or the base-field generator (0)."""
        a = self._sub_zero(self.levels)
        idx = [0] * (self.levels + 1)
        if level == 0:
            if self.m_t == 1:
                raise ValueError("trivial base has no generator")
            idx[-1] = 1
        else:
            idx[self.levels - level] = 1
        a[tuple(idx)] = 1
        return TowerElem(self, a)

    def from_base(self, x) -> "TowerElem":
        """Embed a base-ring element (GaloisRingElem) or base-field element
        (FqElem) along the base axis."""
        a = self._sub_zero(self.levels)
        a[(0,) * self.levels] = np.array(
            [int(c) % self.mod for c in x.coeffs], dtype=np.int64
        )
        return TowerElem(self, a)

    def random(self, rng) -> "TowerElem":
        flat = [rng.randrange(self.mod) for _ in range(self.degree)]
        return TowerElem(self, np.array(flat, dtype=np.int64).reshape(self.shape))

    def _c_monomial(self, level: int, mod: int) -> np.ndarray:
        """c_level = prod_{i<level} t_i^{p-1} as a level-(level-1) array."""
        a = self._sub_zero(level - 1)
        a[tuple([self.p - 1] * (level - 1) + [0])] = 1 % mod
        return a

    # -- relation folding ----------------------------------------------------

    def _fold_base_axis(self, arr: np.ndarray, mod: int) -> np.ndarray:
        size = arr.shape[-1]
        if size == self.m_t:
            return arr % mod
        out = np.array(arr[..., : self.m_t])
        red = self._base_red % mod
        for j in range(size - self.m_t):
            out += arr[..., self.m_t + j, None] * red[j]
        return out % mod

    def _fold_as_axis(self, arr: np.ndarray, axis: int, level: int, mod: int) -> np.ndarray:
        """Fold an AS axis down to size p using t^p = t + c_level.  All axes
        right of `axis` must already have their reduced sizes."""
        p = self.p
        arr = np.moveaxis(arr, axis, 0)
        size = arr.shape[0]
        work = np.array(arr)
        for idx in range(size - 1, p - 1, -1):
            top = np.array(work[idx])
            if not top.any():
                continue
            j = idx - p
            work[j + 1] = (work[j + 1] + top) % mod
            work[j] = (work[j] + self._mono_mul_lower(top, level, mod)) % mod
            work[idx] = 0
        return np.moveaxis(work[:p], 0, axis)

    def _mono_mul_lower(self, sub: np.ndarray, level: int, mod: int) -> np.ndarray:
        """Multiply by c_level; `sub` has axes [t_{level-1}, ..., t_1, base]
        (plus possibly extra leading axes, which are carried along)."""
        p = self.p
        out = sub
        extra = out.ndim - level  # leading axes that are alien to c_level
        for i in range(1, level):
            ax = extra + (level - 1) - i  # axis of t_i
            shifted = np.zeros(
                out.shape[:ax] + (2 * p - 1,) + out.shape[ax + 1 :], dtype=np.int64
            )
            sl = [slice(None)] * out.ndim
            sl[ax] = slice(p - 1, 2 * p - 1)
            shifted[tuple(sl)] = out
            out = self._fold_as_axis(shifted, ax, i, mod)
        return out % mod

    # -- core arithmetic -----------------------------------------------------

    def _mul_arrays(self, a: np.ndarray, b: np.ndarray, mod: int) -> np.ndarray:
        """Product of two arrays of the same sub-shape (any level).

        The merge loop skips modular reduction: the final accumulated values
        are bounded by degree * (mod-1)^2, which the constructor guaranteed
        fits int64, so one reduction at the end suffices.
        """
        k = a.ndim
        C = np.multiply.outer(a, b)
        for i in range(k):
            # layout: [M_{i-1},...,M_0, A_i..A_{k-1}, B_i..B_{k-1}]
            C = np.moveaxis(C, (i, k), (0, 1))
            d_a, d_b = C.shape[0], C.shape[1]
            out = np.zeros((d_a + d_b - 1,) + C.shape[2:], dtype=np.int64)
            for s in range(d_a):
                out[s : s + d_b] += C[s]
            C = out
        C %= mod
        C = np.transpose(C, axes=tuple(range(k - 1, -1, -1)))
        C = self._fold_base_axis(C, mod)
        L_sub = k - 1
        for lvl in range(1, L_sub + 1):
            ax = L_sub - lvl
            C = self._fold_as_axis(C, ax, lvl, mod)
        return C % mod

    # -- Frobenius lift ------------------------------------------------------

    def _ensure_phi(self) -> None:
        if self._phi_t is not None:
            return
        gr = self.base_gr
        cols = []
        for i in range(self.m_t):
            e = gr.elem([0] * i + [1])
            cols.append(list(e.frobenius().coeffs))
        self._phi_base = np.array(cols, dtype=np.int64).T % self.mod
        phi_t: list[np.ndarray] = [np.zeros(0)]  # index 0 unused
        for lvl in range(1, self.levels + 1):
            c = self._embed_sub(self._c_monomial(lvl, self.mod), lvl)
            self._phi_t = phi_t  # partial data suffices: c uses levels < lvl
            phi_c = self._phi_sub(c, lvl)
            t = self._sub_zero(lvl)
            t[tuple([1] + [0] * lvl)] = 1  # t_lvl carries top-axis index 1
            y = self._pow_sub(t, self.p, lvl)
            for _ in range(max(2, self.nu.bit_length() + 2)):
                ypm1 = self._pow_sub(y, self.p - 1, lvl)
                f = (self._mul_arrays(ypm1, y, self.mod) - y - phi_c) % self.mod
                if not f.any():
                    break
                # f'(y) = p y^{p-1} - 1 = -(1 - w); inverse = -sum_k w^k
                w = ypm1 * self.p % self.mod
                inv = self._sub_zero(lvl)
                term = self._sub_one(lvl)
                for _ in range(self.nu):
                    inv = (inv + term) % self.mod
                    if not term.any():
                        break
                    term = self._mul_arrays(term, w, self.mod)
                y = (y + self._mul_arrays(f, inv, self.mod)) % self.mod
            f = (self._pow_sub(y, self.p, lvl) - y - phi_c) % self.mod
            assert not f.any(), "Hensel iteration for phi(t) did not converge"
            phi_t.append(y)
        self._phi_t = phi_t

    def _pow_sub(self, arr: np.ndarray, e: int, level: int) -> np.ndarray:
        result = self._sub_one(level)
        base = arr
        while e:
            if e & 1:
                result = self._mul_arrays(result, base, self.mod)
            base = self._mul_arrays(base, base, self.mod)
            e >>= 1
        return result

    def _phi_sub(self, arr: np.ndarray, level: int) -> np.ndarray:
        """phi on a level-`level` array (phi images available below)."""
        if level == 0:
            return (arr @ self._phi_base.T) % self.mod
        p = self.p
        nz = [i for i in range(p) if arr[i].any()]
        out = self._sub_zero(level)
        if not nz:
            return out
        img = None
        if any(i > 0 for i in nz):
            img = self._phi_t[level]
        powers = {0: self._sub_one(level)}
        if img is not None:
            for i in range(1, max(nz) + 1):
                powers[i] = self._mul_arrays(powers[i - 1], img, self.mod)
        for i in nz:
            coeff = self._embed_sub(self._phi_sub(arr[i], level - 1), level)
            out = (out + self._mul_arrays(coeff, powers[i], self.mod)) % self.mod
        return out

    def phi(self, x: "TowerElem", times: int = 1) -> "TowerElem":
        self._ensure_phi()
        times %= self.degree
        out = x.arr
        for _ in range(times):
            out = self._phi_sub(out, self.levels)
        return TowerElem(self, out)

    # -- residue level -------------------------------------------------------

    def res_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self._mul_arrays(a % self.p, b % self.p, self.p)

    def lift_residue(self, arr: np.ndarray) -> "TowerElem":
        """Naive (coordinatewise) lift of a residue array."""
        return TowerElem(self, arr.astype(np.int64) % self.mod)

    def _res_phi_base_mat(self) -> np.ndarray:
        if self._res_phi_base is None:
            cols = []
            fid = self.base_field
            for i in range(self.m_t):
                e = FqElem(fid, tuple(1 if j == i else 0 for j in range(self.m_t)))
                cols.append(list((e**self.p).coeffs))
            self._res_phi_base = np.array(cols, dtype=np.int64).T % self.p
        return self._res_phi_base

    def res_phi(self, arr: np.ndarray, level: int | None = None) -> np.ndarray:
        """Residue Frobenius x -> x^p via t_l -> t_l + c_l (exact mod p)."""
        p = self.p
        level = arr.ndim - 1 if level is None else level
        if level == 0:
            return (arr @ self._res_phi_base_mat().T) % p
        out = np.zeros(arr.shape, dtype=np.int64)
        for i in range(p):
            if not arr[i].any():
                continue
            coeff = self.res_phi(arr[i], level - 1)
            for j in range(i + 1):
                scalar = comb(i, j) % p
                if scalar == 0:
                    continue
                term = coeff * scalar % p
                e = i - j
                if e:
                    term = self._res_c_pow_mul(term, level, e)
                out[j] = (out[j] + term) % p
        return out

    def _res_c_pow_mul(self, sub: np.ndarray, level: int, e: int) -> np.ndarray:
        """Multiply a level-(level-1) residue array by c_level^e."""
        out = sub
        for _ in range(e):
            out = self._mono_mul_lower(out, level, self.p)
        return out

    def res_trace_to_prime(self, arr: np.ndarray) -> int:
        """Absolute trace to F_p (test-scale helper: O(degree) res_phi)."""
        acc = np.zeros(arr.shape, dtype=np.int64)
        cur = arr % self.p
        for _ in range(self.degree):
            acc = (acc + cur) % self.p
            cur = self.res_phi(cur)
        flat = acc.reshape(-1)
        assert not flat[1:].any(), "trace did not land in F_p"
        return int(flat[0])

    def res_solve_frob_minus_one(self, c: np.ndarray) -> np.ndarray:
        """Solve (phi - 1) y = c over the residue field (trace of c must be
        zero; the split algorithm certifies that as a zero gamma-defect)."""
        y, lam = self._split(c % self.p, self.levels)
        if lam % self.p:
            raise ValueError("target has nonzero absolute trace")
        return y

    def _split(self, c: np.ndarray, level: int) -> tuple[np.ndarray, int]:
        """(v, lambda) with (phi - 1) v = c - lambda * gamma_level, where
        gamma_level = prod_{i<=level} t_i^{p-1} (gamma_0 = 1) has nonzero
        absolute trace.  Exact residue-field algebra, no ladders."""
        p = self.p
        if level == 0:
            fid = self.base_field
            elem = FqElem(fid, tuple(int(x) for x in c))
            tr = elem
            cur = elem
            for _ in range(self.m_t - 1):
                cur = cur**p
                tr = tr + cur
            lam = int(tr.coeffs[0]) * pow(self.m_t, -1, p) % p
            target = elem - fid.one().scale(lam)
            v = additive_h90(target, ensure_field(p, 1)) if self.m_t > 1 else fid.zero()
            if self.m_t == 1 and not target.is_zero():
                raise ValueError("unsolvable prime-field equation")
            return np.array(v.coeffs, dtype=np.int64), lam
        cj = [np.array(c[j]) % p for j in range(p)]
        v: list[np.ndarray | None] = [None] * p
        lam_out = 0
        for j in range(p - 1, -1, -1):
            vj, lam = self._split(cj[j], level - 1)
            v[j] = vj
            if j == p - 1:
                lam_out = lam
            elif lam:
                # leftover lam * c_level * t^j; cancel with mu * t^{j+1}
                mu = lam * pow(j + 1, -1, p) % p
                one_sub = self._sub_one(level - 1) % p
                v[j + 1] = (v[j + 1] + mu * one_sub) % p
                for i in range(j):
                    scalar = mu * comb(j + 1, i) % p
                    if scalar:
                        term = self._res_c_pow_mul(
                            one_sub * scalar % p, level, j + 1 - i
                        )
                        cj[i] = (cj[i] - term) % p
            if j:
                # contributions C(j,i) c^{j-i} phi(v_j) to the lower slots
                pv = self.res_phi(v[j], level - 1)
                for i in range(j):
                    scalar = comb(j, i) % p
                    if scalar:
                        term = self._res_c_pow_mul(pv * scalar % p, level, j - i)
                        cj[i] = (cj[i] - term) % p
        return np.stack([vv % p for vv in v]), lam_out

    # -- special elements ----------------------------------------------------

    def artin_schreier_element(self, prec: int) -> "TowerElem":
        """x0 with phi(x0) = x0 + 1 mod p^prec (requires prec <= levels)."""
        if prec > self.levels:
            raise ValueError("not enough tower layers for the trace condition")
        if self.levels < 1:
            raise ValueError("tower has no Artin-Schreier layer")
        self._ensure_phi()
        x = self.gen(1)
        one = self.one()
        for j in range(1, prec):
            defect = (self.phi(x) - x - one).arr
            assert not (defect % self.p**j).any(), "defect valuation too small"
            e = (defect // self.p**j) % self.p
            y = self.res_solve_frob_minus_one((-e) % self.p)
            x = x + TowerElem(self, (y.astype(np.int64) * self.p**j) % self.mod)
        return x

    def teichmuller_base(self, x: FqElem) -> "TowerElem":
        """Teichmueller lift of a base-field element, embedded in the tower."""
        return self.from_base(self.base_gr.teichmuller(x))

    def __repr__(self) -> str:
        return f"TowerRing(GR({self.p}^{self.nu}, {self.m_t}*{self.p}^{self.levels}))"


class TowerElem:
    """Immutable-by-convention element of a TowerRing."""

    __slots__ = ("ring", "arr")

    def __init__(self, ring: TowerRing, arr: np.ndarray):
        self.ring = ring
        self.arr = arr % ring.mod

    def _check(self, other: "TowerElem") -> None:
        if self.ring is not other.ring:
            raise ValueError("elements of different tower rings")

    def __add__(self, other):
        self._check(other)
        return TowerElem(self.ring, self.arr + other.arr)

    def __sub__(self, other):
        self._check(other)
        return TowerElem(self.ring, self.arr - other.arr)

    def __neg__(self):
        return TowerElem(self.ring, -self.arr)

    def __mul__(self, other):
        self._check(other)
        return TowerElem(
            self.ring, self.ring._mul_arrays(self.arr, other.arr, self.ring.mod)
        )

    def scale(self, c: int):
        return TowerElem(self.ring, self.arr * (c % self.ring.mod))

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

    def __eq__(self, other):
        return (
            isinstance(other, TowerElem)
            and self.ring is other.ring
            and np.array_equal(self.arr, other.arr)
        )

    def __hash__(self):
        return hash((id(self.ring), self.arr.tobytes()))

    def is_zero(self) -> bool:
        return not self.arr.any()

    def is_unit(self) -> bool:
        return bool((self.arr % self.ring.p).any())

    def congruent(self, other: "TowerElem", j: int) -> bool:
        return not ((self.arr - other.arr) % self.ring.p ** min(j, self.ring.nu)).any()

    def p_valuation(self) -> int:
        if self.is_zero():
            return self.ring.nu
        v = 0
        arr = self.arr
        while not (arr % self.ring.p).any():
            arr = arr // self.ring.p
            v += 1
        return v

    def divide_exact_p(self) -> "TowerElem":
        if (self.arr % self.ring.p).any():
            raise ValueError("not divisible by p")
        return TowerElem(self.ring, self.arr // self.ring.p)

    def residue(self) -> np.ndarray:
        return self.arr % self.ring.p

    def frobenius(self, j: int = 1) -> "TowerElem":
        return self.ring.phi(self, j)

    def inverse(self) -> "TowerElem":
        ring = self.ring
        if not self.is_unit():
            raise NotInvertible("reduction mod p is zero")
        seed = _res_inverse(ring, self.arr % ring.p, ring.levels)
        y = TowerElem(ring, seed)
        two = ring.from_int(2)
        steps = max(1, (ring.nu - 1).bit_length() + 1)
        for _ in range(steps):
            y = y * (two - self * y)
        return y

    def __repr__(self):
        return f"TowerElem({self.ring!r})"


class TowerLocalRing:
    """Unramified (e = 1, pi = p) local-ring view of a TowerRing, presenting
    the protocol TwistedUnitVector expects.  Used where the residue field
    must be free to grow through Artin-Schreier layers (the twisted-unit
    solver at full pi-precision); frobenius_exponent is fixed to 1 here, so
    the naive Frobenius is the absolute lift."""

    def __init__(self, p: int, m: int, levels: int = 0):
        self.p = p
        self.m = m
        self.e = 1
        self.k0 = 1
        self.tower = tower_ring(p, m, 1, levels)

    @property
    def levels(self) -> int:
        return self.tower.levels

    def one(self) -> "TowerUnit":
        return TowerUnit(self, self.tower.one())

    def zero(self) -> "TowerUnit":
        return TowerUnit(self, self.tower.zero())

    def extended(self, extra_levels: int = 1) -> "TowerLocalRing":
        return TowerLocalRing(self.p, self.m, self.tower.levels + extra_levels)

    def move_up(self, x: "TowerUnit", target: "TowerLocalRing") -> "TowerUnit":
        arr = target.tower._embed_sub(x.elem.arr, target.tower.levels)
        return TowerUnit(target, TowerElem(target.tower, arr))

    def __repr__(self) -> str:
        return f"TowerLocalRing(p={self.p}, m={self.m}, levels={self.tower.levels})"


class TowerUnit:
    """Unit of a TowerLocalRing (principal units in the solver's usage)."""

    __slots__ = ("ring", "elem")

    def __init__(self, ring: TowerLocalRing, elem: TowerElem):
        self.ring = ring
        self.elem = elem

    def __mul__(self, other: "TowerUnit") -> "TowerUnit":
        return TowerUnit(self.ring, self.elem * other.elem)

    def __pow__(self, e: int) -> "TowerUnit":
        if e < 0:
            return self.inverse() ** (-e)
        return TowerUnit(self.ring, self.elem**e)

    def __eq__(self, other) -> bool:
        return isinstance(other, TowerUnit) and self.elem == other.elem

    def __hash__(self):
        return hash(self.elem)

    def inverse(self) -> "TowerUnit":
        one = self.ring.tower.one()
        delta = one - self.elem  # valuation >= 1 for principal units
        if delta.is_zero():
            return TowerUnit(self.ring, one)
        if not (delta.arr % self.ring.p).any():
            # geometric series 1/(1 - delta) = sum delta^k, terminates
            acc = one
            term = delta
            while not term.is_zero():
                acc = acc + term
                term = term * delta
            return TowerUnit(self.ring, acc)
        return TowerUnit(self.ring, self.elem.inverse())

    def is_principal_unit(self) -> bool:
        return (self.elem - self.ring.tower.one()).p_valuation() >= 1

    def is_unit(self) -> bool:
        return self.elem.is_unit()

    def frobenius_exp(self, j: int) -> "TowerUnit":
        return TowerUnit(self.ring, self.ring.tower.phi(self.elem, j))

    def frobenius(self, times: int = 1) -> "TowerUnit":
        return self.frobenius_exp(self.ring.k0 * times)

    def pi_valuation(self) -> int:
        return self.elem.p_valuation()

    def __repr__(self):
        return f"TowerUnit({self.ring!r})"


def _res_inverse(ring: TowerRing, arr: np.ndarray, level: int) -> np.ndarray:
    """Residue-field inverse by extended Euclid against the top AS relation,
    with coefficient inverses computed recursively."""
    p = ring.p
    if level == 0:
        fid = ring.base_field
        elem = FqElem(fid, tuple(int(x) for x in arr))
        return np.array(elem.inverse().coeffs, dtype=np.int64)

    sub_shape = ring.sub_shape(level - 1)

    def sub_zero():
        return np.zeros(sub_shape, dtype=np.int64)

    def smul(a, b):
        return ring._mul_arrays(a % p, b % p, p)

    def sinv(a):
        return _res_inverse(ring, a % p, level - 1)

    def trim(poly):
        while len(poly) > 1 and not poly[-1].any():
            poly.pop()
        return poly

    def poly_mul(a, b):
        out = [sub_zero() for _ in range(len(a) + len(b) - 1)]
        for i, x in enumerate(a):
            if x.any():
                for j, y in enumerate(b):
                    out[i + j] = (out[i + j] + smul(x, y)) % p
        return trim(out)

    def poly_divmod(a, b):
        a = [np.array(x) for x in a]
        binv = sinv(b[-1])
        q = [sub_zero() for _ in range(max(len(a) - len(b) + 1, 1))]
        while len(a) >= len(b) and any(x.any() for x in a):
            d = len(a) - len(b)
            cquo = smul(a[-1], binv)
            q[d] = cquo
            for i, y in enumerate(b):
                a[d + i] = (a[d + i] - smul(cquo, y)) % p
            a.pop()
            a = trim(a)
        return trim(q), trim(a)

    c = ring._c_monomial(level, p)
    one = ring._sub_one(level - 1)
    modpoly = (
        [(-c) % p, (p - 1) * one % p]
        + [sub_zero() for _ in range(p - 2)]
        + [one % p]
    )
    f = trim([np.array(arr[j]) % p for j in range(p)])

    r0, r1 = modpoly, f
    s0, s1 = [sub_zero()], [one % p]
    while any(x.any() for x in r1):
        q, r = poly_divmod(r0, r1)
        r0, r1 = r1, r
        qs1 = poly_mul(q, s1)
        new_s = []
        for i in range(max(len(s0), len(qs1))):
            a = s0[i] if i < len(s0) else sub_zero()
            b = qs1[i] if i < len(qs1) else sub_zero()
            new_s.append((a - b) % p)
        s0, s1 = s1, trim(new_s)
    if len(r0) > 1:
        raise NotInvertible("gcd with the tower relation is not constant")
    lead_inv = sinv(r0[0])
    out_poly = [smul(x, lead_inv) for x in s0]
    out = np.zeros(arr.shape, dtype=np.int64)
    for j, x in enumerate(out_poly[:p]):
        out[j] = x
    return out % p
