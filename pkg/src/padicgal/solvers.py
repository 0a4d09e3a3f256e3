"""The three constructive lifting procedures.

* solve_lang_matrix: epsilon with phi(eps^{-1}) eps = u^{-1} over the
  unramified ring whose residue degree is the order of u at the working
  precision.  The generic path follows the cohomological proof constructively
  (multiplicative Hilbert-90 averaging mod p, then additive Hilbert-90
  lifting level by level); three algebraic fast paths (u = 1, scalar u,
  unipotent u with (u-1)^2 = 0) cover the large-degree cases exactly, and
  every path ends in the same residual check.

* solve_semilinear: f(x_1) + A x^q + B x = 0 over a finite field, solved by
  the Case-1/Case-2 elimination with on-demand field extension.

* solve_frobenius_unit: (F_L - 1) x = c on principal-unit vectors by the
  base step x_1 = 1 plus the refinement x_{i+1} = x_i (1 + [y_i] pi^i) where
  y_i solves the residue system rho y^q - y = b_i.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import MalformedSystem, NotAUnit
from .padic_core import PadicMatrix, matrix_inverse, val_p
from .rep_structure import matrix_order
from .residue_tower import FieldId, FqElem, embed, ensure_field, find_root
from .towers import TowerElem, TowerLocalRing, TowerRing, TowerUnit, tower_ring
from .witt_rings import (
    LocalRing,
    TwistedUnitVector,
    galois_ring,
    twisted_frobenius,
)

# ---------------------------------------------------------------------------
# semilinear systems over finite fields

Poly = dict[int, FqElem]  # univariate polynomial in x_1 as degree -> coeff


@dataclass(frozen=True)
class SemilinearSystem:
    """System f(x_1) + A x^q + B x = 0 over `field`; the nonconstant terms of
    every f_i must have degree > q and B must be invertible."""

    field: FieldId
    q: int
    A: tuple[tuple[FqElem, ...], ...]
    B: tuple[tuple[FqElem, ...], ...]
    f: tuple[Poly, ...]

    def __post_init__(self):
        n = len(self.A)
        if any(len(row) != n for row in self.A) or len(self.B) != n:
            raise MalformedSystem("A and B must be square of the same size")
        if len(self.f) != n:
            raise MalformedSystem("need one f_i per equation")
        for fi in self.f:
            for d in fi:
                if d != 0 and d <= self.q:
                    raise MalformedSystem(
                        f"f has a term of degree {d} <= q = {self.q}"
                    )
        if _field_matrix_inverse(self.B, self.field) is None:
            raise MalformedSystem("B is singular")


def _field_matrix_inverse(M, fid: FieldId):
    n = len(M)
    a = [list(row) + [fid.one() if i == j else fid.zero() for j in range(n)]
         for i, row in enumerate(M)]
    for k in range(n):
        piv = next((i for i in range(k, n) if not a[i][k].is_zero()), None)
        if piv is None:
            return None
        a[k], a[piv] = a[piv], a[k]
        inv = a[k][k].inverse()
        a[k] = [x * inv for x in a[k]]
        for i in range(n):
            if i != k and not a[i][k].is_zero():
                c = a[i][k]
                a[i] = [x - c * y for x, y in zip(a[i], a[k])]
    return [row[n:] for row in a]


def _left_kernel_vector(cols, fid: FieldId, n: int):
    """Nonzero v with v^T * cols = 0; cols is a list of n-vectors (may be
    empty, in which case e_1 works)."""
    if not cols:
        return [fid.one()] + [fid.zero()] * (n - 1)
    # solve the transposed homogeneous system by echelon form
    rows = [[cols[j][i] for j in range(len(cols))] for i in range(n)]  # n x c
    # eliminate to find a dependency among the rows of `rows`
    work = [row[:] + [fid.one() if i == j else fid.zero() for j in range(n)]
            for i, row in enumerate(rows)]
    c = len(cols)
    rank_cols = 0
    for col in range(c):
        piv = next(
            (i for i in range(rank_cols, n) if not work[i][col].is_zero()), None
        )
        if piv is None:
            continue
        work[rank_cols], work[piv] = work[piv], work[rank_cols]
        inv = work[rank_cols][col].inverse()
        work[rank_cols] = [x * inv for x in work[rank_cols]]
        for i in range(n):
            if i != rank_cols and not work[i][col].is_zero():
                f = work[i][col]
                work[i] = [x - f * y for x, y in zip(work[i], work[rank_cols])]
        rank_cols += 1
    if rank_cols >= n:
        return None
    return work[rank_cols][c:]


def _complete_to_invertible(v, fid: FieldId):
    """Rows of an invertible matrix whose first row is v."""
    n = len(v)
    rows = [list(v)]
    for i in range(n):
        cand = [fid.one() if j == i else fid.zero() for j in range(n)]
        trial = rows + [cand]
        if _field_rank(trial, fid) == len(trial):
            rows.append(cand)
        if len(rows) == n:
            break
    return rows


def _field_rank(rows, fid: FieldId) -> int:
    work = [list(r) for r in rows]
    n_rows, n_cols = len(work), len(work[0])
    rank = 0
    for col in range(n_cols):
        piv = next((i for i in range(rank, n_rows) if not work[i][col].is_zero()), None)
        if piv is None:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        inv = work[rank][col].inverse()
        work[rank] = [x * inv for x in work[rank]]
        for i in range(n_rows):
            if i != rank and not work[i][col].is_zero():
                f = work[i][col]
                work[i] = [x - f * y for x, y in zip(work[i], work[rank])]
        rank += 1
    return rank


def _poly_embed(f: Poly, fid: FieldId) -> Poly:
    return {d: embed(c, fid) for d, c in f.items()}


def _poly_add(f: Poly, g: Poly) -> Poly:
    out = dict(f)
    for d, c in g.items():
        out[d] = out[d] + c if d in out else c
    return {d: c for d, c in out.items() if not c.is_zero()}


def _poly_scale(f: Poly, c: FqElem) -> Poly:
    if c.is_zero():
        return {}
    return {d: c * x for d, x in f.items()}


def _poly_eval(f: Poly, x: FqElem, fid: FieldId) -> FqElem:
    acc = fid.zero()
    for d, c in f.items():
        acc = acc + c * x**d
    return acc


def _poly_q_power(f: Poly, q: int) -> Poly:
    """f(x)^q in characteristic p: {q*d: c^q}."""
    return {q * d: c**q for d, c in f.items()}


def solve_semilinear(system: SemilinearSystem) -> tuple[FieldId, tuple[FqElem, ...]]:
    """Solve the system, extending the residue field as needed; the returned
    field hosts every solution coordinate.  The result is residual-checked
    exactly before returning."""
    fid, sol = _solve_semilinear_rec(
        system.field, system.q,
        [list(r) for r in system.A],
        [list(r) for r in system.B],
        [dict(fi) for fi in system.f],
    )
    # exact residual verification
    n = len(sol)
    A = [[embed(c, fid) for c in row] for row in system.A]
    B = [[embed(c, fid) for c in row] for row in system.B]
    for i in range(n):
        acc = _poly_eval(_poly_embed(system.f[i], fid), sol[0], fid)
        for j in range(n):
            acc = acc + A[i][j] * sol[j] ** system.q + B[i][j] * sol[j]
        assert acc.is_zero(), "semilinear residual nonzero"
    return fid, tuple(sol)


def _solve_semilinear_rec(fid, q, A, B, f):
    n = len(A)
    if n == 1:
        # univariate: f_1(x) + a x^q + b x = 0
        poly = dict(f[0])
        poly[q] = poly.get(q, fid.zero()) + A[0][0]
        poly[1] = poly.get(1, fid.zero()) + B[0][0]
        deg = max(poly)
        coeffs = [poly.get(d, fid.zero()) for d in range(deg + 1)]
        host, root = find_root(coeffs)
        return host, [root]

    # make the first row of A supported only at (0, 0)
    cols = [[A[i][j] for i in range(n)] for j in range(1, n)]
    v = _left_kernel_vector(cols, fid, n)
    E = _complete_to_invertible(v, fid)
    A = [[sum((E[i][k] * A[k][j] for k in range(n)), fid.zero()) for j in range(n)]
         for i in range(n)]
    B = [[sum((E[i][k] * B[k][j] for k in range(n)), fid.zero()) for j in range(n)]
         for i in range(n)]
    f = [
        _merge_polys([_poly_scale(f[k], E[i][k]) for k in range(n)])
        for i in range(n)
    ]

    if all(B[0][j].is_zero() for j in range(1, n)):
        # Case 1: first equation involves x_1 only
        poly = dict(f[0])
        poly[q] = poly.get(q, fid.zero()) + A[0][0]
        poly[1] = poly.get(1, fid.zero()) + B[0][0]
        deg = max(poly)
        coeffs = [poly.get(d, fid.zero()) for d in range(deg + 1)]
        host, alpha = find_root(coeffs)
        A = [[embed(c, host) for c in row] for row in A]
        B = [[embed(c, host) for c in row] for row in B]
        f = [_poly_embed(fi, host) for fi in f]
        sub_A = [row[1:] for row in A[1:]]
        sub_B = [row[1:] for row in B[1:]]
        sub_f = []
        for i in range(1, n):
            const = (
                _poly_eval(f[i], alpha, host)
                + A[i][0] * alpha**q
                + B[i][0] * alpha
            )
            sub_f.append({0: const} if not const.is_zero() else {})
        host2, tail = _solve_semilinear_rec(host, q, sub_A, sub_B, sub_f)
        return host2, [embed(alpha, host2)] + tail

    # Case 2: eliminate the last variable
    jn = max(j for j in range(1, n) if not B[0][j].is_zero())
    last = n - 1
    perm = list(range(n))
    if jn != last:
        perm[jn], perm[last] = perm[last], perm[jn]
        for M in (A, B):
            for row in M:
                row[jn], row[last] = row[last], row[jn]
    scale = B[0][last].inverse()
    A[0] = [scale * x for x in A[0]]
    B[0] = [scale * x for x in B[0]]
    f[0] = _poly_scale(f[0], scale)
    for i in range(1, n):
        c = B[i][last]
        if not c.is_zero():
            A[i] = [x - c * y for x, y in zip(A[i], A[0])]
            B[i] = [x - c * y for x, y in zip(B[i], B[0])]
            f[i] = _poly_add(f[i], _poly_scale(f[0], -c))
    # x_last = -f_0(x_1) - A_00 x_1^q - sum_{j<last} B_0j x_j, and
    # x_last^q = (-1)^q (f_0^q + A_00^q x_1^{q^2} + sum B_0j^q x_j^q)
    sign = fid.one() if q % 2 == 0 or fid.p == 2 else -(fid.one())
    f0q = _poly_q_power(f[0], q)
    a00q = A[0][0] ** q
    sub_A, sub_B, sub_f = [], [], []
    for i in range(1, n):
        coupling = A[i][last] * sign
        row_A = [A[i][j] + coupling * B[0][j] ** q for j in range(last)]
        row_B = [B[i][j] for j in range(last)]
        fi = dict(f[i])
        if not coupling.is_zero():
            fi = _poly_add(fi, _poly_scale(f0q, coupling))
            fi = _poly_add(fi, {q * q: coupling * a00q})
        sub_A.append(row_A)
        sub_B.append(row_B)
        sub_f.append(fi)
    host, head = _solve_semilinear_rec(fid, q, sub_A, sub_B, sub_f)
    f0 = _poly_embed(f[0], host)
    a_row = [embed(c, host) for c in A[0]]
    b_row = [embed(c, host) for c in B[0]]
    x_last = -(
        _poly_eval(f0, head[0], host)
        + a_row[0] * head[0] ** q
        + sum((b_row[j] * head[j] for j in range(last)), host.zero())
    )
    full = head + [x_last]
    unperm = [host.zero()] * n
    for pos, orig in enumerate(perm):
        unperm[orig] = full[pos]
    return host, unperm


def _merge_polys(polys: list[Poly]) -> Poly:
    out: Poly = {}
    for f in polys:
        out = _poly_add(out, f)
    return out


# ---------------------------------------------------------------------------
# the matrix Lang equation

@dataclass
class LangSolution:
    """epsilon in GL_r(GR(p^n, degree)) with phi(eps^{-1}) eps = u^{-1}."""

    ring: TowerRing
    m: int  # order of u mod p^n
    epsilon: tuple[tuple[TowerElem, ...], ...]
    epsilon_inv: tuple[tuple[TowerElem, ...], ...]

    def residual_ok(self, u: PadicMatrix) -> bool:
        ring = self.ring
        r = len(self.epsilon)
        phi_inv = _mat_phi(ring, self.epsilon_inv)
        prod = _mat_mul(ring, phi_inv, self.epsilon)
        uinv = matrix_inverse(u)
        for i in range(r):
            for j in range(r):
                target = ring.from_int(uinv.entries[i][j])
                if not prod[i][j].congruent(target, u.n):
                    return False
        return True


def _mat_mul(ring, X, Y):
    r = len(X)
    return tuple(
        tuple(
            sum((X[i][k] * Y[k][j] for k in range(r)), ring.zero())
            for j in range(r)
        )
        for i in range(r)
    )


def _mat_phi(ring, X):
    return tuple(tuple(ring.phi(x) for x in row) for row in X)


def _mat_identity(ring, r):
    return tuple(
        tuple(ring.one() if i == j else ring.zero() for j in range(r))
        for i in range(r)
    )


def _mat_from_padic(ring, M: PadicMatrix):
    return tuple(
        tuple(ring.from_int(M.entries[i][j]) for j in range(M.cols))
        for i in range(M.rows)
    )


def _p_part(m: int, p: int) -> tuple[int, int]:
    j = 0
    while m % p == 0:
        m //= p
        j += 1
    return m, j


def _integer_teichmuller(a: int, p: int, n: int) -> int:
    t = a % p**n
    for _ in range(n):
        t = pow(t, p, p**n)
    return t


def _padic_log_unit(v: int, p: int, n: int) -> int:
    """log of a 1-unit v (v = 1 mod p; mod 4 for p = 2), exact mod p^n."""
    mod = p**n
    window = p ** (3 * n)  # keeps valuations of x^j visible while j <= 2n
    x = (v - 1) % window
    acc = 0
    term, j = x, 1
    while j <= 2 * n + 4:
        vj = val_p(j, p, n + 5)
        num = (term // p**vj) % mod
        den = j // p**vj
        contrib = num * pow(den, -1, mod) % mod
        acc = (acc - contrib) % mod if j % 2 == 0 else (acc + contrib) % mod
        term = term * x % window
        j += 1
    return acc % mod


def _exp_times(ring: TowerRing, ell: int, x0: TowerElem, n: int) -> TowerElem:
    """exp(ell * x0) in the tower ring (requires val(ell) >= 1, >= 2 for
    p = 2); the scalars ell^j / j! are computed with exact p-cancellation."""
    p = ring.p
    v_ell = val_p(ell % p ** (3 * n) or p ** (3 * n), p, 3 * n)
    if v_ell < (2 if p == 2 else 1):
        raise ValueError("exp argument valuation too small")
    acc = ring.one()
    term = ring.one()
    fact_val = 0
    fact_unit = 1
    ell_pow = 1
    window = p ** (3 * n)
    for j in range(1, 6 * n + 2):
        ell_pow = ell_pow * ell % window
        vj = val_p(j, p, 3 * n)
        fact_val += vj
        fact_unit = fact_unit * (j // p**vj) % p**n
        if j * v_ell - fact_val >= n:
            break
        term = term * x0
        scalar = (ell_pow // p**fact_val) * pow(fact_unit, -1, p**n) % p**n
        acc = acc + term.scale(scalar)
    return acc


def solve_lang_matrix(u: PadicMatrix, n: int) -> LangSolution:
    """epsilon with phi(eps^{-1}) eps = u^{-1} mod p^n, entries in the
    unramified ring of residue degree m = ord(u mod p^n)."""
    p, r = u.p, u.rows
    u = u.reduce(n) if u.n > n else u.lift(n)
    I = PadicMatrix.identity(p, n, r)
    m = matrix_order(u)
    if u == I:
        ring = tower_ring(p, n, 1, 0)
        eps = _mat_identity(ring, r)
        return LangSolution(ring, 1, eps, eps)
    E = u - I
    if r == 1:
        return _lang_scalar(u, n)
    if (E @ E) == PadicMatrix.zero(p, n, r):
        return _lang_unipotent(u, n)
    return _lang_generic(u, n, m)


def _lang_scalar(u: PadicMatrix, n: int) -> LangSolution:
    p = u.p
    mod = p**n
    a = u.entries[0][0]
    teich = _integer_teichmuller(a, p, n)
    V = a * pow(teich, -1, mod) % mod
    sign = 1
    if p == 2 and V % 4 == 3:
        sign = -1
        V = (-V) % mod
    vV = val_p(V - 1, p, n) if V != 1 else n
    levels = max(n - vV, 0) if V != 1 else 0
    if sign == -1:
        levels = max(levels, 1)
    # tame part: root c of X^{p-1} - abar, eps_N = [c]
    fp = ensure_field(p, 1)
    abar = fp.from_int_vector([a])
    if p == 2 or (teich - 1) % mod == 0:
        k_c = 1
        c_root = None
    else:
        coeffs = [-(abar)] + [fp.zero()] * (p - 2) + [fp.one()]
        host, c_root = find_root(coeffs)
        k_c = host.k
    ring = tower_ring(p, n, k_c, levels)
    eps = ring.one()
    eps_inv = ring.one()
    if c_root is not None:
        lift = ring.teichmuller_base(
            c_root if c_root.field == ring.base_field else embed(c_root, ring.base_field)
        )
        eps = eps * lift
        eps_inv = eps_inv * lift.inverse()
    if V != 1:
        ell = _padic_log_unit(V, p, n)
        x0 = ring.artin_schreier_element(levels)
        ev = _exp_times(ring, ell, x0, n)
        eps = eps * ev
        eps_inv = eps_inv * _exp_times(ring, (-ell) % p**n, x0, n)
    if sign == -1:
        eps_m, eps_m_inv = _lang_minus_one(ring, n)
        eps = eps * eps_m
        eps_inv = eps_inv * eps_m_inv
    m = matrix_order(u)
    sol = LangSolution(ring, m, ((eps,),), ((eps_inv,),))
    assert sol.residual_ok(u), "scalar Lang residual failed"
    return sol


def _lang_minus_one(ring: TowerRing, n: int):
    """Scalar eps with phi(eps) = -eps (p = 2).  The solution lives in the
    rank-2 subring (Z/2^n)[t_1], where phi + 1 is Z/2^n-linear: take a unit
    kernel vector of its 2x2 matrix."""
    from .padic_core import kernel_generators

    p = ring.p
    ring._ensure_phi()
    t = ring.gen(1)
    phit = TowerElem(ring, ring._embed_sub(ring._phi_t[1], ring.levels))
    s = phit + t
    idx0 = (0,) * (ring.levels + 1)
    idx1 = tuple([0] * (ring.levels - 1) + [1, 0])
    col1 = (int(s.arr[idx0]), int(s.arr[idx1]))
    check = np.zeros(ring.shape, dtype=np.int64)
    check[idx0], check[idx1] = col1[0], col1[1]
    assert np.array_equal(check % ring.mod, s.arr), "phi(t)+t left the subring"
    M = PadicMatrix(p, n, [[2, col1[0]], [0, col1[1]]])
    for g in kernel_generators(M):
        for extra in range(2):
            a, b = g[0] + extra * 0, g[1]
            if (a + b) % 2 == 1 or a % 2 == 1:
                eps = ring.from_int(a) + t.scale(b)
                if (ring.phi(eps) + eps).is_zero() and eps.is_unit():
                    return eps, eps.inverse()
    # combinations of the two generators
    gens = kernel_generators(M)
    for c0 in range(4):
        for c1 in range(4):
            a = sum(c * g[0] for c, g in zip((c0, c1), gens)) % 2**n
            b = sum(c * g[1] for c, g in zip((c0, c1), gens)) % 2**n
            eps = ring.from_int(a) + t.scale(b)
            if eps.is_unit() and (ring.phi(eps) + eps).is_zero():
                return eps, eps.inverse()
    raise RuntimeError("minus-one Lang solve failed")


def _lang_unipotent(u: PadicMatrix, n: int) -> LangSolution:
    p, r = u.p, u.rows
    I = PadicMatrix.identity(p, n, r)
    E = u - I
    v = min(val_p(E.entries[i][j], p, n) for i in range(r) for j in range(r))
    levels = n - v
    ring = tower_ring(p, n, 1, levels)
    x0 = ring.artin_schreier_element(levels)
    eps = [[ring.from_int(I.entries[i][j]) for j in range(r)] for i in range(r)]
    eps_inv = [[ring.from_int(I.entries[i][j]) for j in range(r)] for i in range(r)]
    for i in range(r):
        for j in range(r):
            e = E.entries[i][j]
            if e:
                eps[i][j] = eps[i][j] + x0.scale(e)
                eps_inv[i][j] = eps_inv[i][j] - x0.scale(e)
    m = matrix_order(u)
    sol = LangSolution(ring, m, tuple(map(tuple, eps)), tuple(map(tuple, eps_inv)))
    assert sol.residual_ok(u), "unipotent Lang residual failed"
    return sol


def _lang_generic(u: PadicMatrix, n: int, m: int, seed: int = 0) -> LangSolution:
    p, r = u.p, u.rows
    m_t, j = _p_part(m, p)
    ring = tower_ring(p, n, m_t, j)
    rng = random.Random(0xE9 + seed)
    ubar = [[u.entries[i][k] % p for k in range(r)] for i in range(r)]
    # base case: b = sum_k ubar^k phi^k(C), eps_bar = b^{-1}
    eps_bar = None
    for _ in range(40):
        C = [[ring.random(rng).residue() for _ in range(r)] for _ in range(r)]
        acc = [[np.array(C[i][k]) for k in range(r)] for i in range(r)]
        T = C
        for _ in range(m - 1):
            Tp = [[ring.res_phi(T[i][k]) for k in range(r)] for i in range(r)]
            T = _res_mat_int_mul(ring, ubar, Tp)
            for i in range(r):
                for k in range(r):
                    acc[i][k] = (acc[i][k] + T[i][k]) % p
        inv = _res_mat_inverse(ring, acc, r)
        if inv is not None:
            eps_bar = inv
            b_mat = acc
            break
    if eps_bar is None:
        raise RuntimeError("Hilbert-90 averaging failed to find a unit")
    eps = tuple(
        tuple(ring.lift_residue(eps_bar[i][k]) for k in range(r)) for i in range(r)
    )
    uinv = matrix_inverse(u)
    uinv_t = _mat_from_padic(ring, uinv)
    for i in range(1, n):
        eps_inv = _tower_mat_inverse(ring, eps, r)
        prod = _mat_mul(ring, _mat_phi(ring, eps_inv), eps)
        defect = [
            [(prod[a][b] - uinv_t[a][b]).arr for b in range(r)] for a in range(r)
        ]
        if all(not (defect[a][b] % p**n).any() for a in range(r) for b in range(r)):
            break
        Rbar = [
            [((defect[a][b] // p**i) % p) for b in range(r)] for a in range(r)
        ]
        assert all(
            not (defect[a][b] % p**i).any() for a in range(r) for b in range(r)
        ), "defect valuation dropped below the level"
        # S = phi(eps_bar) R eps_bar^{-1}; W solves (phi-1)W = S; X = eps^{-1} W eps
        eb = [[eps[a][b].residue() for b in range(r)] for a in range(r)]
        eb_inv = _res_mat_inverse(ring, eb, r)
        phi_eb = [[ring.res_phi(eb[a][b]) for b in range(r)] for a in range(r)]
        S = _res_mat_mul(ring, _res_mat_mul(ring, phi_eb, Rbar), eb_inv)
        W = [[ring.res_solve_frob_minus_one(S[a][b]) for b in range(r)] for a in range(r)]
        X = _res_mat_mul(ring, _res_mat_mul(ring, eb_inv, W), eb)
        # eps <- eps (I + p^i X)
        corr = _mat_identity(ring, r)
        corr = [
            [
                corr[a][b] + TowerElem(ring, (X[a][b].astype(np.int64) * p**i) % ring.mod)
                for b in range(r)
            ]
            for a in range(r)
        ]
        eps = _mat_mul(ring, eps, tuple(map(tuple, corr)))
    eps_inv = _tower_mat_inverse(ring, eps, r)
    sol = LangSolution(ring, m, eps, eps_inv)
    assert sol.residual_ok(u), "generic Lang residual failed"
    return sol


def _res_mat_int_mul(ring, Mint, X):
    r = len(X)
    p = ring.p
    out = []
    for i in range(r):
        row = []
        for k in range(r):
            acc = np.zeros_like(X[0][0])
            for s in range(r):
                if Mint[i][s] % p:
                    acc = (acc + Mint[i][s] * X[s][k]) % p
            row.append(acc)
        out.append(row)
    return out


def _res_mat_mul(ring, X, Y):
    r = len(X)
    p = ring.p
    out = []
    for i in range(r):
        row = []
        for k in range(r):
            acc = np.zeros_like(X[0][0])
            for s in range(r):
                if X[i][s].any() and Y[s][k].any():
                    acc = (acc + ring.res_mul(X[i][s], Y[s][k])) % p
            row.append(acc)
        out.append(row)
    return out


def _res_mat_inverse(ring, M, r):
    from .towers import _res_inverse

    p = ring.p
    a = [[np.array(M[i][j]) % p for j in range(r)]
         + [ring._sub_one(ring.levels) % p if i == j else ring._sub_zero(ring.levels)
            for j in range(r)]
         for i in range(r)]
    for k in range(r):
        piv = next((i for i in range(k, r) if a[i][k].any()), None)
        if piv is None:
            return None
        # pivot must be a unit of the residue field (nonzero suffices: field)
        a[k], a[piv] = a[piv], a[k]
        try:
            inv = _res_inverse(ring, a[k][k], ring.levels)
        except Exception:
            return None
        a[k] = [ring.res_mul(x, inv) for x in a[k]]
        for i in range(r):
            if i != k and a[i][k].any():
                c = a[i][k]
                a[i] = [(x - ring.res_mul(c, y)) % p for x, y in zip(a[i], a[k])]
    return [row[r:] for row in a]


def _tower_mat_inverse(ring, M, r):
    a = [[M[i][j] for j in range(r)]
         + [ring.one() if i == j else ring.zero() for j in range(r)]
         for i in range(r)]
    for k in range(r):
        piv = next((i for i in range(k, r) if a[i][k].is_unit()), None)
        if piv is None:
            raise RuntimeError("matrix over tower ring is not invertible")
        a[k], a[piv] = a[piv], a[k]
        inv = a[k][k].inverse()
        a[k] = [x * inv for x in a[k]]
        for i in range(r):
            if i != k and not a[i][k].is_zero():
                c = a[i][k]
                a[i] = [x - c * y for x, y in zip(a[i], a[k])]
    return tuple(tuple(row[r:]) for row in a)


# ---------------------------------------------------------------------------
# the twisted-unit equation (F_L - 1) x = c

def solve_frobenius_unit(
    c: TwistedUnitVector,
    x_seed: TwistedUnitVector | None = None,
    i0: int | None = None,
) -> TwistedUnitVector:
    """Solve (F_L - 1) x = c for a principal-unit vector c, refining digit by
    digit; the residue field is extended on demand (the result's ring reports
    the final field).  With a seed x~ satisfying the congruence mod pi^{i0},
    the output agrees with x~ mod pi^{i0}."""
    if any(v != 0 for v in c.vals):
        raise NotAUnit("right-hand side has nonzero valuation part")
    if isinstance(c.ring, TowerLocalRing):
        return _solve_frobenius_unit_tower(c, x_seed, i0)
    ring = c.ring
    rho = c.rho
    p = ring.p
    r = rho.rows
    if x_seed is not None:
        if i0 is None:
            raise ValueError("a seed needs its congruence level i0")
        x = x_seed
        start = i0
        diff = _fl_minus_one(x).inverse() * c
        one = ring._fq_one()
        for u in diff.units:
            if u.digits[0] != one or any(not d.is_zero() for d in u.digits[1:i0]):
                raise ValueError("seed does not satisfy the stated congruence")
    else:
        x = TwistedUnitVector.identity(ring, rho)
        start = 1
    q = p**ring.k0
    for i in range(start, ring.m):
        res = _fl_minus_one(x)
        a = res.inverse() * c
        assert all(v == 0 for v in a.vals)
        b = [u.digits[i] for u in a.units]
        if all(d.is_zero() for d in b):
            continue
        fid = ring.residue_field
        rbar = [[fid.from_int_vector([rho.entries[s][t] % p]) if fid.k == 1
                 else _int_to_field(rho.entries[s][t], fid) for t in range(r)]
                for s in range(r)]
        minus_one = -(fid.one())
        B = [[minus_one if s == t else fid.zero() for t in range(r)] for s in range(r)]
        f = [({0: -(b[s])} if not b[s].is_zero() else {}) for s in range(r)]
        system = SemilinearSystem(fid, q, tuple(map(tuple, rbar)),
                                  tuple(map(tuple, B)), tuple(f))
        host, y = solve_semilinear(system)
        if host != fid:
            ring, x, c = _extend_ring(ring, host, x, c)
        corr_units = []
        for s in range(r):
            digits = [ring._fq_one()] + [ring._fq_zero()] * (ring.m - 1)
            digits[i] = embed(y[s], ring.residue_field)
            corr_units.append(ring.elem_from_digits(digits))
        corr = TwistedUnitVector(ring, rho, (0,) * r, tuple(corr_units))
        x = x * corr
    res = _fl_minus_one(x)
    final = res.inverse() * c
    assert all(v == 0 for v in final.vals)
    for u in final.units:
        assert u == ring.one(), "frobenius-unit residual nonzero at precision"
    return x


def _int_to_field(a: int, fid: FieldId) -> FqElem:
    return fid.from_int_vector([a % fid.p])


def _fl_minus_one(x: TwistedUnitVector) -> TwistedUnitVector:
    return twisted_frobenius(x) * x.inverse()


def _extend_ring(ring: LocalRing, host: FieldId, x: TwistedUnitVector,
                 c: TwistedUnitVector):
    """Rebuild the local ring over a bigger residue field and re-embed the
    carried vectors digit by digit."""
    new_gr = galois_ring(ring.p, ring.gr.n, host.k)
    E_int = [cf.coeffs[0] if hasattr(cf, "coeffs") else cf for cf in ring.E]
    new_E = [new_gr.elem([int(v) for v in cf.coeffs]) for cf in ring.E]
    new_ring = LocalRing(new_gr, new_E, ring.m, frobenius_exponent=ring.k0)

    def move(vec: TwistedUnitVector) -> TwistedUnitVector:
        units = tuple(
            new_ring.elem_from_digits([embed(d, host) for d in u.digits])
            for u in vec.units
        )
        return TwistedUnitVector(new_ring, vec.rho, vec.vals, units)

    return new_ring, move(x), move(c)


def _solve_frobenius_unit_tower(
    c: TwistedUnitVector,
    x_seed: TwistedUnitVector | None,
    i0: int | None,
) -> TwistedUnitVector:
    """Tower-backed variant (e = 1, absolute Frobenius): the residue field
    grows one Artin-Schreier layer per trace obstruction, and each residue
    step is the exact split solver, so no polynomial root search happens.
    The twist must reduce mod p to an upper-triangular unipotent matrix."""
    ring: TowerLocalRing = c.ring
    rho = c.rho
    p, r = ring.p, rho.rows
    for i_ in range(r):
        for j_ in range(r):
            v = rho.entries[i_][j_] % p
            if (i_ == j_ and v != 1) or (i_ > j_ and v != 0):
                raise ValueError("tower backend needs a unipotent upper-triangular twist mod p")
    if x_seed is not None:
        if i0 is None:
            raise ValueError("a seed needs its congruence level i0")
        x = x_seed
        start = i0
        diff = _fl_minus_one(x).inverse() * c
        for u in diff.units:
            if (u.elem - u.ring.tower.one()).p_valuation() < i0:
                raise ValueError("seed does not satisfy the stated congruence")
    else:
        x = TwistedUnitVector.identity(ring, rho)
        start = 1
    for i in range(start, ring.m):
        while True:
            res = _fl_minus_one(x)
            a = res.inverse() * c
            assert all(v == 0 for v in a.vals)
            one_arr = ring.tower.one().arr
            deltas = [u.elem.arr - one_arr for u in a.units]
            assert all(not (d % p**i).any() for d in deltas), "refinement lost a level"
            b = [(d // p**i) % p for d in deltas]
            if all(not bb.any() for bb in b):
                break
            try:
                y = [None] * r
                for s in range(r - 1, -1, -1):
                    rhs = b[s]
                    for j in range(s + 1, r):
                        coeff = rho.entries[s][j] % p
                        if coeff and y[j] is not None and y[j].any():
                            rhs = (rhs - coeff * ring.tower.res_phi(y[j])) % p
                    y[s] = ring.tower.res_solve_frob_minus_one(rhs % p)
            except ValueError:
                new_ring = ring.extended()
                x = _move_tower_vec(x, new_ring)
                c = _move_tower_vec(c, new_ring)
                ring = new_ring
                continue
            corr_units = []
            for s in range(r):
                lift = ring.tower.lift_residue(y[s])
                corr_units.append(
                    TowerUnit(ring, ring.tower.one() + lift.scale(p**i))
                )
            x = x * TwistedUnitVector(ring, rho, (0,) * r, tuple(corr_units))
            break
    final = _fl_minus_one(x).inverse() * c
    assert all(v == 0 for v in final.vals)
    for u in final.units:
        assert u == ring.one(), "tower frobenius-unit residual nonzero"
    return x


def _move_tower_vec(v: TwistedUnitVector, new_ring: TowerLocalRing) -> TwistedUnitVector:
    units = tuple(v.ring.move_up(u, new_ring) for u in v.units)
    return TwistedUnitVector(new_ring, v.rho, v.vals, units)
