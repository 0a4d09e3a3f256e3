import random

import pytest

from padicgal.padic_core import PadicMatrix
from padicgal.residue_tower import ensure_field, frobenius_pow
from padicgal.witt_rings import (
    GaloisRingElem,
    LocalRing,
    TwistedUnitVector,
    frobenius_lift,
    galois_ring,
    teichmuller,
    twisted_frobenius,
)


def _rand_gr(ring, rng):
    return ring.elem([rng.randrange(ring.modulus) for _ in range(ring.k)])


class TestTeichmuller:
    def test_zero_one(self):
        fid = ensure_field(3, 2)
        assert teichmuller(fid.zero(), 3).is_zero()
        ring = galois_ring(3, 3, 2)
        assert teichmuller(fid.one(), 3) == ring.one()

    def test_prime_field_example(self):
        # p=3, k=1, n=2: lift of 2 is 8 mod 9 (solve y^3 = y, y = 2 mod 3)
        fid = ensure_field(3, 1)
        t = teichmuller(fid.from_int_vector([2]), 2)
        assert t.coeffs == (8,)

    def test_fixed_point_identity(self):
        rng = random.Random(21)
        for p, n, k in [(2, 4, 3), (3, 3, 2), (5, 2, 2)]:
            fid = ensure_field(p, k)
            for _ in range(10):
                x = fid.from_int_vector([rng.randrange(p) for _ in range(k)])
                t = teichmuller(x, n)
                assert t ** (p**k) == t
                assert t.residue() == x


class TestFrobeniusLift:
    def test_fixes_scalars(self):
        ring = galois_ring(3, 3, 4)
        x = ring.from_int(17)
        assert frobenius_lift(x) == x

    def test_on_teichmuller(self):
        fid = ensure_field(3, 2)
        g = fid.gen()
        t = teichmuller(g, 3)
        assert frobenius_lift(t) == teichmuller(frobenius_pow(g, 1), 3)

    def test_orbit(self):
        rng = random.Random(22)
        ring = galois_ring(3, 3, 4)
        for _ in range(8):
            x = _rand_gr(ring, rng)
            y = x
            for _ in range(4):
                y = frobenius_lift(y)
            assert y == x

    def test_ring_homomorphism(self):
        rng = random.Random(23)
        ring = galois_ring(2, 4, 3)
        for _ in range(25):
            x, y = _rand_gr(ring, rng), _rand_gr(ring, rng)
            assert frobenius_lift(x + y) == frobenius_lift(x) + frobenius_lift(y)
            assert frobenius_lift(x * y) == frobenius_lift(x) * frobenius_lift(y)

    def test_reduces_to_p_power(self):
        rng = random.Random(24)
        ring = galois_ring(3, 3, 2)
        for _ in range(20):
            x = _rand_gr(ring, rng)
            assert frobenius_lift(x).residue() == x.residue() ** 3

    def test_inverse_roundtrip(self):
        rng = random.Random(25)
        ring = galois_ring(5, 4, 2)
        done = 0
        while done < 10:
            x = _rand_gr(ring, rng)
            if not x.is_unit():
                continue
            done += 1
            assert x * x.inverse() == ring.one()


class TestLocalRing:
    def _ring(self, p=3, m=6, k=1, e=2, k0=1):
        gr = galois_ring(p, m // e + 2, k)
        E = [p] + [0] * (e - 1) + [1]
        return LocalRing(gr, E, m, frobenius_exponent=k0)

    def test_eisenstein_validation(self):
        gr = galois_ring(3, 4, 1)
        with pytest.raises(ValueError):
            LocalRing(gr, [1, 0, 1], 4)  # constant term a unit
        with pytest.raises(ValueError):
            LocalRing(gr, [3, 1, 1], 4)  # middle coefficient not = 0 mod p
        with pytest.raises(ValueError):
            LocalRing(gr, [9, 0, 1], 4)  # constant term p^2 * unit

    def test_pi_power_relation(self):
        R = self._ring(p=3, m=6, e=2)
        pi = R.pi()
        three = R.from_int(3)
        assert pi * pi == -three if False else (pi * pi + three).is_zero()

    def test_digit_roundtrip(self):
        rng = random.Random(26)
        R = self._ring(p=2, m=7, k=2, e=2)
        fid = R.residue_field
        for _ in range(20):
            digits = [
                fid.from_int_vector([rng.randrange(2) for _ in range(2)])
                for _ in range(7)
            ]
            x = R.elem_from_digits(digits)
            vec = x._expanded()
            assert R._expanded_to_digits(vec) == x.digits

    def test_ring_axioms_sampled(self):
        rng = random.Random(27)
        R = self._ring(p=3, m=5, k=2, e=2)
        fid = R.residue_field
        def rand():
            return R.elem_from_digits(
                [fid.from_int_vector([rng.randrange(3), rng.randrange(3)])
                 for _ in range(5)]
            )
        for _ in range(15):
            a, b, c = rand(), rand(), rand()
            assert (a + b) * c == a * c + b * c
            assert a * b == b * a
            assert (a * b) * c == a * (b * c)

    def test_unit_inverse(self):
        rng = random.Random(28)
        R = self._ring(p=3, m=6, e=2)
        fid = R.residue_field
        done = 0
        while done < 10:
            digits = [fid.from_int_vector([rng.randrange(3)]) for _ in range(6)]
            x = R.elem_from_digits(digits)
            if not x.is_unit():
                continue
            done += 1
            assert x * x.inverse() == R.one()

    def test_e1_matches_galois_ring(self):
        # e=1 with E = x - p: pi = p, the layer degenerates to GR arithmetic
        rng = random.Random(29)
        gr = galois_ring(3, 7, 2)
        R = LocalRing(gr, [-3, 1], 5)
        for _ in range(10):
            a = _rand_gr(gr, rng)
            b = _rand_gr(gr, rng)
            xa, xb = R.from_coefficient(a), R.from_coefficient(b)
            prod = xa * xb
            # compare against GR product through the digit expansion mod p^5
            expect = R.from_coefficient(a * b)
            assert prod == expect

    def test_frobenius_fixes_pi(self):
        R = self._ring(p=3, m=6, e=2, k=2, k0=2)
        pi = R.pi()
        assert pi.frobenius() == pi

    def test_valuation(self):
        R = self._ring(p=2, m=5, e=2)
        assert R.pi().pi_valuation() == 1
        assert (R.pi() * R.pi()).pi_valuation() == 2
        assert R.from_int(2).pi_valuation() == 2
        assert R.zero().pi_valuation() == 5


class TestTwistedUnitVector:
    def _setup(self, p=3, n=4, m=6, e=1, k0=1, rho_entries=None):
        gr = galois_ring(p, m // e + 2, k0)
        E = [p] + [0] * (e - 1) + [1]
        ring = LocalRing(gr, E, m, frobenius_exponent=k0)
        rho = PadicMatrix(p, n, rho_entries or [[1, 1], [0, 1]])
        return ring, rho

    def test_identity_fixed(self):
        ring, rho = self._setup()
        x = TwistedUnitVector.identity(ring, rho)
        assert twisted_frobenius(x) == x

    def test_valuation_bookkeeping(self):
        # x = (pi, 1): valuation vector (1, 0) maps to the first column of rho
        ring, rho = self._setup(rho_entries=[[2, 1], [5, 1]])
        one = ring.one()
        x = TwistedUnitVector(ring, rho, (1, 0), (one, one))
        y = twisted_frobenius(x)
        assert y.vals == (2, 5)

    def test_identity_twist_fixed_units(self):
        # rho = I and digits in the k0-fixed subfield: x is Frobenius-fixed
        ring, _ = self._setup(k0=1)
        rho = PadicMatrix(3, 4, [[1, 0], [0, 1]])
        fid = ring.residue_field
        u = ring.elem_from_digits([fid.one(), fid.from_int_vector([2])])
        x = TwistedUnitVector(ring, rho, (0, 3), (u, ring.one()))
        assert twisted_frobenius(x) == x

    def test_against_direct_expansion(self):
        # r=2, rho=[[1,1],[0,1]], u=(1+pi, 1): (Fx)_1 = sigma(u_1)sigma(u_2),
        # (Fx)_2 = sigma(u_2) with sigma the naive Frobenius
        ring, rho = self._setup(p=3, k0=2)
        fid = ring.residue_field
        u1 = ring.one() + ring.pi()
        u2 = ring.one()
        x = TwistedUnitVector(ring, rho, (0, 0), (u1, u2))
        y = twisted_frobenius(x)
        s1, s2 = u1.frobenius(), u2.frobenius()
        assert y.units[0] == s1 * s2
        assert y.units[1] == s2
        assert y.vals == (0, 0)

    def test_composition_squares_twist(self):
        rng = random.Random(30)
        ring, rho = self._setup(p=3, n=3, rho_entries=[[1, 1], [3, 2]])
        fid = ring.residue_field
        for _ in range(5):
            units = tuple(
                ring.elem_from_digits(
                    [fid.one()] + [fid.from_int_vector([rng.randrange(3)])
                                   for _ in range(5)]
                )
                for _ in range(2)
            )
            x = TwistedUnitVector(ring, rho, (rng.randrange(3), rng.randrange(3)), units)
            twice = twisted_frobenius(twisted_frobenius(x))
            # acting twice = digits^(q^2) then twist by rho^2
            sig2 = TwistedUnitVector(
                ring, rho, x.vals, tuple(u.frobenius(2) for u in x.units)
            )
            direct = sig2.matrix_power(rho @ rho)
            assert twice.vals == direct.vals and twice.units == direct.units

    def test_group_ops(self):
        ring, rho = self._setup()
        pi_unit = ring.one() + ring.pi()
        x = TwistedUnitVector(ring, rho, (2, -1), (pi_unit, ring.one()))
        assert (x * x.inverse()) == TwistedUnitVector.identity(ring, rho)
