import random

import numpy as np
import pytest

from su3tree.ffield import FF, Poly, lin_kernel, lin_matmul, lin_rref, lin_solve, quadratic_ext


@pytest.mark.parametrize("q", [3, 5, 7, 9, 25])
def test_field_axioms(q):
    F = FF(q)
    rng = random.Random(q)
    for _ in range(300):
        a, b, c = (rng.randrange(q) for _ in range(3))
        assert F.add(a, b) == F.add(b, a)
        assert F.mul(a, b) == F.mul(b, a)
        assert F.add(F.add(a, b), c) == F.add(a, F.add(b, c))
        assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
        assert F.add(a, F.neg(a)) == 0
        assert F.sub(a, b) == F.add(a, F.neg(b))
        if a != 0:
            assert F.mul(a, F.inv(a)) == 1
    assert F.add(0, 5 % q) == 5 % q
    assert F.mul(1, 5 % q) == 5 % q


def test_prime_field_matches_mod_arithmetic():
    F = FF(7)
    for a in range(7):
        for b in range(7):
            assert F.add(a, b) == (a + b) % 7
            assert F.mul(a, b) == (a * b) % 7


@pytest.mark.parametrize("q", [3, 5, 9])
def test_quadratic_extension(q):
    F = FF(q)
    a = F.first_nonsquare()
    E = quadratic_ext(F, a)
    assert E.q == q * q
    r = E.gen
    assert E.mul(r, r) == a  # a embeds as low digit
    # conj is the q-power Frobenius and fixes the base field
    for z in range(E.q):
        assert E.conj(z) == E.pow(z, q)
    for z0 in range(q):
        assert E.conj(z0) == z0
    # norm and trace land in the base field
    rng = random.Random(11)
    for _ in range(100):
        z = rng.randrange(E.q)
        assert E.mul(z, E.conj(z)) < q
        assert E.add(z, E.conj(z)) < q


def test_nonsquare_rejection():
    F = FF(5)
    with pytest.raises(ValueError):
        quadratic_ext(F, 4)  # 4 = 2^2 is a square


def test_frobenius_additive():
    F = FF(9)
    for a in range(9):
        for b in range(9):
            s = F.add(a, b)
            assert F.frob_p_t[s] == F.add(int(F.frob_p_t[a]), int(F.frob_p_t[b]))
            assert F.frob_p_t[a] == F.pow(a, 3)


def test_poly_ring_axioms():
    F = FF(5)
    rng = random.Random(1)

    def rand_poly():
        return Poly(F, [rng.randrange(5) for _ in range(rng.randrange(7))])

    for _ in range(200):
        f, g, h = rand_poly(), rand_poly(), rand_poly()
        assert (f + g) * h == f * h + g * h
        assert f * g == g * f
        assert f + (-f) == Poly.zero(F)
        if not g.is_zero():
            q, r = f.divmod(g)
            assert q * g + r == f
            assert r.is_zero() or r.deg < g.deg


def test_poly_gcd_xgcd():
    F = FF(3)
    t = Poly.t(F)
    one = Poly.one(F)
    f = (t + one) * (t + one) * t
    g = (t + one) * (t + Poly.const(F, 2))
    d = f.gcd(g)
    assert d == t + one
    gg, u, v = f.xgcd(g)
    assert gg == d
    assert u * f + v * g == d


def test_poly_eval_and_shift():
    F = FF(7)
    f = Poly(F, (1, 2, 3))  # 1 + 2t + 3t^2
    assert f.eval(2) == (1 + 4 + 12) % 7
    assert f.shift(2).coeffs == (0, 0, 1, 2, 3)
    assert f.shift(2).shift(-2) == f
    assert f.lcm(Poly.t(F)).deg == 3


@pytest.mark.parametrize("q", [3, 9])
def test_linear_algebra_oracle(q):
    F = FF(q)
    rng = random.Random(q + 100)
    for trial in range(40):
        m, n = rng.randrange(1, 5), rng.randrange(1, 5)
        A = np.array([[rng.randrange(q) for _ in range(n)] for _ in range(m)])
        R, piv = lin_rref(F, A)
        # rref rows span the same space: every original row solves against R
        for i in range(m):
            x, _ = lin_solve(F, R.T, A[i])
            assert x is not None
        ker = lin_kernel(F, A)
        for v in ker:
            prod = lin_matmul(F, A, v.reshape(n, 1))
            assert not prod.any()
        # rank-nullity
        assert len(piv) + len(ker) == n
        # brute-force kernel count agrees for tiny sizes
        if q**n <= 1000:
            cnt = 0
            import itertools as it

            for vec in it.product(range(q), repeat=n):
                out = [0] * m
                for j, vj in enumerate(vec):
                    for i in range(m):
                        out[i] = F.add(out[i], F.mul(int(A[i, j]), vj))
                if not any(out):
                    cnt += 1
            assert cnt == q ** len(ker)


def test_lin_solve_inconsistent():
    F = FF(3)
    A = np.array([[1, 1], [2, 2]])
    x, ker = lin_solve(F, A, np.array([1, 1]))
    assert x is None
    x2, _ = lin_solve(F, A, np.array([1, 2]))
    assert x2 is not None
