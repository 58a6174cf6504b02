import random

from su3tree.algebra import BElem, Curve, LElem
from su3tree.ffield import Poly
from su3tree.hermitian import (Mat3, corner_elem, heis_compose, heis_inverse,
                               herm_pairing, is_heisenberg_pair,
                               is_in_arithmetic_group, is_special_unitary,
                               is_unitary, lower_unipotent, torus_elem,
                               upper_unipotent, weyl_elem)


def make_curves():
    return [Curve(3, "ramified"), Curve(3, "unramified"),
            Curve(5, "ramified"), Curve(5, "unramified")]


def rand_poly(rng, F, maxdeg=2):
    return Poly(F, [rng.randrange(F.q) for _ in range(rng.randrange(maxdeg + 1))])


def rand_pair(rng, cv):
    """Random integral Heisenberg pair: v = -N(u)/2 + r*rho."""
    u = LElem.from_b(BElem(cv, rand_poly(rng, cv.F), rand_poly(rng, cv.F)))
    half = cv.F.inv(2)
    n = u.norm()
    c0 = n.num.c0.scale(cv.F.neg(half))
    v = LElem.from_b(BElem(cv, c0, rand_poly(rng, cv.F)))
    assert is_heisenberg_pair(u, v)
    return u, v


def test_weyl_involution():
    for cv in make_curves():
        s = weyl_elem(cv)
        assert s * s == Mat3.identity(cv)
        assert is_special_unitary(s)
        assert is_in_arithmetic_group(s)


def test_unipotents_unitary():
    for cv in make_curves():
        rng = random.Random(cv.q)
        for _ in range(20):
            u, v = rand_pair(rng, cv)
            for g in (upper_unipotent(cv, u, v), lower_unipotent(cv, u, v)):
                assert is_special_unitary(g)
                assert is_in_arithmetic_group(g)


def test_unipotent_group_law():
    for cv in make_curves():
        rng = random.Random(cv.q + 1)
        for _ in range(15):
            p1, p2 = rand_pair(rng, cv), rand_pair(rng, cv)
            g1 = upper_unipotent(cv, *p1)
            g2 = upper_unipotent(cv, *p2)
            comp = heis_compose(p1, p2)
            assert is_heisenberg_pair(*comp)
            assert g1 * g2 == upper_unipotent(cv, *comp)
            inv = heis_inverse(p1)
            assert g1 * upper_unipotent(cv, *inv) == Mat3.identity(cv)


def test_torus_elements():
    for cv in make_curves():
        rng = random.Random(cv.q + 2)
        t = LElem.from_b(BElem(cv, cv.tA, cv.zeroA))
        g = torus_elem(cv, t)
        assert is_special_unitary(g)
        for _ in range(10):
            tau = LElem.from_b(BElem(cv, rand_poly(rng, cv.F),
                                     rand_poly(rng, cv.F)))
            if tau.is_zero():
                continue
            assert is_special_unitary(torus_elem(cv, tau))


def test_torus_normalizes_unipotents():
    """a(tau) u(u, v) a(tau)^{-1} is again an upper unipotent, with
    parameters (tau conj(tau)/... ) -- structurally: zero below-diagonal and
    ones on it."""
    for cv in make_curves():
        rng = random.Random(cv.q + 3)
        for _ in range(10):
            u, v = rand_pair(rng, cv)
            tau = LElem.from_b(BElem(cv, cv.tA, cv.rho().c1))
            g = torus_elem(cv, tau)
            m = g * upper_unipotent(cv, u, v) * g.inv()
            one, zero = cv.oneL(), cv.zeroL()
            assert m[1, 0] == zero and m[2, 0] == zero and m[2, 1] == zero
            assert m[0, 0] == one and m[1, 1] == one and m[2, 2] == one


def test_corner_element_two_factorizations():
    for cv in make_curves():
        rng = random.Random(cv.q + 4)
        for _ in range(10):
            u, v = rand_pair(rng, cv)
            g = corner_elem(cv, u, v)
            assert g == weyl_elem(cv) * upper_unipotent(cv, u, v)
            assert is_special_unitary(g)
            # explicit entries
            assert g[0, 2] == -cv.oneL()
            assert g[1, 1] == -cv.oneL()
            assert g[1, 2] == -u
            assert g[2, 0] == -cv.oneL()
            assert g[2, 1] == u.conj()
            assert g[2, 2] == -v


def test_corner_inverse_zero_u():
    """g_{0,v}^{-1} = [[-conj(v), 0, -1], [0, -1, 0], [-1, 0, 0]]."""
    for cv in make_curves():
        v = cv.rho_over_t()  # T(rho/t) = 0, so (0, rho/t) is a pair
        zero = cv.zeroL()
        g = corner_elem(cv, zero, v)
        gi = g.inv()
        expect = Mat3.from_rows(cv, [[-v.conj(), zero, -cv.oneL()],
                                     [zero, -cv.oneL(), zero],
                                     [-cv.oneL(), zero, zero]])
        assert gi == expect
        assert (g * gi) == Mat3.identity(cv)


def test_arithmetic_membership():
    cv = Curve(3, "unramified")
    v = cv.rho_over_t()
    g = corner_elem(cv, cv.zeroL(), v)
    assert is_special_unitary(g)
    assert not is_in_arithmetic_group(g)  # entry -v has denominator t
    s = weyl_elem(cv)
    assert is_in_arithmetic_group(s)
    # non-unitary integral matrix rejected
    m = Mat3.from_rows(cv, [[1, 0, 0], [0, 1, 0], [0, 0, 2]])
    assert not is_unitary(m)
    assert not is_in_arithmetic_group(m)


def test_pairing_matrix_identity():
    """h(x, y) = x^T H conj(y) for random vectors."""
    for cv in make_curves():
        rng = random.Random(cv.q + 5)
        H = Mat3.from_rows(cv, [[0, 0, 1], [0, 1, 0], [1, 0, 0]])
        for _ in range(10):
            x = tuple(LElem.from_b(BElem(cv, rand_poly(rng, cv.F),
                                         rand_poly(rng, cv.F)))
                      for _ in range(3))
            y = tuple(LElem.from_b(BElem(cv, rand_poly(rng, cv.F),
                                         rand_poly(rng, cv.F)))
                      for _ in range(3))
            hy = H.apply(tuple(c.conj() for c in y))
            direct = x[0] * hy[0] + x[1] * hy[1] + x[2] * hy[2]
            assert herm_pairing(x, y) == direct


def test_unitary_group_closure():
    for cv in make_curves():
        rng = random.Random(cv.q + 6)
        gens = [weyl_elem(cv)]
        for _ in range(3):
            gens.append(upper_unipotent(cv, *rand_pair(rng, cv)))
        g = Mat3.identity(cv)
        for _ in range(6):
            g = g * gens[rng.randrange(len(gens))]
            assert is_special_unitary(g)
