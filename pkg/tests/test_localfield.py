import random

import pytest

from su3tree.algebra import BElem, Curve, LElem, PIORD_INF
from su3tree.ffield import Poly
from su3tree.localfield import LocalElem, LocalField, PrecisionLoss


def make_setups():
    out = []
    for q in (3, 5):
        for fam in ("ramified", "unramified"):
            cv = Curve(q, fam)
            out.append((cv, LocalField(cv, budget=48)))
    return out


def rand_lelem(rng, cv, maxdeg=3):
    num = BElem(cv, Poly(cv.F, [rng.randrange(cv.q) for _ in range(rng.randrange(maxdeg + 1))]),
                Poly(cv.F, [rng.randrange(cv.q) for _ in range(rng.randrange(maxdeg + 1))]))
    den = Poly(cv.F, [rng.randrange(cv.q) for _ in range(rng.randrange(3))] + [1])
    return LElem(cv, num, den)


def test_uniformizer_relations():
    ram = Curve(3, "ramified")
    lf = LocalField(ram)
    t = lf.embed_poly(ram.tA)
    assert t.lead == -2 and t.coeffs == (1,) and t.prec is None
    rho = lf.rho_series()
    assert rho.lead == -1 and rho.prec is None
    assert (rho * rho).agrees(t)
    unr = Curve(3, "unramified")
    lf2 = LocalField(unr)
    t2 = lf2.embed_poly(unr.tA)
    assert t2.lead == -1 and t2.coeffs == (1,)
    w = lf2.rho_series()
    assert w.lead == -1
    assert (w * w).agrees(lf2.embed_poly(unr.rho_sq))


def test_embed_ring_homomorphism():
    for cv, lf in make_setups():
        rng = random.Random(cv.q * 7 + len(cv.family))
        for _ in range(60):
            x, y = rand_lelem(rng, cv), rand_lelem(rng, cv)
            ex, ey = lf.embed(x), lf.embed(y)
            assert lf.embed(x + y).agrees(ex + ey)
            assert lf.embed(x * y).agrees(ex * ey)
            assert lf.embed(x.conj()).agrees(ex.conj())
            if not x.is_zero():
                assert lf.embed(x.inv()).agrees(ex.inv())


def test_embed_preserves_piord():
    for cv, lf in make_setups():
        rng = random.Random(11)
        for _ in range(80):
            x = rand_lelem(rng, cv)
            if x.is_zero():
                assert lf.embed(x).piord() == PIORD_INF
            else:
                assert lf.embed(x).piord() == x.piord()


def test_ramified_embeddings_exact():
    cv = Curve(3, "ramified")
    lf = LocalField(cv)
    rng = random.Random(5)
    for _ in range(30):
        x = rand_lelem(rng, cv, 4)
        if x.den.deg == 0:
            assert lf.embed(x).prec is None


def test_conjugation_action_on_series():
    cv = Curve(5, "ramified")
    lf = LocalField(cv)
    s = lf.rho_series()
    assert s.conj().agrees(-s)  # conj(pi^-1) = -pi^-1
    t = lf.embed_poly(cv.tA)
    assert t.conj().agrees(t)
    unr = Curve(5, "unramified")
    lf2 = LocalField(unr)
    w = lf2.rho_series()
    assert w.conj().agrees(-w)
    # residue of w/t is sqrt(a); conj moves it to -sqrt(a) (Frobenius)
    wt = lf2.embed(unr.rho_over_t())
    assert wt.piord() == 0
    assert wt.residue() == unr.kappa.gen
    assert wt.conj().residue() == unr.kappa.neg(unr.kappa.gen)


def test_sqrt_one_unit():
    for cv, lf in make_setups():
        kap = lf.kappa
        rng = random.Random(17)
        for _ in range(20):
            coeffs = [1] + [rng.randrange(kap.q) for _ in range(8)]
            x = LocalElem(lf, 0, coeffs, 9)
            y = lf.sqrt_one_unit(x)
            assert y.coeffs[0] == 1 and y.lead == 0
            assert (y * y).agrees(x)
        assert lf.sqrt_one_unit(lf.one()).agrees(lf.one())


def test_precision_tracking():
    cv = Curve(3, "ramified")
    lf = LocalField(cv)
    x = LocalElem(lf, 0, (1, 2), 5)  # 1 + 2 pi + O(pi^5)
    y = x.shift(2)
    assert y.lead == 2 and y.prec == 7
    p = x * lf.pi_power(3)
    assert p.prec == 8
    z = x - x
    assert not z.coeffs and z.prec == 5
    with pytest.raises(PrecisionLoss):
        z.piord()
    assert lf.zero().piord() == PIORD_INF
    # inverting something with no known order fails loudly
    with pytest.raises(PrecisionLoss):
        z.inv()


def test_inverse_series():
    for cv, lf in make_setups():
        rng = random.Random(23)
        for _ in range(25):
            x = rand_lelem(rng, cv)
            if x.is_zero():
                continue
            ex = lf.embed(x)
            assert (ex * ex.inv()).agrees(lf.one())


def test_key_snapshots():
    cv = Curve(3, "unramified")
    lf = LocalField(cv)
    x = LocalElem(lf, -2, (1, 0, 2), None)
    assert x.key(5) == (-2, (1, 0, 2))
    assert x.key(0) == (-2, (1,))  # the pi^0 coefficient 2 is cut off
    y = LocalElem(lf, -2, (1, 0, 2), 3)
    assert y.key(3) == (-2, (1, 0, 2))
    with pytest.raises(PrecisionLoss):
        y.key(4)


def test_budget_refinement():
    cv = Curve(3, "unramified")
    small = LocalField(cv, budget=6)
    big = LocalField(cv, budget=40)
    x = cv.rho_over_t()
    xs, xb = small.embed(x), big.embed(x)
    assert xs.prec is not None and xb.prec is not None
    assert xb.prec > xs.prec
    assert xs.agrees(xb)
