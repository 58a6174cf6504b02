import itertools
import random

import pytest

from su3tree.algebra import (BElem, Curve, FracIdeal, LElem, ideal_qtilde,
                             pic_order)
from su3tree.arithmetic import (conjugated_unipotent, cusp_N0, cusp_bounds,
                                cusp_class_of_line, direction_line,
                                enumerate_GC, enumerate_cusps, gc_line_orbits,
                                ideal_I, rank_one_matrix, stab_characterize,
                                stab_space_contains, standard_cusp_reps,
                                unipotent_stab_space)
from su3tree.ffield import Poly, lin_rref
from su3tree.hermitian import (Mat3, corner_elem, is_heisenberg_pair,
                               is_in_arithmetic_group, torus_elem,
                               upper_unipotent, weyl_elem)
from su3tree.tree import TreeContext


def make_curves():
    return [Curve(3, "ramified"), Curve(3, "unramified")]


def rand_poly(rng, F, maxdeg=2):
    return Poly(F, [rng.randrange(F.q)
                    for _ in range(rng.randrange(maxdeg + 1))])


def tpow(cv, k):
    p = cv.oneA
    for _ in range(k):
        p = p * cv.tA
    return p


def rand_pair(rng, cv, k=0):
    """Random Heisenberg pair, denominator t^k allowed in both slots."""
    den = tpow(cv, k)
    u = LElem(cv, BElem(cv, rand_poly(rng, cv.F), rand_poly(rng, cv.F)), den)
    half = cv.F.inv(2)
    v = u.norm().scale_const(cv.F.neg(half))
    r = LElem(cv, BElem(cv, cv.zeroA, rand_poly(rng, cv.F)), den)
    v = v + r
    assert is_heisenberg_pair(u, v)
    return u, v


def span_rank(cv, elems, extra=()):
    """F_q-rank of a family of L-elements."""
    from su3tree.arithmetic import _CoordSpace
    family = list(elems) + list(extra)
    cs = _CoordSpace(cv, family)
    rows = [cs.coords(z) for z in family]
    return len(lin_rref(cv.F, rows)[1])


def directions(cv):
    out = [(cv.zeroL(), cv.zeroL())]
    if cv.family == "unramified":
        out.append((cv.zeroL(), cv.rho_over_t()))
    return out


# ---------------------------------------------------------------------------
# the conjugated unipotent


def test_conjugated_unipotent_matches_product():
    for cv in make_curves():
        rng = random.Random(11 * cv.q)
        ident = Mat3.identity(cv)
        for trial in range(8):
            u, v = rand_pair(rng, cv, k=trial % 2)
            x, y = rand_pair(rng, cv, k=(trial + 1) % 2)
            nm = conjugated_unipotent(cv, u, v, x, y)
            g = corner_elem(cv, u, v)
            direct = g.inv() * upper_unipotent(cv, x, y) * g
            plus = Mat3(cv, tuple(a + b for a, b in zip(nm.e, ident.e)))
            assert plus == direct


def test_conjugated_unipotent_bottom_row_and_square():
    for cv in make_curves():
        rng = random.Random(5 * cv.q)
        for trial in range(20):
            u, v = rand_pair(rng, cv, k=trial % 2)
            x, y = rand_pair(rng, cv)
            nm = conjugated_unipotent(cv, u, v, x, y)
            assert nm[2, 0] == y
            assert nm[2, 1] == -x.conj() - y * u.conj()
            assert nm[2, 2] == y * v - u * x.conj()
            sq = nm * nm
            expected = rank_one_matrix(cv, u, v).scale(-x.norm())
            assert sq == expected


def test_conjugated_unipotent_standard_direction_is_lower_triangular():
    for cv in make_curves():
        rng = random.Random(cv.q)
        zero = cv.zeroL()
        for _ in range(5):
            x, y = rand_pair(rng, cv)
            nm = conjugated_unipotent(cv, zero, zero, x, y)
            assert nm[0, 1] == zero and nm[0, 2] == zero and nm[1, 2] == zero
            assert nm[2, 0] == y


def test_conjugated_unipotent_rejects_non_pairs():
    for cv in make_curves():
        zero, one = cv.zeroL(), cv.oneL()
        with pytest.raises(ValueError):
            conjugated_unipotent(cv, one, zero, zero, zero)
        with pytest.raises(ValueError):
            conjugated_unipotent(cv, zero, zero, one, zero)


# ---------------------------------------------------------------------------
# the ideal I


def test_ideal_I_worked_values():
    for cv in make_curves():
        zero = cv.zeroL()
        assert ideal_I(cv, zero, zero) == FracIdeal.unit_ideal(cv)
    cv = Curve(3, "unramified")
    tB = FracIdeal.from_gens(cv, [cv.lelem(cv.tA)])
    assert ideal_I(cv, cv.zeroL(), cv.rho_over_t()) == tB


def test_ideal_I_integral_and_conj_stable():
    for cv in make_curves():
        rng = random.Random(7 * cv.q)
        pairs = [rand_pair(rng, cv, k=1) for _ in range(4)]
        pairs += [d for d in directions(cv)]
        for (u, v) in pairs:
            ideal = ideal_I(cv, u, v)
            assert ideal.is_integral()
            assert ideal == ideal.conj_ideal()


def test_ideal_I_pairs_give_integral_group_elements():
    for cv in make_curves():
        rng = random.Random(13 * cv.q)
        half = cv.F.inv(2)
        for (u, v) in directions(cv):
            ideal = ideal_I(cv, u, v)
            basis = ideal.rr_space(3)
            g = corner_elem(cv, u, v)
            gi = g.inv()
            for _ in range(6):
                x = cv.zeroL()
                for b in basis:
                    c = rng.randrange(cv.q)
                    if c:
                        x = x + b.scale_const(c)
                r = basis[rng.randrange(len(basis))]
                y = (x.norm() + r - r.conj()).scale_const(cv.F.neg(half))
                assert is_heisenberg_pair(x, y)
                assert ideal.contains(x) and ideal.contains(y)
                nm = conjugated_unipotent(cv, u, v, x, y)
                assert all(e.is_integral() for e in nm.e)
                assert is_in_arithmetic_group(gi * upper_unipotent(cv, x, y) * g)


def test_second_cusp_integral_pair_counterexample():
    # over the second cusp direction, integral pairs are NOT enough: the
    # pair (0, w) is integral but its conjugated unipotent is not
    cv = Curve(3, "unramified")
    zero, v = cv.zeroL(), cv.rho_over_t()
    w = cv.lelem(0, 1)
    assert is_heisenberg_pair(zero, w)
    nm = conjugated_unipotent(cv, zero, v, zero, w)
    assert not all(e.is_integral() for e in nm.e)
    assert not ideal_I(cv, zero, v).contains(w)


# ---------------------------------------------------------------------------
# stabilizer spaces


def test_stab_space_standard_direction_is_the_full_ideal_space():
    for cv in make_curves():
        zero = cv.zeroL()
        unit = FracIdeal.unit_ideal(cv)
        for n in range(1, 11):
            sd = unipotent_stab_space(cv, zero, zero, n, with_torus=False)
            expect = unit.rr_space(n // 2)
            assert sd.r == 0
            assert sd.dim == len(expect)
            assert span_rank(cv, sd.basis, expect) == len(expect)


def test_stab_space_second_cusp_dimension_and_members():
    cv = Curve(3, "unramified")
    zero, v = cv.zeroL(), cv.rho_over_t()
    w = cv.lelem(0, 1)
    for n in range(3, 8):
        sd = unipotent_stab_space(cv, zero, v, n, with_torus=False)
        m = n // 2
        assert sd.r == 1
        assert sd.dim == 2 * m
        assert sd.extra[0].piord() == -1
    assert stab_space_contains(cv, zero, v, 3, w)
    assert stab_space_contains(cv, zero, v, 3, cv.lelem(cv.tA))
    assert not stab_space_contains(cv, zero, v, 3, cv.oneL())


def test_stab_space_level_validation():
    cv = Curve(3, "unramified")
    zero, v = cv.zeroL(), cv.rho_over_t()
    for bad in (0, 1, 2):
        with pytest.raises(ValueError):
            unipotent_stab_space(cv, zero, v, bad)
    with pytest.raises(ValueError):
        unipotent_stab_space(cv, zero, zero, 0)
    with pytest.raises(ValueError):
        unipotent_stab_space(cv, cv.oneL(), cv.zeroL(), 5)


def test_stab_space_torus_and_order():
    for cv in make_curves():
        zero = cv.zeroL()
        q = cv.q
        for n in (1, 2):
            sd = unipotent_stab_space(cv, zero, zero, n)
            assert sd.torus == tuple(range(1, q))
            # the y-fiber is the trace-zero part of B[n]
            ybasis = FracIdeal.unit_ideal(cv).rr_space(n)
            traces = [b + b.conj() for b in ybasis]
            from su3tree.arithmetic import _CoordSpace
            cs = _CoordSpace(cv, traces)
            rows = [cs.coords(z) for z in traces]
            trank = len(lin_rref(cv.F, rows)[1])
            assert sd.fiber_dim == len(ybasis) - trank
            assert sd.order == (q - 1) * q ** sd.dim * q ** sd.fiber_dim
    cv = Curve(3, "unramified")
    sd = unipotent_stab_space(cv, cv.zeroL(), cv.rho_over_t(), 3)
    assert sd.torus == (1, 2)
    assert sd.fiber_dim == 2
    assert sd.order == 2 * 3 ** 2 * 3 ** 2


# ---------------------------------------------------------------------------
# bounds


def test_cusp_bounds_worked_values():
    for cv in make_curves():
        zero = cv.zeroL()
        assert cusp_bounds(cv, zero, zero) == (0, 0, 0)
    cv = Curve(3, "unramified")
    assert cusp_bounds(cv, cv.zeroL(), cv.rho_over_t()) == (2, 2, 2)
    assert cusp_N0(cv, cv.zeroL(), cv.rho_over_t()) == 2
    assert ideal_qtilde(cv, cv.zeroL(), cv.rho_over_t()).degree() == 1


# ---------------------------------------------------------------------------
# the two-path stabilizer characterization


def test_stab_characterize_identity_and_torus():
    for cv in make_curves():
        ctx = TreeContext(cv)
        zero = cv.zeroL()
        ident = Mat3.identity(cv)
        for n in (1, 2, 3):
            assert stab_characterize(ctx, ident, zero, zero, n)
            for tau in range(1, cv.q):
                at = torus_elem(cv, cv.lelem(tau))
                assert stab_characterize(ctx, at, zero, zero, n)


def test_stab_characterize_strict_growth():
    # a unipotent with piord(y) = -(n+1) enters the stabilizer tower
    # exactly at level n+1
    for cv in make_curves():
        ctx = TreeContext(cv)
        zero = cv.zeroL()
        if cv.family == "ramified":
            y = cv.lelem(0, cv.tA)          # piord -3
        else:
            y = cv.lelem(0, cv.tA * cv.tA)  # piord -3
        assert y.piord() == -3
        g0 = corner_elem(cv, zero, zero)
        g = g0.inv() * upper_unipotent(cv, zero, y) * g0
        assert is_in_arithmetic_group(g)
        assert not stab_characterize(ctx, g, zero, zero, 2)
        assert stab_characterize(ctx, g, zero, zero, 3)


def test_stab_characterize_level_validation():
    cv = Curve(3, "unramified")
    ctx = TreeContext(cv)
    zero, v = cv.zeroL(), cv.rho_over_t()
    with pytest.raises(ValueError):
        stab_characterize(ctx, Mat3.identity(cv), zero, zero, 0)
    with pytest.raises(ValueError):
        stab_characterize(ctx, Mat3.identity(cv), zero, v, 2)


def test_stab_characterize_second_cusp_members():
    cv = Curve(3, "unramified")
    ctx = TreeContext(cv)
    zero, v = cv.zeroL(), cv.rho_over_t()
    g0 = corner_elem(cv, zero, v)
    gi = g0.inv()
    half = cv.F.inv(2)
    # the extra member: x = w with y = (a t^2 - t)/2
    w = cv.lelem(0, 1)
    y = w.norm().scale_const(cv.F.neg(half))
    g = gi * upper_unipotent(cv, w, y) * g0
    assert is_in_arithmetic_group(g)
    assert stab_characterize(ctx, g, zero, v, 3)
    # x = 1 with the analogous y is not even in the group
    y1 = cv.oneL().scale_const(cv.F.neg(half))
    g1 = gi * upper_unipotent(cv, cv.oneL(), y1) * g0
    assert not is_in_arithmetic_group(g1)
    assert not stab_characterize(ctx, g1, zero, v, 3)


def test_stab_characterize_two_paths_agree_on_samples():
    for cv in make_curves():
        ctx = TreeContext(cv)
        rng = random.Random(17 * cv.q)
        zero = cv.zeroL()
        half = cv.F.inv(2)
        gens = [weyl_elem(cv), Mat3.identity(cv),
                torus_elem(cv, cv.lelem(2))]
        for _ in range(6):
            u0, v0 = rand_pair(rng, cv)
            gens.append(upper_unipotent(cv, u0, v0))
        for (u, v) in directions(cv):
            ideal = ideal_I(cv, u, v)
            basis = ideal.rr_space(2)
            g0 = corner_elem(cv, u, v)
            gi = g0.inv()
            for trial in range(20):
                if trial % 2 == 0:
                    # member-shaped element
                    x = cv.zeroL()
                    for b in basis:
                        c = rng.randrange(cv.q)
                        if c:
                            x = x + b.scale_const(c)
                    r = basis[rng.randrange(len(basis))]
                    y = (x.norm() + r - r.conj()).scale_const(
                        cv.F.neg(half))
                    g = gi * upper_unipotent(cv, x, y) * g0
                else:
                    g = Mat3.identity(cv)
                    for _ in range(rng.randrange(1, 4)):
                        g = g * gens[rng.randrange(len(gens))]
                # no RuntimeError: the tree action and the closed form agree
                stab_characterize(ctx, g, u, v, rng.randrange(1, 4) * 3)


# ---------------------------------------------------------------------------
# cusps


def test_cusp_class_of_line_values():
    for cv in make_curves():
        zero, one = cv.zeroL(), cv.oneL()
        assert cusp_class_of_line(cv, (one, zero, zero)) == 0
        assert cusp_class_of_line(cv, direction_line(cv, zero, zero)) == 0
    cv = Curve(3, "unramified")
    zero, one = cv.zeroL(), cv.oneL()
    v = cv.rho_over_t()
    line = (v.conj(), zero, one)
    assert cusp_class_of_line(cv, line) == 1
    assert cusp_class_of_line(cv, direction_line(cv, zero, v)) == 1
    # scaling invariance
    for lam in (cv.lelem(cv.tA), cv.lelem(0, 1), cv.lelem(2)):
        scaled = tuple(lam * wi for wi in line)
        assert cusp_class_of_line(cv, scaled) == 1


def test_cusp_class_of_line_rejects_bad_input():
    cv = Curve(3, "unramified")
    zero, one = cv.zeroL(), cv.oneL()
    with pytest.raises(ValueError):
        cusp_class_of_line(cv, (zero, zero, zero))
    with pytest.raises(ValueError):
        cusp_class_of_line(cv, (zero, one, zero))
    with pytest.raises(ValueError):
        cusp_class_of_line(cv, (zero, cv.rho_over_t(), one))


def test_enumerate_cusps_ramified():
    cv = Curve(3, "ramified")
    ctx = TreeContext(cv)
    cusps = enumerate_cusps(ctx)
    assert len(cusps) == 1
    c = cusps[0]
    assert c.pic == 0
    assert (c.N0, c.N1, c.N) == (0, 0, 0)
    assert c.ideal_I == FracIdeal.unit_ideal(cv)
    assert c.tip == ctx.ray_vertex((cv.zeroL(), cv.zeroL()), 1)


def test_enumerate_cusps_unramified():
    cv = Curve(3, "unramified")
    ctx = TreeContext(cv)
    cusps = enumerate_cusps(ctx)
    assert len(cusps) == 2
    assert sorted(c.pic for c in cusps) == [0, 1]
    by_pic = {c.pic: c for c in cusps}
    assert (by_pic[0].N0, by_pic[0].N1, by_pic[0].N) == (0, 0, 0)
    assert (by_pic[1].N0, by_pic[1].N1, by_pic[1].N) == (2, 2, 2)
    zero, v = cv.zeroL(), cv.rho_over_t()
    assert by_pic[0].tip == ctx.ray_vertex((zero, zero), 1)
    assert by_pic[1].tip == ctx.ray_vertex((zero, v), 3)
    assert by_pic[1].tip.kind == "pair"
    assert len(standard_cusp_reps(cv)) == pic_order(cv) == 2


# ---------------------------------------------------------------------------
# the constant-entry subgroup


def brute_gc_count(cv):
    """Scan all q^9 constant matrices for isometries of determinant one."""
    F = cv.F
    q = F.q
    count = 0
    for ents in itertools.product(range(q), repeat=9):
        g = (ents[0:3], ents[3:6], ents[6:9])
        ok = True
        for i in range(3):
            if not ok:
                break
            for j in range(i, 3):
                s = 0
                for k in range(3):
                    s = F.add(s, F.mul(g[k][i], g[2 - k][j]))
                if s != (1 if i + j == 2 else 0):
                    ok = False
                    break
        if not ok:
            continue
        det = 0
        for (j0, j1, j2), sgn in (((0, 1, 2), 1), ((1, 2, 0), 1),
                                  ((2, 0, 1), 1), ((2, 1, 0), -1),
                                  ((1, 0, 2), -1), ((0, 2, 1), -1)):
            term = F.mul(F.mul(g[0][j0], g[1][j1]), g[2][j2])
            det = F.add(det, term if sgn == 1 else F.neg(term))
        if det == 1:
            count += 1
    return count


def test_enumerate_GC_order_and_group_structure():
    for cv in make_curves():
        q = cv.q
        gc = enumerate_GC(cv)
        assert len(gc) == q * (q * q - 1)
        assert len(set(gc)) == len(gc)
        assert Mat3.identity(cv) in set(gc)
        members = set(gc)
        rng = random.Random(23 * q)
        for _ in range(30):
            g1 = gc[rng.randrange(len(gc))]
            g2 = gc[rng.randrange(len(gc))]
            assert g1 * g2 in members
            assert g1.inv() in members
        for g in gc:
            assert is_in_arithmetic_group(g)


def test_enumerate_GC_against_brute_force():
    for cv in make_curves():
        assert len(enumerate_GC(cv)) == brute_gc_count(cv)


def test_GC_stabilizes_base_vertex():
    for cv in make_curves():
        ctx = TreeContext(cv)
        v0 = ctx.standard_vertex(0)
        for g in enumerate_GC(cv):
            assert ctx.act(g, v0) == v0


def test_gc_line_orbits():
    assert gc_line_orbits(Curve(3, "unramified")) == 3
    assert gc_line_orbits(Curve(5, "unramified")) == 3
    assert gc_line_orbits(Curve(3, "ramified")) == 1
    assert gc_line_orbits(Curve(5, "ramified")) == 1
