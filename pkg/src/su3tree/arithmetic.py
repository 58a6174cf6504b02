"""Cusp directions and arithmetic stabilizer data.

A cusp direction is a Heisenberg pair (u, v); the corner element
g = corner_elem(u, v) carries the standard end of the tree onto the
(u, v)-end.  An element of the arithmetic group stabilizes the n-th
vertex of that ray exactly when its conjugate by g is upper triangular
of the shape unipotent(x, y) * torus(tau) with tau a unit constant and
piord(y) >= -n.  This module makes that criterion effective:

* conjugated_unipotent / rank_one_matrix: the conjugate of a unipotent
  element written entrywise, affine-linear in (x, conj(x), y);
* ideal_I: the conjugation-stable integral ideal whose pairs (x, y) all
  give integral conjugated unipotents;
* unipotent_stab_space: the space M(u, v, n) of first coordinates x of
  unipotent stabilizer members, found by exact F_q linear algebra in y;
* cusp_bounds: the three stability levels (N0, N1, N) of a direction;
* stab_characterize: membership test for the ray-vertex stabilizer,
  cross-checked between the tree action and the closed form;
* enumerate_cusps: one cusp datum per ideal class;
* enumerate_GC / gc_line_orbits: the constant-entry subgroup and its
  orbit count on residue isotropic lines.
"""

import itertools

from .algebra import (FracIdeal, ideal_b, ideal_qtilde, pic_class,
                      pic_order)
from .ffield import lin_rref, lin_solve
from .hermitian import (Mat3, corner_elem, herm_pairing, is_heisenberg_pair,
                        is_in_arithmetic_group, torus_elem)

# ---------------------------------------------------------------------------
# the conjugated unipotent, written entrywise


def _entry_coefficients(cv, u, v):
    """Coefficient triples (cx, cxb, cy) of the nine entries of the
    conjugated unipotent: entry = cx*x + cxb*conj(x) + cy*y, row major."""
    one, zero = cv.oneL(), cv.zeroL()
    ub, vb = u.conj(), v.conj()
    nu, nv = u.norm(), v.norm()
    return (
        (ub, zero, vb),
        (-(ub * ub), -vb, -(ub * vb)),
        (ub * v, -(u * vb), nv),
        (one, zero, -u),
        (-ub, u, nu),
        (v, u * u, -(v * u)),
        (zero, zero, one),
        (zero, -one, -ub),
        (zero, -u, v),
    )


def conjugated_unipotent(cv, u, v, x, y):
    """g_{u,v}^{-1} * upper_unipotent(x, y) * g_{u,v} minus the identity,
    as an explicit matrix whose entries are affine-linear in (x, conj x, y).
    """
    if not is_heisenberg_pair(u, v):
        raise ValueError("(u, v) is not a Heisenberg pair")
    if not is_heisenberg_pair(x, y):
        raise ValueError("(x, y) is not a Heisenberg pair")
    xb = x.conj()
    ents = tuple(cx * x + cxb * xb + cy * y
                 for (cx, cxb, cy) in _entry_coefficients(cv, u, v))
    return Mat3(cv, ents)


def rank_one_matrix(cv, u, v):
    """The rank-one matrix m with conjugated_unipotent(x, y)^2 = -N(x)*m."""
    one = cv.oneL()
    ub, vb = u.conj(), v.conj()
    nu, nv = u.norm(), v.norm()
    return Mat3(cv, (vb, -(ub * vb), nv,
                     -u, nu, -(u * v),
                     one, -ub, v))


def ideal_I(cv, u, v):
    """The largest conjugation-stable integral ideal I such that every
    Heisenberg pair (x, y) in I x I gives an integral conjugated unipotent:
    the inverse of the ideal generated by 1 and all entry coefficients
    together with their conjugates."""
    if not is_heisenberg_pair(u, v):
        raise ValueError("(u, v) is not a Heisenberg pair")
    gens = [cv.oneL()]
    for triple in _entry_coefficients(cv, u, v):
        for c in triple:
            if not c.is_zero():
                gens.append(c)
                gens.append(c.conj())
    return FracIdeal.from_gens(cv, gens).inverse()


# ---------------------------------------------------------------------------
# exact F_q coordinates for finite families of L-elements


class _CoordSpace:
    """Common-denominator F_q-coordinatization of a finite family of
    L-elements.

    Every element is rewritten over the least common denominator D; it is
    then a pair of numerator polynomials.  coords() lists all their
    coefficients (enough for equality and span computations); memb_rows()
    reduces the numerators mod D, whose vanishing says exactly that the
    element lies in B (B is free over A with basis 1, rho).  Both maps are
    F_q-linear in the element.
    """

    def __init__(self, cv, elems):
        self.cv = cv
        den = cv.oneA
        for z in elems:
            den = den.lcm(z.den)
        self.den = den
        dmax = 0
        for z in elems:
            p, r = self._num_pair(z)
            dmax = max(dmax, p.deg, r.deg)
        self.dmax = dmax

    def _num_pair(self, z):
        f = self.den // z.den
        assert (self.den % z.den).is_zero()
        return z.num.c0 * f, z.num.c1 * f

    @staticmethod
    def _pad(poly, width):
        co = list(poly.coeffs)
        return [int(c) for c in co] + [0] * (width - len(co))

    def coords(self, z):
        """Full coefficient vector; zero iff z = 0."""
        p, r = self._num_pair(z)
        assert p.deg <= self.dmax and r.deg <= self.dmax
        w = self.dmax + 1
        return self._pad(p, w) + self._pad(r, w)

    def memb_rows(self, z):
        """Coefficient vector of the numerators mod D; zero iff z lies in B."""
        dd = self.den.deg
        if dd == 0:
            return []
        p, r = self._num_pair(z)
        return self._pad(p % self.den, dd) + self._pad(r % self.den, dd)


def _span_rank(F, rows):
    if not rows:
        return 0
    return len(lin_rref(F, rows)[1])


# ---------------------------------------------------------------------------
# membership along a ray: solve for y


class _StabSolver:
    """Decides, for a first coordinate x and a torus constant tau, whether
    some y completes them to a stabilizer member of the n-th ray vertex.

    The conjugate g^{-1} u(x, y) a(tau) g is linear in y (y occupies a
    single slot of the unipotent), so with C = g^{-1} U(x) a(tau) g and
    W = g^{-1} E a(tau) g (E the matrix of that slot) membership reads:
    C_ij + y W_ij in B for all ij, T(y) = -N(x), and y in B with
    piord(y) >= -n.  Over an F_q-basis of that last space these are exact
    linear conditions on the coefficients of y.
    """

    def __init__(self, cv, u, v, n):
        self.cv = cv
        self.n = n
        self.g = corner_elem(cv, u, v)
        self.gi = self.g.inv()
        self.ybasis = FracIdeal.unit_ideal(cv).rr_space(n)
        self.trace_terms = [b + b.conj() for b in self.ybasis]
        self._tau_cache = {}

    def _tau_mats(self, tau):
        hit = self._tau_cache.get(tau)
        if hit is None:
            cv = self.cv
            one, zero = cv.oneL(), cv.zeroL()
            at = torus_elem(cv, cv.lelem(tau))
            e02 = Mat3(cv, (zero, zero, one,
                            zero, zero, zero,
                            zero, zero, zero))
            coeff = self.gi * (e02 * at) * self.g
            terms = [[wij * b for b in self.ybasis] for wij in coeff.e]
            hit = (at, terms)
            self._tau_cache[tau] = hit
        return hit

    def _system(self, x, tau):
        """Rows/rhs of the F_q-linear y-system at (x, tau)."""
        cv = self.cv
        F = cv.F
        at, terms = self._tau_mats(tau)
        one, zero = cv.oneL(), cv.zeroL()
        ux = Mat3(cv, (one, -x.conj(), zero,
                       zero, one, x,
                       zero, zero, one))
        const = self.gi * (ux * at) * self.g
        nx = x.norm()
        conds = [("B", const.e[k], terms[k]) for k in range(9)]
        conds.append(("0", nx, self.trace_terms))
        elems = []
        for _, c, ts in conds:
            elems.append(c)
            elems.extend(ts)
        cs = _CoordSpace(cv, elems)
        rows, rhs = [], []
        for mode, c, ts in conds:
            if mode == "B":
                cvec = cs.memb_rows(c)
                tvecs = [cs.memb_rows(z) for z in ts]
            else:
                cvec = cs.coords(c)
                tvecs = [cs.coords(z) for z in ts]
            for r in range(len(cvec)):
                rows.append([tv[r] for tv in tvecs])
                rhs.append(F.neg(cvec[r]))
        return rows, rhs

    def solve(self, x, tau=1):
        """(solvable, kernel_dim) of the y-system at (x, tau)."""
        rows, rhs = self._system(x, tau)
        if not rows:
            return True, len(self.ybasis)
        sol, ker = lin_solve(self.cv.F, rows, rhs)
        return sol is not None, len(ker)

    def solve_elems(self, x, tau=1):
        """(y | None, kernel basis as elements) of the system at (x, tau)."""
        cv = self.cv

        def build(coeffs):
            z = cv.zeroL()
            for c, b in zip(coeffs, self.ybasis):
                if c:
                    z = z + b.scale_const(int(c))
            return z

        rows, rhs = self._system(x, tau)
        if not rows:
            return cv.zeroL(), list(self.ybasis)
        sol, ker = lin_solve(cv.F, rows, rhs)
        if sol is None:
            return None, []
        return build(sol), [build(k) for k in ker]


def stab_space_contains(cv, u, v, n, x):
    """Whether x occurs as the first coordinate of a unipotent stabilizer
    member at level n of the (u, v)-ray."""
    return _StabSolver(cv, u, v, n).solve(x, 1)[0]


# ---------------------------------------------------------------------------
# the stabilizer space and the stability bounds


class StabData:
    """Unipotent stabilizer data of a ray vertex.

    Fields: the direction (u, v); the level n; an F_q-basis of the space
    M(u, v, n) of first coordinates (guaranteed ideal part first, then the
    extra lifts); the subgroup of torus constants that occur; the full
    stabilizer order (torus * q^dim M * q^dim(y-fiber)); the y-fiber
    dimension.  torus/order/fiber_dim are None when not requested.
    """

    __slots__ = ("direction", "n", "basis", "extra", "torus", "order",
                 "fiber_dim")

    def __init__(self, direction, n, basis, extra, torus, order, fiber_dim):
        self.direction = direction
        self.n = n
        self.basis = basis
        self.extra = extra
        self.torus = torus
        self.order = order
        self.fiber_dim = fiber_dim

    @property
    def r(self):
        return len(self.extra)

    @property
    def dim(self):
        return len(self.basis)

    def __repr__(self):
        return ("StabData(n=%d, dim=%d, r=%d, torus=%r, order=%r)"
                % (self.n, self.dim, self.r, self.torus, self.order))


def cusp_N0(cv, u, v):
    """Stability threshold of the direction: levels must exceed this for
    the closed-form stabilizer description to hold."""
    dq = ideal_qtilde(cv, u, v).degree()
    return -(-(2 * cv.e_P * dq) // cv.d)


def unipotent_stab_space(cv, u, v, n, with_torus=True):
    """Exact F_q-basis of M(u, v, n) plus torus/order data.

    Starts from the guaranteed subspace ideal_I(u, v)[n//2], enumerates
    coset representatives of the bounded ambient module (B + B*u)[n//2]
    modulo it, and tests each by solving the linear system in y.
    """
    if not is_heisenberg_pair(u, v):
        raise ValueError("(u, v) is not a Heisenberg pair")
    n0 = cusp_N0(cv, u, v)
    if n <= n0:
        raise ValueError("level %d is not above the stability bound %d"
                         % (n, n0))
    F = cv.F
    q = cv.q
    m = n // 2
    ideal = ideal_I(cv, u, v)
    base = ideal.rr_space(m)
    amb = ideal_b(cv, u).rr_space(m)
    solver = _StabSolver(cv, u, v, n)
    cs = _CoordSpace(cv, base + amb)
    brows = [cs.coords(b) for b in base]
    rank0 = _span_rank(F, brows)
    assert rank0 == len(base)
    # complement of the guaranteed subspace inside the ambient space
    comp = []
    cur, rank = list(brows), rank0
    for z in amb:
        trial = cur + [cs.coords(z)]
        r2 = _span_rank(F, trial)
        if r2 > rank:
            comp.append(z)
            cur, rank = trial, r2
    # scan the quotient: each nonzero combination is one coset
    members, extra = [], []
    esp, erank = list(brows), rank0
    for coeffs in itertools.product(range(q), repeat=len(comp)):
        if not any(coeffs):
            continue
        x = cv.zeroL()
        for c, z in zip(coeffs, comp):
            if c:
                x = x + z.scale_const(c)
        if not solver.solve(x, 1)[0]:
            continue
        members.append(x)
        trial = esp + [cs.coords(x)]
        r2 = _span_rank(F, trial)
        if r2 > erank:
            extra.append(x)
            esp, erank = trial, r2
    # the member cosets form a subspace of the quotient
    assert len(members) == q ** len(extra) - 1
    torus = order = fdim = None
    if with_torus:
        # coset representatives of the full space M inside the ambient one
        comp2 = []
        cur2, rank2 = list(esp), erank
        for z in comp:
            trial = cur2 + [cs.coords(z)]
            r2 = _span_rank(F, trial)
            if r2 > rank2:
                comp2.append(z)
                cur2, rank2 = trial, r2
        occ = {1}
        for tau in range(2, q):
            for coeffs in itertools.product(range(q), repeat=len(comp2)):
                x = cv.zeroL()
                for c, z in zip(coeffs, comp2):
                    if c:
                        x = x + z.scale_const(c)
                if solver.solve(x, tau)[0]:
                    occ.add(tau)
                    break
        assert all(F.mul(s, t) in occ for s in occ for t in occ)
        torus = tuple(sorted(occ))
        fdim = solver.solve(cv.zeroL(), 1)[1]
        order = len(occ) * q ** (len(base) + len(extra)) * q ** fdim
    return StabData((u, v), n, base + extra, extra, torus, order, fdim)


def cusp_bounds(cv, u, v):
    """The three stability levels (N0, N1, N) of a cusp direction."""
    if not is_heisenberg_pair(u, v):
        raise ValueError("(u, v) is not a Heisenberg pair")
    n0 = cusp_N0(cv, u, v)
    sd = unipotent_stab_space(cv, u, v, n0 + 1, with_torus=False)
    n1 = n0
    for b in sd.extra:
        n1 = max(n1, -b.piord())
    ideal = ideal_I(cv, u, v)
    num = 2 * (ideal.degree() + 2 * cv.genus - 1)
    den = cv.f_P * cv.d
    return n0, n1, max(-(-num // den), n1)


# ---------------------------------------------------------------------------
# membership in the full ray-vertex stabilizer


def _closed_form_member(cv, h, n):
    """Whether h (the corner conjugate of a group element) decomposes as
    unipotent(x, y) * torus(tau) with tau a unit constant and
    piord(y) >= -n."""
    zero, one = cv.zeroL(), cv.oneL()
    if not (h[1, 0] == zero and h[2, 0] == zero and h[2, 1] == zero):
        return False
    tau = h[0, 0]
    if tau.is_zero() or not tau.is_integral():
        return False
    tb = tau.as_belem()
    if not tb.c1.is_zero() or tb.c0.deg != 0:
        return False
    # tau is a nonzero constant, hence conjugation-fixed: the middle
    # diagonal entry collapses to 1 and the last to 1/tau
    if not (h[1, 1] == one and h[2, 2] == tau.inv()):
        return False
    x = h[1, 2] * tau
    y = h[0, 2] * tau
    if not is_heisenberg_pair(x, y):
        return False
    return y.is_zero() or y.piord() >= -n


def stab_characterize(ctx, g, u, v, n):
    """True iff g lies in the arithmetic group and fixes the n-th vertex
    of the (u, v)-ray.  Computed both by acting on the tree and by the
    closed-form triangular decomposition of the corner conjugate; the two
    must agree (hard error otherwise)."""
    cv = ctx.curve
    if n <= cusp_N0(cv, u, v):
        raise ValueError("level %d is not above the stability bound" % n)
    in_group = is_in_arithmetic_group(g)
    lam = ctx.ray_vertex((u, v), n)
    path_a = bool(in_group and ctx.act(g, lam) == lam)
    path_b = False
    if in_group:
        gc = corner_elem(cv, u, v)
        path_b = _closed_form_member(cv, gc * g * gc.inv(), n)
    if path_a != path_b:
        raise RuntimeError(
            "stabilizer characterization mismatch at level %d: "
            "tree action says %r, closed form says %r" % (n, path_a, path_b))
    return path_a


# ---------------------------------------------------------------------------
# cusps


def direction_line(cv, u, v):
    """The boundary line of the (u, v)-ray: the image of the first
    standard basis vector under the inverse corner element."""
    return corner_elem(cv, u, v).inv().col(0)


def cusp_class_of_line(cv, w):
    """Ideal class of the isotropic line spanned by w: the class of
    {lambda : lambda * w integral}, independent of the generator."""
    nz = [wi for wi in w if not wi.is_zero()]
    if not nz:
        raise ValueError("zero vector spans no line")
    if not herm_pairing(w, w).is_zero():
        raise ValueError("line is not isotropic")
    ideal = FracIdeal.from_gens(cv, nz).inverse()
    cls_, _ = pic_class(ideal)
    return cls_


class CuspDatum:
    """One cusp of the quotient graph: its ideal class, a representative
    direction, the ideal I, the bounds (N0, N1, N), and the tip vertex
    (the ray vertex at level N + 1)."""

    __slots__ = ("pic", "rep", "ideal_I", "N0", "N1", "N", "tip")

    def __init__(self, pic, rep, ideal, n0, n1, nn, tip):
        self.pic = pic
        self.rep = rep
        self.ideal_I = ideal
        self.N0 = n0
        self.N1 = n1
        self.N = nn
        self.tip = tip

    def __repr__(self):
        return ("CuspDatum(pic=%d, N0=%d, N1=%d, N=%d)"
                % (self.pic, self.N0, self.N1, self.N))


def standard_cusp_reps(cv):
    """One direction per ideal class: (0, 0) always, plus (0, rho/t) when
    the class group is nontrivial."""
    zero = cv.zeroL()
    reps = [(zero, zero)]
    if pic_order(cv) == 2:
        reps.append((zero, cv.rho_over_t()))
    return reps


def enumerate_cusps(ctx):
    """One CuspDatum per ideal class, with bounds and tip vertices."""
    cv = ctx.curve
    out = []
    for (u, v) in standard_cusp_reps(cv):
        pic = cusp_class_of_line(cv, direction_line(cv, u, v))
        n0, n1, nn = cusp_bounds(cv, u, v)
        tip = ctx.ray_vertex((u, v), nn + 1)
        out.append(CuspDatum(pic, (u, v), ideal_I(cv, u, v),
                             n0, n1, nn, tip))
    assert len(out) == pic_order(cv)
    assert len({c.pic for c in out}) == len(out)
    return out


# ---------------------------------------------------------------------------
# the constant-entry subgroup


def _det3_codes(F, c0, c1, c2):
    m = (c0, c1, c2)

    def mm(i, j):
        return m[j][i]

    s = 0
    for (j0, j1, j2), sign in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                               ((2, 1, 0), -1), ((1, 0, 2), -1),
                               ((0, 2, 1), -1)):
        term = F.mul(F.mul(mm(0, j0), mm(1, j1)), mm(2, j2))
        s = F.add(s, term if sign == 1 else F.neg(term))
    return s


def enumerate_GC(cv):
    """All determinant-one isometries with constant entries, by
    backtracking over columns with the pairing constraints."""
    F = cv.F
    q = cv.q

    def beta(x, y):
        return F.add(F.add(F.mul(x[0], y[2]), F.mul(x[1], y[1])),
                     F.mul(x[2], y[0]))

    vecs = [(a, b, c)
            for a in range(q) for b in range(q) for c in range(q)][1:]
    iso = [vv for vv in vecs if beta(vv, vv) == 0]
    unit = [vv for vv in vecs if beta(vv, vv) == 1]
    out = []
    for c0 in iso:
        for c1 in unit:
            if beta(c0, c1) != 0:
                continue
            # last column: pairing 1 against c0, 0 against c1, isotropic,
            # determinant one
            rows = [[c0[2], c0[1], c0[0]], [c1[2], c1[1], c1[0]]]
            sol, ker = lin_solve(F, rows, [1, 0])
            if sol is None:
                continue
            assert len(ker) == 1
            for lam in range(q):
                c2 = tuple(F.add(int(sol[i]), F.mul(lam, int(ker[0][i])))
                           for i in range(3))
                if beta(c2, c2) != 0:
                    continue
                if _det3_codes(F, c0, c1, c2) != 1:
                    continue
                ents = tuple(cv.lelem(int(col[i]))
                             for i in range(3) for col in (c0, c1, c2))
                out.append(Mat3(cv, ents))
    return out


def _const_code(e):
    """F_q code of a constant integral L-element."""
    assert e.den.deg == 0 and e.num.c1.is_zero()
    p = e.num.c0
    assert p.deg <= 0
    return int(p.coeffs[0]) if p.coeffs else 0


def gc_line_orbits(cv):
    """Number of orbits of the constant-entry subgroup on the isotropic
    residue lines at the base vertex (its valency in the quotient)."""
    from .tree import TreeContext, isotropic_lines_unimodular

    ctx = TreeContext(cv)
    lines = isotropic_lines_unimodular(ctx.standard_vertex(0))
    kap = cv.kappa
    mats = []
    for g in enumerate_GC(cv):
        mats.append([[_const_code(g[i, j]) for j in range(3)]
                     for i in range(3)])

    def normalize(vec):
        for c in vec:
            if c:
                inv = kap.inv(c)
                return tuple(kap.mul(inv, x) for x in vec)
        raise AssertionError("zero image of a line")

    lineset = set(lines)
    seen = set()
    orbits = 0
    for ln in lines:
        if ln in seen:
            continue
        orbits += 1
        seen.add(ln)
        stack = [ln]
        while stack:
            cur = stack.pop()
            for mat in mats:
                img = []
                for i in range(3):
                    acc = 0
                    for j in range(3):
                        if mat[i][j] and cur[j]:
                            acc = kap.add(acc, kap.mul(mat[i][j], cur[j]))
                    img.append(acc)
                rep = normalize(img)
                assert rep in lineset
                if rep not in seen:
                    seen.add(rep)
                    stack.append(rep)
    return orbits
