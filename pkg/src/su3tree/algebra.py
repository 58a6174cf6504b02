"""Global arithmetic: the rational function field K = F_q(t), its quadratic
extension L with involution, the coefficient rings A = F_q[t] and B (the
integral closure of A in L), fractional B-ideals, Riemann-Roch spaces for the
place at infinity, and the ideal class group.

Two curve families are supported, both of genus 0 with one place Q above the
place at infinity P of K:

  * "ramified":    B = A[rho], rho**2 = t          (e_P = 2, f_P = 1)
  * "unramified":  B = A[rho], rho**2 = a*t**2 - t (e_P = 1, f_P = 2),
                   a a non-square in F_q

Elements of B are pairs (c0, c1) of polynomials meaning c0 + c1*rho; elements
of L are such pairs over a monic polynomial denominator.  Valuations at the
place above infinity are stored as integer "pi-orders": piord(x) = e_P *
omega(x), where omega is normalized by omega(t) = -1.  The pi-order of a
nonzero element is exact (computed from degrees, no series needed) because
the two basis components never cancel at leading order: their leading
contributions live at different parities (ramified) or differ by the
irrational factor sqrt(a) in the residue field (unramified).
"""

import itertools

from .ffield import FF, Poly, quadratic_ext

PIORD_INF = 10**9


class Curve:
    """Configuration of one curve family over a fixed odd prime-power q."""

    def __init__(self, q, family, a=None):
        if q < 3 or q % 2 == 0:
            raise ValueError("q must be an odd prime power >= 3, got %d" % q)
        try:
            F = FF(q)
        except ValueError as e:
            raise ValueError("q must be an odd prime power: %s" % e)
        if family not in ("ramified", "unramified"):
            raise ValueError("family must be 'ramified' or 'unramified'")
        self.q = q
        self.family = family
        self.F = F
        self.d = 1
        self.genus = 0
        if family == "ramified":
            self.e_P, self.f_P = 2, 1
            self.a = None
            self.rho_sq = Poly.t(F)  # rho**2 = t
            self.kappa = F  # residue field at the place above infinity
        else:
            if a is None:
                a = F.first_nonsquare()
            a = int(a)
            if not (0 < a < q) or F.is_square(a):
                raise ValueError(
                    "a must be a non-square unit in F_%d, got %d" % (q, a))
            self.e_P, self.f_P = 1, 2
            self.a = a
            t = Poly.t(F)
            self.rho_sq = Poly.const(F, a) * t * t - t  # rho**2 = a t^2 - t
            # residue field F_{q^2} = F_q(sqrt(a)); F_q embeds as low digit
            self.kappa = quadratic_ext(F, a)
        self.zeroA = Poly.zero(F)
        self.oneA = Poly.one(F)
        self.tA = Poly.t(F)

    def __repr__(self):
        if self.family == "ramified":
            return "Curve(q=%d, ramified)" % self.q
        return "Curve(q=%d, unramified, a=%d)" % (self.q, self.a)

    def belem(self, c0, c1=None):
        if isinstance(c0, int):
            c0 = Poly.const(self.F, c0 % self.q)
        if c1 is None:
            c1 = self.zeroA
        elif isinstance(c1, int):
            c1 = Poly.const(self.F, c1 % self.q)
        return BElem(self, c0, c1)

    def lelem(self, c0, c1=None, den=None):
        num = self.belem(c0, c1)
        return LElem(self, num, den if den is not None else self.oneA)

    def zeroL(self):
        return self.lelem(0)

    def oneL(self):
        return self.lelem(1)

    def rho(self):
        return self.belem(0, 1)

    def rho_over_t(self):
        """The standard nonzero cusp parameter rho/t."""
        return LElem(self, self.belem(0, 1), self.tA)


class BElem:
    """Element c0 + c1*rho of the ring B; c0, c1 in A = F_q[t]."""

    __slots__ = ("curve", "c0", "c1")

    def __init__(self, curve, c0, c1):
        self.curve = curve
        self.c0 = c0
        self.c1 = c1

    def is_zero(self):
        return self.c0.is_zero() and self.c1.is_zero()

    def __eq__(self, other):
        return (isinstance(other, BElem) and self.c0 == other.c0
                and self.c1 == other.c1)

    def __hash__(self):
        return hash((self.c0.coeffs, self.c1.coeffs))

    def __add__(self, other):
        return BElem(self.curve, self.c0 + other.c0, self.c1 + other.c1)

    def __sub__(self, other):
        return BElem(self.curve, self.c0 - other.c0, self.c1 - other.c1)

    def __neg__(self):
        return BElem(self.curve, -self.c0, -self.c1)

    def __mul__(self, other):
        rs = self.curve.rho_sq
        c0 = self.c0 * other.c0 + rs * (self.c1 * other.c1)
        c1 = self.c0 * other.c1 + self.c1 * other.c0
        return BElem(self.curve, c0, c1)

    def conj(self):
        return BElem(self.curve, self.c0, -self.c1)

    def norm(self):
        """N(x) = x * conj(x), an element of A."""
        return self.c0 * self.c0 - self.curve.rho_sq * (self.c1 * self.c1)

    def trace(self):
        return self.c0 + self.c0

    def scale(self, p):
        return BElem(self.curve, self.c0 * p, self.c1 * p)

    def piord(self):
        """e_P * omega(x); PIORD_INF for zero."""
        cv = self.curve
        cand = []
        if not self.c0.is_zero():
            cand.append(-cv.e_P * self.c0.deg)
        if not self.c1.is_zero():
            if cv.family == "ramified":
                cand.append(-2 * self.c1.deg - 1)
            else:
                cand.append(-self.c1.deg - 1)
        return min(cand) if cand else PIORD_INF

    def lead_res(self):
        """Leading residue coefficient: the kappa_Q-coefficient of
        pi**piord(x) in the local expansion."""
        cv = self.curve
        p = self.piord()
        assert p != PIORD_INF
        if cv.family == "ramified":
            return self.c0.lc() if p % 2 == 0 else self.c1.lc()
        k = cv.kappa
        out = 0
        if not self.c0.is_zero() and -self.c0.deg == p:
            out = k.add(out, self.c0.lc())
        if not self.c1.is_zero() and -self.c1.deg - 1 == p:
            out = k.add(out, k.mul(self.c1.lc(), k.gen))
        return out

    def __repr__(self):
        return "(%s) + (%s)*rho" % (self.c0, self.c1)


class LElem:
    """Element of L = Frac(B) as num/den with num in B, den in A monic and
    gcd(content(num), den) = 1.  The representation is canonical, so == is
    structural equality of values."""

    __slots__ = ("curve", "num", "den")

    def __init__(self, curve, num, den):
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        g = num.c0.gcd(num.c1).gcd(den)
        if g.deg > 0:
            num = BElem(curve, num.c0 // g, num.c1 // g)
            den = den // g
        if not den.is_zero() and den.lc() != 1:
            c = curve.F.inv(den.lc())
            cc = Poly.const(curve.F, c)
            num = num.scale(cc)
            den = den.scale(c)
        self.curve = curve
        self.num = num
        self.den = den

    @classmethod
    def from_b(cls, x):
        return cls(x.curve, x, x.curve.oneA)

    def is_zero(self):
        return self.num.is_zero()

    def is_integral(self):
        return self.den.deg == 0

    def as_belem(self):
        assert self.is_integral()
        return self.num

    def __eq__(self, other):
        return (isinstance(other, LElem) and self.num == other.num
                and self.den == other.den)

    def __hash__(self):
        return hash((self.num, self.den.coeffs))

    def __add__(self, other):
        num = self.num.scale(other.den) + other.num.scale(self.den)
        return LElem(self.curve, num, self.den * other.den)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return LElem(self.curve, -self.num, self.den)

    def __mul__(self, other):
        return LElem(self.curve, self.num * other.num, self.den * other.den)

    def conj(self):
        return LElem(self.curve, self.num.conj(), self.den)

    def inv(self):
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        n = self.num.norm()  # 1/x = den * conj(num) / N(num)
        return LElem(self.curve, self.num.conj().scale(self.den), n)

    def div(self, other):
        return self * other.inv()

    def norm(self):
        cv = self.curve
        return LElem(cv, BElem(cv, self.num.norm(), cv.zeroA),
                     self.den * self.den)

    def trace(self):
        cv = self.curve
        return LElem(cv, BElem(cv, self.num.trace(), cv.zeroA), self.den)

    def piord(self):
        if self.num.is_zero():
            return PIORD_INF
        return self.num.piord() + self.curve.e_P * self.den.deg

    def lead_res(self):
        return self.num.lead_res()

    def scale_t_power(self, k):
        """Multiply by t**k (k may be negative)."""
        cv = self.curve
        if k >= 0:
            num = BElem(cv, self.num.c0.shift(k), self.num.c1.shift(k))
            return LElem(cv, num, self.den)
        return LElem(cv, self.num, self.den.shift(-k))

    def scale_const(self, c):
        return LElem(self.curve, self.num.scale(Poly.const(self.curve.F, c)),
                     self.den)

    def __repr__(self):
        if self.den.deg == 0:
            return repr(self.num)
        return "(%s) / (%s)" % (self.num, self.den)


# ---------------------------------------------------------------------------
# Hermite normal form over A for module rows


def _hnf_rows(F, rows, nmain):
    """Row HNF over A = F_q[t].  rows: lists of Poly of equal length >=
    nmain; the first nmain columns are echelonized with pivots chosen right
    to left, extra columns ride along (relation tracking).  Returns
    (pivot_rows, residual_rows): pivot_rows is a list of (col, row) with
    monic pivot and entries above reduced; residual_rows have zero main
    part."""
    work = [list(r) for r in rows]
    pivot_rows = []
    for col in range(nmain - 1, -1, -1):
        live = [r for r in work if not r[col].is_zero()]
        dead = [r for r in work if r[col].is_zero()]
        while len(live) > 1:
            live.sort(key=lambda r: r[col].deg)
            small = live[0]
            nxt = [small]
            for r in live[1:]:
                quo = r[col] // small[col]
                if not quo.is_zero():
                    for j in range(len(r)):
                        r[j] = r[j] - quo * small[j]
                (dead if r[col].is_zero() else nxt).append(r)
            live = nxt
            if len(live) == 1:
                break
        if live:
            piv = live[0]
            cpi = Poly.const(F, F.inv(piv[col].lc()))
            for j in range(len(piv)):
                piv[j] = cpi * piv[j]
            pivot_rows.append((col, piv))
        work = dead
    for idx, (col, piv) in enumerate(pivot_rows):
        for _, other in pivot_rows[:idx]:
            if not other[col].is_zero():
                quo = other[col] // piv[col]
                if not quo.is_zero():
                    for j in range(len(other)):
                        other[j] = other[j] - quo * piv[j]
    return pivot_rows, work


class FracIdeal:
    """Fractional B-ideal as a canonical A-basis over a monic denominator:
    I = ( A*(a, 0) + A*(c, b) ) / den in coordinates w.r.t. (1, rho);
    a, b monic, deg c < deg a, content coprime to den."""

    __slots__ = ("curve", "a", "c", "b", "den")

    def __init__(self, curve, a, c, b, den):
        F = curve.F
        assert not a.is_zero() and not b.is_zero(), "ideal must have full rank"
        g = a.gcd(b).gcd(c).gcd(den)
        if g.deg > 0:
            a, c, b, den = a // g, c // g, b // g, den // g
        if den.lc() != 1:
            co = Poly.const(F, F.inv(den.lc()))
            a, c, b, den = co * a, co * c, co * b, co * den
        if a.lc() != 1:
            a = a.monic()
        if b.lc() != 1:
            lam = Poly.const(F, F.inv(b.lc()))  # scale the whole second row
            c, b = lam * c, lam * b
        c = c % a
        self.curve = curve
        self.a, self.c, self.b, self.den = a, c, b, den

    # -- construction -------------------------------------------------------

    @classmethod
    def from_gens(cls, curve, gens):
        """B-module generated by the given LElems (must be nonzero)."""
        F = curve.F
        rho_sq = curve.rho_sq
        nz = [g for g in gens if not g.is_zero()]
        assert nz, "zero module"
        D = curve.oneA
        for g in nz:
            D = D.lcm(g.den)
        rows = []
        for g in nz:
            m = D // g.den
            x0, x1 = g.num.c0 * m, g.num.c1 * m
            rows.append([x0, x1])
            rows.append([rho_sq * x1, x0])  # rho * g
        piv, _ = _hnf_rows(F, rows, 2)
        cols = dict(piv)
        assert 0 in cols and 1 in cols, "module not of full rank"
        return cls(curve, cols[0][0], cols[1][0], cols[1][1], D)

    @classmethod
    def unit_ideal(cls, curve):
        return cls(curve, curve.oneA, curve.zeroA, curve.oneA, curve.oneA)

    def gens(self):
        """The two HNF generators as LElems."""
        cv = self.curve
        return [LElem(cv, BElem(cv, self.a, cv.zeroA), self.den),
                LElem(cv, BElem(cv, self.c, self.b), self.den)]

    # -- predicates ---------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, FracIdeal) and self.a == other.a
                and self.c == other.c and self.b == other.b
                and self.den == other.den)

    def __hash__(self):
        return hash((self.a.coeffs, self.c.coeffs, self.b.coeffs,
                     self.den.coeffs))

    def is_integral(self):
        return self.den.deg == 0

    def degree(self):
        """deg I = dim_F(B/I) for integral I; deg(I/c) = deg I - 2 deg c."""
        return self.a.deg + self.b.deg - 2 * self.den.deg

    def contains(self, x):
        if x.is_zero():
            return True
        D = self.den.lcm(x.den)
        mx, mi = D // x.den, D // self.den
        n0, n1 = x.num.c0 * mx, x.num.c1 * mx
        sa, sc, sb = self.a * mi, self.c * mi, self.b * mi
        qb, rb = n1.divmod(sb)
        if not rb.is_zero():
            return False
        n0 = n0 - qb * sc
        return (n0 % sa).is_zero()

    def contains_ideal(self, other):
        return all(self.contains(g) for g in other.gens())

    # -- arithmetic ----------------------------------------------------------

    def mul(self, other):
        gs = [g * h for g in self.gens() for h in other.gens()]
        return FracIdeal.from_gens(self.curve, gs)

    def mul_elem(self, x):
        assert not x.is_zero()
        return FracIdeal.from_gens(self.curve, [g * x for g in self.gens()])

    def add(self, other):
        return FracIdeal.from_gens(self.curve, self.gens() + other.gens())

    def intersect(self, other):
        F = self.curve.F
        cv = self.curve
        zero, one = cv.zeroA, cv.oneA
        D = self.den.lcm(other.den)
        m1, m2 = D // self.den, D // other.den
        g1 = [[self.a * m1, zero], [self.c * m1, self.b * m1]]
        g2 = [[other.a * m2, zero], [other.c * m2, other.b * m2]]
        rows = []
        for i, g in enumerate(g1 + g2):
            tail = [zero] * 4
            tail[i] = one
            rows.append(g + tail)
        _, rels = _hnf_rows(F, rows, 2)
        assert len(rels) == 2, "expected two relations among four generators"
        gens = []
        for r in rels:
            al, be = r[2], r[3]
            x0 = al * g1[0][0] + be * g1[1][0]
            x1 = be * g1[1][1]
            gens.append(LElem(cv, BElem(cv, x0, x1), D))
        return FracIdeal.from_gens(cv, gens)

    def conj_ideal(self):
        return FracIdeal.from_gens(self.curve,
                                   [g.conj() for g in self.gens()])

    def inverse(self):
        """I^{-1} = conj(I) / N(I); valid because B is the maximal order.
        The norm ideal of I is generated by det of the A-basis = a*b/den^2."""
        cv = self.curve
        nrm = LElem(cv, BElem(cv, self.a * self.b, cv.zeroA),
                    self.den * self.den)
        cj = self.conj_ideal()
        ninv = nrm.inv()
        return FracIdeal.from_gens(cv, [g * ninv for g in cj.gens()])

    # -- reduced bases and Riemann-Roch spaces -------------------------------

    def reduced_basis(self):
        """A-basis (g1, g2), piord(g1) >= piord(g2), with no leading-term
        cancellation: every A-combination has piord equal to the min over
        its two terms.  Reduction: while the lower basis vector's leading
        residue is an F_q-multiple of the other's at a reachable pi-order,
        subtract the matching t-power multiple."""
        cv = self.curve
        kap = cv.kappa
        g1, g2 = self.gens()
        for _ in range(10000):
            if g1.piord() < g2.piord():
                g1, g2 = g2, g1
            diff = g1.piord() - g2.piord()
            if diff % cv.e_P != 0:
                break
            k = diff // cv.e_P
            lam = kap.mul(g2.lead_res(), kap.inv(g1.lead_res()))
            if cv.family == "unramified" and lam >= cv.q:
                break  # ratio not in F_q: no A-multiple can cancel
            g2 = g2 - g1.scale_t_power(k).scale_const(lam)
            if g2.is_zero():
                raise AssertionError("dependent pair in reduced_basis")
        else:
            raise AssertionError("reduced_basis failed to terminate")
        if g1.piord() < g2.piord():
            g1, g2 = g2, g1
        return g1, g2

    def rr_space(self, m):
        """Basis of {x in I : piord(x) >= -m} as LElems."""
        out = []
        for g in self.reduced_basis():
            imax = (m + g.piord()) // self.curve.e_P
            for i in range(imax + 1):
                out.append(g.scale_t_power(i))
        return out

    def rr_dim(self, m):
        dim = 0
        for g in self.reduced_basis():
            imax = (m + g.piord()) // self.curve.e_P
            dim += max(0, imax + 1)
        return dim

    def __repr__(self):
        return "FracIdeal(a=%s; c=%s; b=%s; den=%s)" % (self.a, self.c,
                                                        self.b, self.den)


# ---------------------------------------------------------------------------
# class group


def pic_class(I):
    """(0, generator) if I is principal, else (1, None).

    Complete by a pole bound: a generator z of the integral rescaling
    J = den*I has deg N(z) = deg J, hence piord(z) = -e_P*deg(J)/2, so z
    lies in the finite space {x in J : piord(x) >= -ceil(e_P deg(J)/2)},
    searched exhaustively."""
    cv = I.curve
    if I.is_integral():
        J = I
    else:
        J = I.mul_elem(LElem.from_b(BElem(cv, I.den, cv.zeroA)))
    D = J.degree()
    assert D >= 0
    mstar = (cv.e_P * D + 1) // 2
    basis = J.rr_space(mstar)
    for coeffs in itertools.product(range(cv.q), repeat=len(basis)):
        if not any(coeffs):
            continue
        z = cv.zeroL()
        for co, g in zip(coeffs, basis):
            if co:
                z = z + g.scale_const(co)
        if z.is_zero():
            continue
        if FracIdeal.from_gens(cv, [z]) == J:
            if not I.is_integral():
                z = z * LElem(cv, BElem(cv, cv.oneA, cv.zeroA), I.den)
            return 0, z
    return 1, None


def pic_order(curve):
    """Order of Pic(B): 1 for the ramified family (B is then a polynomial
    ring, hence a PID), 2 for the unramified one (established computationally
    in the test suite: the prime above t is non-principal, its square is)."""
    return 1 if curve.family == "ramified" else 2


# ---------------------------------------------------------------------------
# ideals attached to a cusp direction (u, v)


def ideal_p(curve, u, v):
    """B + B*u + B*v for L-elements u, v."""
    return FracIdeal.from_gens(curve, [curve.oneL(), u, v])


def ideal_b(curve, u):
    return FracIdeal.from_gens(curve, [curve.oneL(), u])


def ideal_q(curve, u, v):
    """The ideal whose inverse is p(conj(u), v) * p(u, conj(v))."""
    inv = ideal_p(curve, u.conj(), v).mul(ideal_p(curve, u, v.conj()))
    return inv.inverse()


def ideal_qtilde(curve, u, v):
    """The ideal whose inverse is b(u) * p(u, conj(v))."""
    inv = ideal_b(curve, u).mul(ideal_p(curve, u, v.conj()))
    return inv.inverse()
