"""Exact 3x3 matrices over L, the rank-3 hermitian form of Witt index 1, and
the standard elements of its special unitary group.

Coordinates are indexed (-1, 0, +1) mapped to positions (0, 1, 2); the form is

    h(x, y) = x_{-1} conj(y_1) + x_0 conj(y_0) + x_1 conj(y_{-1}),

whose Gram matrix H is the antidiagonal of ones.  A matrix g lies in the
special unitary group iff its columns c_j satisfy h(c_j, c_k) = H_{jk} and
det g = 1; it lies in the arithmetic subgroup iff additionally every entry is
integral (in B).  All arithmetic here is exact (global fractions)."""

from .algebra import LElem


class Mat3:
    """3x3 matrix with LElem entries, row-major."""

    __slots__ = ("curve", "e")

    def __init__(self, curve, entries):
        assert len(entries) == 9
        self.curve = curve
        self.e = tuple(entries)

    @classmethod
    def from_rows(cls, curve, rows):
        ent = []
        for row in rows:
            for x in row:
                if isinstance(x, int):
                    x = curve.lelem(x)
                ent.append(x)
        return cls(curve, ent)

    @classmethod
    def identity(cls, curve):
        one, zero = curve.oneL(), curve.zeroL()
        return cls(curve, (one, zero, zero, zero, one, zero, zero, zero, one))

    def __getitem__(self, ij):
        i, j = ij
        return self.e[3 * i + j]

    def row(self, i):
        return self.e[3 * i:3 * i + 3]

    def col(self, j):
        return (self.e[j], self.e[3 + j], self.e[6 + j])

    def __eq__(self, other):
        return isinstance(other, Mat3) and self.e == other.e

    def __hash__(self):
        return hash(self.e)

    def __mul__(self, other):
        ent = []
        for i in range(3):
            for j in range(3):
                s = self.e[3 * i] * other.e[j]
                s = s + self.e[3 * i + 1] * other.e[3 + j]
                s = s + self.e[3 * i + 2] * other.e[6 + j]
                ent.append(s)
        return Mat3(self.curve, ent)

    def __neg__(self):
        return Mat3(self.curve, [-x for x in self.e])

    def scale(self, x):
        return Mat3(self.curve, [x * y for y in self.e])

    def transpose(self):
        e = self.e
        return Mat3(self.curve, (e[0], e[3], e[6], e[1], e[4], e[7],
                                 e[2], e[5], e[8]))

    def conj(self):
        return Mat3(self.curve, [x.conj() for x in self.e])

    def conj_t(self):
        return self.conj().transpose()

    def det(self):
        e = self.e
        return (e[0] * (e[4] * e[8] - e[5] * e[7])
                - e[1] * (e[3] * e[8] - e[5] * e[6])
                + e[2] * (e[3] * e[7] - e[4] * e[6]))

    def adjugate(self):
        e = self.e
        c = [e[4] * e[8] - e[5] * e[7], e[2] * e[7] - e[1] * e[8],
             e[1] * e[5] - e[2] * e[4],
             e[5] * e[6] - e[3] * e[8], e[0] * e[8] - e[2] * e[6],
             e[2] * e[3] - e[0] * e[5],
             e[3] * e[7] - e[4] * e[6], e[1] * e[6] - e[0] * e[7],
             e[0] * e[4] - e[1] * e[3]]
        return Mat3(self.curve, c)

    def inv(self):
        d = self.det()
        if d.is_zero():
            raise ZeroDivisionError("singular matrix")
        di = d.inv()
        return self.adjugate().scale(di)

    def apply(self, vec):
        out = []
        for i in range(3):
            s = self.e[3 * i] * vec[0]
            s = s + self.e[3 * i + 1] * vec[1]
            s = s + self.e[3 * i + 2] * vec[2]
            out.append(s)
        return tuple(out)

    def is_integral(self):
        return all(x.is_integral() for x in self.e)

    def __repr__(self):
        return "Mat3[%s]" % "; ".join(
            ", ".join(repr(x) for x in self.row(i)) for i in range(3))


def herm_pairing(x, y):
    """h(x, y) with coordinates ordered (-1, 0, +1)."""
    return (x[0] * y[2].conj() + x[1] * y[1].conj() + x[2] * y[0].conj())


def gram_entry(curve, j, k):
    return curve.oneL() if j + k == 2 else curve.zeroL()


def is_unitary(g):
    cv = g.curve
    for j in range(3):
        for k in range(j, 3):
            if herm_pairing(g.col(j), g.col(k)) != gram_entry(cv, j, k):
                return False
    return True


def is_special_unitary(g):
    return is_unitary(g) and g.det() == g.curve.oneL()


def is_in_arithmetic_group(g):
    """Integral entries + unitary + determinant one."""
    return g.is_integral() and is_special_unitary(g)


# ---------------------------------------------------------------------------
# standard elements


def is_heisenberg_pair(u, v):
    """N(u) + T(v) = 0, the condition for the unipotent matrices below."""
    return (u.norm() + v.trace()).is_zero()


def heis_compose(p1, p2):
    """Group law (u,v)*(u',v') = (u+u', v+v'-conj(u)u')."""
    u1, v1 = p1
    u2, v2 = p2
    return (u1 + u2, v1 + v2 - u1.conj() * u2)


def heis_inverse(p):
    u, v = p
    return (-u, v.conj())


def upper_unipotent(curve, u, v):
    """[[1, -conj(u), v], [0, 1, u], [0, 0, 1]] for a Heisenberg pair."""
    assert is_heisenberg_pair(u, v), "N(u) + T(v) != 0"
    one, zero = curve.oneL(), curve.zeroL()
    return Mat3(curve, (one, -u.conj(), v,
                        zero, one, u,
                        zero, zero, one))

def lower_unipotent(curve, u, v):
    """[[1, 0, 0], [u, 1, 0], [v, -conj(u), 1]] for a Heisenberg pair."""
    assert is_heisenberg_pair(u, v), "N(u) + T(v) != 0"
    one, zero = curve.oneL(), curve.zeroL()
    return Mat3(curve, (one, zero, zero,
                        u, one, zero,
                        v, -u.conj(), one))


def weyl_elem(curve):
    """The order-2 Weyl representative [[0,0,-1],[0,-1,0],[-1,0,0]]."""
    mone, zero = -curve.oneL(), curve.zeroL()
    return Mat3(curve, (zero, zero, mone,
                        zero, mone, zero,
                        mone, zero, zero))


def torus_elem(curve, tau):
    """diag(tau, conj(tau)/tau, 1/conj(tau)) for tau != 0."""
    assert not tau.is_zero()
    zero = curve.zeroL()
    ct = tau.conj()
    return Mat3(curve, (tau, zero, zero,
                        zero, ct.div(tau), zero,
                        zero, zero, ct.inv()))


def corner_elem(curve, u, v):
    """g_{u,v} = lower_unipotent(u,v) * weyl =
    [[0,0,-1],[0,-1,-u],[-1,conj(u),-v]]; conjugates the standard cusp ray
    to the (u, v)-direction one."""
    return lower_unipotent(curve, u, v) * weyl_elem(curve)
