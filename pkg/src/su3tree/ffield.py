"""Finite fields with dense operation tables, polynomials over them, and
table-driven linear algebra.

Field elements are plain Python ints in range(q).  For a prime field F_p the
int is the residue itself.  For an extension field of order q = p^k the int
packs the coefficient vector of the element w.r.t. the power basis of a fixed
irreducible polynomial, least significant digit first (base-p digits).  A
quadratic extension built with quadratic_ext packs (z0, z1) as z0 + q*z1 where
the adjoined generator r satisfies r**2 = a for a chosen non-square a.

All binary operations go through dense numpy tables, so they are uniform in q
and vectorize with fancy indexing.
"""

import itertools

import numpy as np


def _modp_poly_mulmod(u, v, f, p):
    # u, v, f lists of base-p digits (ascending); f monic of degree k
    k = len(f) - 1
    prod = [0] * (len(u) + len(v) - 1)
    for i, ui in enumerate(u):
        if ui:
            for j, vj in enumerate(v):
                prod[i + j] = (prod[i + j] + ui * vj) % p
    for i in range(len(prod) - 1, k - 1, -1):
        c = prod[i]
        if c:
            prod[i] = 0
            for j in range(k):
                prod[i - k + j] = (prod[i - k + j] - c * f[j]) % p
    out = prod[:k]
    out += [0] * (k - len(out))
    return out


def _modp_is_irreducible(coeffs, p):
    # coeffs ascending, monic; degree <= 4 suffices here, trial division
    k = len(coeffs) - 1
    if coeffs[0] == 0:
        return k == 1
    for r in range(p):
        if sum(c * pow(r, i, p) for i, c in enumerate(coeffs)) % p == 0:
            return False
    if k < 4:
        return True
    # k == 4: also exclude monic quadratic factors
    for b in range(p):
        for c in range(p):
            # divide coeffs by x^2 + b x + c synthetically
            rem = list(coeffs)
            for i in range(k, 1, -1):
                lead = rem[i]
                if lead:
                    rem[i] = 0
                    rem[i - 1] = (rem[i - 1] - lead * b) % p
                    rem[i - 2] = (rem[i - 2] - lead * c) % p
            if rem[0] == 0 and rem[1] == 0:
                return False
    return True


def _find_irreducible(p, k):
    for tail in itertools.product(range(p), repeat=k):
        coeffs = list(tail) + [1]
        if _modp_is_irreducible(coeffs, p):
            return coeffs
    raise ValueError("no irreducible polynomial found (impossible)")


def _factor_prime_power(q):
    for p in range(2, q + 1):
        if q % p == 0:
            k = 0
            m = q
            while m % p == 0:
                m //= p
                k += 1
            if m != 1:
                raise ValueError("%d is not a prime power" % q)
            return p, k
    raise ValueError("bad order %d" % q)


class FF:
    """Finite field of order q with dense int tables.

    Attributes: q, p, k, zero (=0), one (=1).  Binary operations take and
    return Python ints.  conj is the involution x -> x**sq_base when the field
    was built as a quadratic extension of a field of order sq_base, else the
    identity.
    """

    def __init__(self, q, _tables=None):
        p, k = _factor_prime_power(q)
        self.q = q
        self.p = p
        self.k = k
        self.zero = 0
        self.one = 1
        self.base = None
        self.gen = None
        self.gen_square = None
        if _tables is not None:
            add_t, mul_t = _tables
        else:
            add_t, mul_t = self._build_tables(p, k)
        self.add_t = add_t
        self.mul_t = mul_t
        self.neg_t = self._build_neg()
        self.sub_t = self.add_t[:, self.neg_t]
        self.inv_t = self._build_inv()
        self.conj_t = np.arange(q, dtype=self.add_t.dtype)
        sq = np.zeros(q, dtype=bool)
        sq[self.mul_t[np.arange(q), np.arange(q)]] = True
        self.square_mask = sq
        self.frob_p_t = self._pow_table(p)

    @staticmethod
    def _build_tables(p, k):
        q = p**k
        dtype = np.int64
        if k == 1:
            idx = np.arange(q, dtype=dtype)
            add_t = (idx[:, None] + idx[None, :]) % q
            mul_t = (idx[:, None] * idx[None, :]) % q
            return add_t.astype(dtype), mul_t.astype(dtype)
        f = _find_irreducible(p, k)
        digits = [[(z // p**i) % p for i in range(k)] for z in range(q)]
        add_t = np.zeros((q, q), dtype=dtype)
        mul_t = np.zeros((q, q), dtype=dtype)
        for z in range(q):
            for w in range(q):
                s = [(digits[z][i] + digits[w][i]) % p for i in range(k)]
                add_t[z, w] = sum(s[i] * p**i for i in range(k))
                m = _modp_poly_mulmod(digits[z], digits[w], f, p)
                mul_t[z, w] = sum(m[i] * p**i for i in range(k))
        return add_t, mul_t

    def _build_neg(self):
        q = self.q
        neg = np.zeros(q, dtype=self.add_t.dtype)
        zero_hits = np.argwhere(self.add_t == 0)
        neg[zero_hits[:, 0]] = zero_hits[:, 1]
        return neg

    def _build_inv(self):
        q = self.q
        inv = np.zeros(q, dtype=self.add_t.dtype)
        one_hits = np.argwhere(self.mul_t == 1)
        inv[one_hits[:, 0]] = one_hits[:, 1]
        inv[0] = 0
        return inv

    def _pow_table(self, e):
        out = np.arange(self.q, dtype=self.add_t.dtype)
        acc = np.zeros(self.q, dtype=self.add_t.dtype) + 1
        base = out.copy()
        n = e
        while n:
            if n & 1:
                acc = self.mul_t[acc, base]
            base = self.mul_t[base, base]
            n >>= 1
        return acc

    def add(self, a, b):
        return int(self.add_t[a, b])

    def sub(self, a, b):
        return int(self.sub_t[a, b])

    def mul(self, a, b):
        return int(self.mul_t[a, b])

    def neg(self, a):
        return int(self.neg_t[a])

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        return int(self.inv_t[a])

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, n):
        if n < 0:
            a = self.inv(a)
            n = -n
        r = 1
        while n:
            if n & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            n >>= 1
        return r

    def conj(self, a):
        return int(self.conj_t[a])

    def is_square(self, a):
        return bool(self.square_mask[a])

    def first_nonsquare(self):
        for a in range(1, self.q):
            if not self.square_mask[a]:
                return a
        raise ValueError("every element is a square (q even?)")

    def elements(self):
        return range(self.q)

    def __repr__(self):
        return "FF(%d)" % self.q


def quadratic_ext(F, a):
    """Quadratic extension F(r) with r**2 = a, a a non-square of F.

    Elements packed as z0 + F.q * z1 meaning z0 + z1*r.  The result's conj
    is the nontrivial automorphism fixing F (r -> -r), and .gen is r,
    .base is F.
    """
    if F.is_square(a):
        raise ValueError("a=%d is a square in F_%d" % (a, F.q))
    q = F.q
    Q = q * q
    idx = np.arange(Q, dtype=np.int64)
    z0, z1 = idx % q, idx // q
    A0 = F.add_t[z0[:, None], z0[None, :]]
    A1 = F.add_t[z1[:, None], z1[None, :]]
    add_t = A0 + q * A1
    m00 = F.mul_t[z0[:, None], z0[None, :]]
    m11 = F.mul_t[z1[:, None], z1[None, :]]
    m01 = F.mul_t[z0[:, None], z1[None, :]]
    m10 = F.mul_t[z1[:, None], z0[None, :]]
    re = F.add_t[m00, F.mul_t[a, m11]]
    im = F.add_t[m01, m10]
    mul_t = re + q * im
    E = FF.__new__(FF)
    E.q = Q
    E.p = F.p
    E.k = F.k * 2
    E.zero = 0
    E.one = 1
    E.base = F
    E.add_t = add_t
    E.mul_t = mul_t
    E.neg_t = E._build_neg()
    E.sub_t = E.add_t[:, E.neg_t]
    E.inv_t = E._build_inv()
    E.conj_t = z0 + q * F.neg_t[z1]
    E.gen = q
    E.gen_square = a
    sqm = np.zeros(Q, dtype=bool)
    sqm[E.mul_t[idx, idx]] = True
    E.square_mask = sqm
    E.frob_p_t = E._pow_table(E.p)
    return E


class Poly:
    """Dense polynomial over an FF; coeffs ascending, no trailing zeros.

    Immutable; the zero polynomial has coeffs == () and deg == -1.
    """

    __slots__ = ("F", "coeffs")

    def __init__(self, F, coeffs):
        n = len(coeffs)
        while n and coeffs[n - 1] == 0:
            n -= 1
        self.F = F
        self.coeffs = tuple(coeffs[:n])

    @classmethod
    def const(cls, F, c):
        return cls(F, (c,))

    @classmethod
    def zero(cls, F):
        return cls(F, ())

    @classmethod
    def one(cls, F):
        return cls(F, (1,))

    @classmethod
    def t(cls, F):
        return cls(F, (0, 1))

    @property
    def deg(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def lc(self):
        if not self.coeffs:
            raise ValueError("leading coefficient of zero polynomial")
        return self.coeffs[-1]

    def __eq__(self, other):
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        F = self.F
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = F.add(out[i], c)
        return Poly(F, out)

    def __neg__(self):
        F = self.F
        return Poly(F, [F.neg(c) for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        F = self.F
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly(F, ())
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                row = F.mul_t[ai]
                for j, bj in enumerate(b):
                    if bj:
                        out[i + j] = F.add(out[i + j], int(row[bj]))
        return Poly(F, out)

    def scale(self, c):
        F = self.F
        return Poly(F, [F.mul(c, x) for x in self.coeffs])

    def shift(self, k):
        if self.is_zero():
            return self
        if k < 0:
            assert all(c == 0 for c in self.coeffs[:(-k)])
            return Poly(self.F, self.coeffs[-k:])
        return Poly(self.F, (0,) * k + self.coeffs)

    def divmod(self, other):
        F = self.F
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly(F, ()), self
        quo = [0] * (dq + 1)
        ilc = F.inv(other.lc())
        ocs = other.coeffs
        for i in range(dq, -1, -1):
            c = F.mul(rem[i + len(ocs) - 1], ilc)
            quo[i] = c
            if c:
                for j, oc in enumerate(ocs):
                    rem[i + j] = F.sub(rem[i + j], F.mul(c, oc))
        return Poly(F, quo), Poly(F, rem)

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def monic(self):
        if self.is_zero():
            return self
        return self.scale(self.F.inv(self.lc()))

    def gcd(self, other):
        a, b = self, other
        while not b.is_zero():
            a, b = b, a % b
        return a.monic()

    def xgcd(self, other):
        # returns (g, u, v) with u*self + v*other == g, g monic (or zero)
        F = self.F
        r0, r1 = self, other
        s0, s1 = Poly.one(F), Poly.zero(F)
        t0, t1 = Poly.zero(F), Poly.one(F)
        while not r1.is_zero():
            q, r = r0.divmod(r1)
            r0, r1 = r1, r
            s0, s1 = s1, s0 - q * s1
            t0, t1 = t1, t0 - q * t1
        if r0.is_zero():
            return r0, s0, t0
        c = F.inv(r0.lc())
        return r0.monic(), s0.scale(c), t0.scale(c)

    def lcm(self, other):
        if self.is_zero() or other.is_zero():
            return Poly.zero(self.F)
        return ((self * other) // self.gcd(other)).monic()

    def eval(self, x):
        F = self.F
        acc = 0
        for c in reversed(self.coeffs):
            acc = F.add(F.mul(acc, x), c)
        return acc

    def __repr__(self):
        if self.is_zero():
            return "0"
        parts = []
        for i, c in enumerate(self.coeffs):
            if c:
                if i == 0:
                    parts.append(str(c))
                elif i == 1:
                    parts.append("%s*t" % c if c != 1 else "t")
                else:
                    parts.append("%s*t^%d" % (c, i) if c != 1 else "t^%d" % i)
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# linear algebra over an FF, matrices as numpy int arrays with values in
# range(q)


def lin_rref(F, M):
    """Reduced row echelon form.  Returns (R, pivot_cols)."""
    R = np.array(M, dtype=np.int64, copy=True)
    if R.ndim != 2:
        raise ValueError("matrix expected")
    m, n = R.shape
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        col = R[r:, c]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            R[[r, p]] = R[[p, r]]
        inv = F.inv_t[R[r, c]]
        R[r] = F.mul_t[inv, R[r]]
        for i in range(m):
            if i != r and R[i, c]:
                R[i] = F.sub_t[R[i], F.mul_t[R[i, c], R[r]]]
        pivots.append(c)
        r += 1
    return R, pivots


def lin_kernel(F, M):
    """Basis of the right kernel of M, rows of the returned array."""
    M = np.array(M, dtype=np.int64)
    m, n = M.shape
    R, pivots = lin_rref(F, M)
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for bi, fc in enumerate(free):
        basis[bi, fc] = 1
        for r, pc in enumerate(pivots):
            basis[bi, pc] = F.neg_t[R[r, fc]]
    return basis

def lin_solve(F, A, b):
    """Solve A x = b.  Returns (particular_solution, kernel_basis) or
    (None, kernel_basis) when inconsistent."""
    A = np.array(A, dtype=np.int64)
    b = np.array(b, dtype=np.int64)
    m, n = A.shape
    aug = np.concatenate([A, b.reshape(m, 1)], axis=1)
    R, pivots = lin_rref(F, aug)
    ker = lin_kernel(F, A)
    if n in pivots:
        return None, ker
    x = np.zeros(n, dtype=np.int64)
    for r, pc in enumerate(pivots):
        x[pc] = R[r, n]
    return x, ker


def lin_matmul(F, A, B):
    A = np.array(A, dtype=np.int64)
    B = np.array(B, dtype=np.int64)
    out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    for k in range(A.shape[1]):
        out = F.add_t[out, F.mul_t[A[:, k][:, None], B[k][None, :]]]
    return out
