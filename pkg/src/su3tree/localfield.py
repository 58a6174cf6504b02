"""The completion at the place above infinity: Laurent series in a
uniformizer pi over the residue field kappa_Q, with explicit precision
tracking, and the exact embeddings of the global rings.

Normalizations (piord = e_P * omega as in the global layer, but here piord is
just the pi-adic order):

  * ramified family:    pi = 1/rho, so t = pi**-2, rho = pi**-1,
                        kappa_Q = F_q, conj(pi) = -pi
  * unramified family:  pi = 1/t, kappa_Q = F_{q^2} = F_q(sqrt(a)),
                        rho = sqrt(a) * pi**-1 * sqrt(1 - pi/a),
                        conj = coefficient Frobenius (fixes pi)

A LocalElem stores (lead, coeffs, prec): the series sum(coeffs[i] *
pi**(lead+i)) + O(pi**prec), with prec None meaning the element is exact (the
tail is identically zero).  Elements that are zero to their known precision
have empty coeffs; asking for their order raises PrecisionLoss, which callers
handle by re-running with a larger budget."""

from .algebra import LElem, PIORD_INF


class PrecisionLoss(Exception):
    """An element is zero to working precision, so its order is unknown."""


class LocalElem:
    __slots__ = ("lf", "lead", "coeffs", "prec")

    def __init__(self, lf, lead, coeffs, prec):
        # normalize: strip leading zeros, clamp coeffs to prec, strip
        # trailing zeros of exact elements
        if prec is not None and len(coeffs) > prec - lead:
            coeffs = coeffs[:max(0, prec - lead)]
        i = 0
        while i < len(coeffs) and coeffs[i] == 0:
            i += 1
        lead += i
        coeffs = coeffs[i:]
        if prec is None:
            j = len(coeffs)
            while j and coeffs[j - 1] == 0:
                j -= 1
            coeffs = coeffs[:j]
        if not coeffs:
            lead = 0
        self.lf = lf
        self.lead = lead
        self.coeffs = tuple(coeffs)
        self.prec = prec

    def is_known_zero(self):
        return not self.coeffs and self.prec is None

    def piord(self):
        """pi-adic order; PIORD_INF for exact zero, PrecisionLoss when the
        element vanishes to its finite precision."""
        if self.coeffs:
            return self.lead
        if self.prec is None:
            return PIORD_INF
        raise PrecisionLoss("zero to O(pi^%d)" % self.prec)

    def piord_at_least(self, n):
        """True if the element is known to have order >= n."""
        if self.coeffs:
            return self.lead >= n
        return self.prec is None or self.prec >= n

    def coeff(self, e):
        """Coefficient of pi**e; raises PrecisionLoss if e is beyond the
        known range."""
        if self.prec is not None and e >= self.prec:
            raise PrecisionLoss("coefficient of pi^%d beyond O(pi^%d)"
                                % (e, self.prec))
        i = e - self.lead
        if not self.coeffs or i < 0 or i >= len(self.coeffs):
            return 0
        return self.coeffs[i]

    def residue(self):
        if not self.piord_at_least(0):
            raise ValueError("residue of a non-integral element")
        return self.coeff(0)

    def __add__(self, other):
        lf = self.lf
        kap = lf.kappa
        prec = _min_prec(self.prec, other.prec)
        if not self.coeffs and not other.coeffs:
            return LocalElem(lf, 0, (), prec)
        if not self.coeffs:
            return LocalElem(lf, other.lead, other.coeffs, prec)
        if not other.coeffs:
            return LocalElem(lf, self.lead, self.coeffs, prec)
        lead = min(self.lead, other.lead)
        if prec is None:
            hi = max(self.lead + len(self.coeffs),
                     other.lead + len(other.coeffs))
        else:
            hi = prec
        out = [0] * (hi - lead)
        for i, c in enumerate(self.coeffs):
            if self.lead + i < hi:
                out[self.lead + i - lead] = c
        for i, c in enumerate(other.coeffs):
            if other.lead + i < hi:
                j = other.lead + i - lead
                out[j] = kap.add(out[j], c)
        return LocalElem(lf, lead, out, prec)

    def __neg__(self):
        kap = self.lf.kappa
        return LocalElem(self.lf, self.lead,
                         [kap.neg(c) for c in self.coeffs], self.prec)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        lf = self.lf
        kap = lf.kappa
        if self.is_known_zero() or other.is_known_zero():
            return LocalElem(lf, 0, (), None)
        # lower bounds for the orders of the two factors
        vx = self.lead if self.coeffs else self.prec
        vy = other.lead if other.coeffs else other.prec
        pp = None
        if self.prec is not None:
            pp = _min_prec(pp, self.prec + vy)
        if other.prec is not None:
            pp = _min_prec(pp, other.prec + vx)
        if not self.coeffs or not other.coeffs:
            # zero to precision times something: order bound only
            return LocalElem(lf, 0, (), pp)
        lead = self.lead + other.lead
        n = len(self.coeffs) + len(other.coeffs) - 1
        if pp is not None:
            n = min(n, pp - lead)
        out = [0] * max(n, 0)
        for i, a in enumerate(self.coeffs):
            if a == 0 or i >= len(out):
                continue
            row = kap.mul_t[a]
            for j, b in enumerate(other.coeffs):
                if b and i + j < len(out):
                    out[i + j] = kap.add(out[i + j], int(row[b]))
        return LocalElem(lf, lead, out, pp)

    def inv(self, nterms=None):
        """Inverse as a series with nterms correct coefficients (defaults to
        the field's budget, capped by the operand's own relative
        precision)."""
        lf = self.lf
        kap = lf.kappa
        if not self.coeffs:
            if self.prec is None:
                raise ZeroDivisionError("inverse of zero")
            raise PrecisionLoss("inverse of an element with unknown order")
        avail = nterms if nterms is not None else lf.budget
        if self.prec is not None:
            avail = min(avail, self.prec - self.lead)
        if avail <= 0:
            raise PrecisionLoss("no relative precision left for inversion")
        u0 = self.coeffs[0]
        iu0 = kap.inv(u0)
        # invert the unit part u = coeffs: v with u*v = 1 mod pi^avail
        v = [0] * avail
        v[0] = iu0
        for n in range(1, avail):
            s = 0
            for i in range(1, min(n, len(self.coeffs) - 1) + 1):
                s = kap.add(s, kap.mul(self.coeffs[i], v[n - i]))
            v[n] = kap.neg(kap.mul(s, iu0))
        new_prec = -self.lead + avail
        if self.prec is None and len(self.coeffs) == 1:
            # monomial: exact inverse
            return LocalElem(lf, -self.lead, (iu0,), None)
        return LocalElem(lf, -self.lead, v, new_prec)

    def div(self, other, nterms=None):
        return self * other.inv(nterms)

    def conj(self):
        lf = self.lf
        kap = lf.kappa
        if lf.curve.family == "ramified":
            out = [kap.neg(c) if (self.lead + i) % 2 else c
                   for i, c in enumerate(self.coeffs)]
        else:
            out = [kap.conj(c) for c in self.coeffs]
        return LocalElem(lf, self.lead, out, self.prec)

    def shift(self, k):
        """Multiply by pi**k."""
        return LocalElem(self.lf, self.lead + k, self.coeffs,
                         None if self.prec is None else self.prec + k)

    def scale(self, c):
        kap = self.lf.kappa
        if c == 0:
            return LocalElem(self.lf, 0, (), None)
        return LocalElem(self.lf, self.lead,
                         [kap.mul(c, x) for x in self.coeffs], self.prec)

    def truncate(self, prec):
        p = prec if self.prec is None else min(prec, self.prec)
        return LocalElem(self.lf, self.lead, self.coeffs, p)

    def key(self, prec):
        """Hashable exact snapshot of the series below pi**prec; requires
        that much precision."""
        if self.prec is not None and self.prec < prec:
            raise PrecisionLoss("key needs O(pi^%d), have O(pi^%d)"
                                % (prec, self.prec))
        cs = [self.coeff(e) for e in range(min(self.lead, prec), prec)] \
            if self.coeffs else []
        start = min(self.lead, prec) if self.coeffs else 0
        while cs and cs[-1] == 0:
            cs.pop()
        while cs and cs[0] == 0:
            cs.pop(0)
            start += 1
        return (start, tuple(cs)) if cs else (0, ())

    def agrees(self, other):
        """Equality on the common known range."""
        lo = min(self.lead if self.coeffs else 0,
                 other.lead if other.coeffs else 0)
        hi = []
        if self.prec is not None:
            hi.append(self.prec)
        if other.prec is not None:
            hi.append(other.prec)
        if not hi:
            return (self.lead, self.coeffs) == (other.lead, other.coeffs)
        h = min(hi)
        return all(self.coeff(e) == other.coeff(e) for e in range(lo, h))

    def __repr__(self):
        if not self.coeffs:
            return "0" if self.prec is None else "O(pi^%d)" % self.prec
        parts = ["%s*pi^%d" % (c, self.lead + i)
                 for i, c in enumerate(self.coeffs) if c]
        s = " + ".join(parts)
        if self.prec is not None:
            s += " + O(pi^%d)" % self.prec
        return s


def _min_prec(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    return min(p1, p2)


class LocalField:
    """Completion of L at the place above infinity, with a working precision
    budget for the series that are not exact."""

    def __init__(self, curve, budget=64):
        self.curve = curve
        self.kappa = curve.kappa
        self.e_P = curve.e_P
        self.budget = budget
        self._rho_cache = {}

    def zero(self):
        return LocalElem(self, 0, (), None)

    def one(self):
        return LocalElem(self, 0, (1,), None)

    def pi_power(self, k):
        return LocalElem(self, k, (1,), None)

    def from_kappa(self, c, exp=0):
        if c == 0:
            return self.zero()
        return LocalElem(self, exp, (c,), None)

    def sqrt_one_unit(self, x):
        """Square root of a 1-unit x = 1 + O(pi) with constant term 1,
        normalized to have constant term 1.  Coefficient recurrence
        2 c_n = u_n - sum_{i+j=n, i,j>=1} c_i c_j (char != 2)."""
        kap = self.kappa
        assert x.coeffs and x.lead == 0 and x.coeffs[0] == 1, "not a 1-unit"
        if x.prec is None and len(x.coeffs) == 1:
            return self.one()  # x == 1 exactly
        n_av = x.prec if x.prec is not None else self.budget
        half = kap.inv(2)  # char is odd by curve validation
        c = [0] * n_av
        c[0] = 1
        for n in range(1, n_av):
            s = x.coeff(n)
            for i in range(1, n):
                s = kap.sub(s, kap.mul(c[i], c[n - i]))
            c[n] = kap.mul(s, half)
        return LocalElem(self, 0, c, n_av)

    def rho_series(self):
        """The embedding of rho, cached per budget."""
        n = self.budget
        if n in self._rho_cache:
            return self._rho_cache[n]
        cv = self.curve
        if cv.family == "ramified":
            out = self.pi_power(-1)
        else:
            kap = self.kappa
            ainv = kap.inv(cv.a)  # a in F_q embeds as the low digit
            one_minus = LocalElem(self, 0, (1, kap.neg(ainv)), None)
            out = self.sqrt_one_unit(one_minus).scale(kap.gen).shift(-1)
        self._rho_cache[n] = out
        return out

    def embed_poly(self, p):
        """Embed an element of A = F_q[t]: t = pi**-e_P, exactly."""
        if p.is_zero():
            return self.zero()
        e = self.e_P
        lead = -e * p.deg
        coeffs = [0] * (e * p.deg + 1)
        for i, c in enumerate(p.coeffs):
            if c:
                coeffs[e * (p.deg - i)] = c
        return LocalElem(self, lead, coeffs, None)

    def embed(self, x):
        """Embed an element of L.  Exact when possible (B-elements in the
        ramified family, A-fractions with monomial denominators, ...);
        otherwise correct to the budget."""
        num = self.embed_poly(x.num.c0)
        if not x.num.c1.is_zero():
            num = num + self.embed_poly(x.num.c1) * self.rho_series()
        if x.den.deg == 0:
            return num
        return num.div(self.embed_poly(x.den))

    def with_budget(self, budget):
        return LocalField(self.curve, budget)

    def __repr__(self):
        return "LocalField(%r, budget=%d)" % (self.curve, self.budget)
