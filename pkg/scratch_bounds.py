import itertools
from su3tree.algebra import Curve, FracIdeal
from su3tree.tree import TreeContext
from su3tree.hermitian import corner_elem

INF = 10 ** 6


def ord_lb(e):
    if e.coeffs:
        return e.lead
    if e.prec is None:
        return INF
    return e.prec


def entry_bounds(x, y):
    """m[i][j]: enumerate g_ij over rr_space(B, m_ij); two-sided."""
    My, Mx = y.lat, x.lat
    Mxi, Myi = Mx.inv(), My.inv()

    def box(A, Bm):
        rmin = [min(ord_lb(A.ent[3 * i + j]) for j in range(3)) for i in range(3)]
        cmin = [min(ord_lb(Bm.ent[3 * i + j]) for i in range(3)) for j in range(3)]
        return [[rmin[i] + cmin[j] for j in range(3)] for i in range(3)]

    c_fwd = box(My, Mxi)          # bounds on g entries
    c_rev = box(Mx, Myi)          # bounds on (g^-1) entries
    m = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            lb = max(c_fwd[i][j], c_rev[2 - j][2 - i])
            m[i][j] = -lb
    return m


def dims(cv, m):
    unit = FracIdeal.unit_ideal(cv)
    out = [[len(unit.rr_space(m[i][j])) if m[i][j] >= 0 else 0
            for j in range(3)] for i in range(3)]
    cols = [sum(out[i][j] for i in range(3)) for j in range(3)]
    return out, cols


for fam, aa in (("ramified", None), ("unramified", 2)):
    cv = Curve(3, fam, a=aa)
    ctx = TreeContext(cv)
    l0 = ctx.standard_vertex(0)
    print("==== %s q=3" % fam)
    pairs = [("l0,l0", l0, l0)]
    nbrs = ctx.neighbors(l0)
    pairs.append(("nbr0,l1(0,0)", nbrs[0], ctx.ray_vertex((cv.zeroL(), cv.zeroL()), 1)))
    pairs.append(("nbr0,nbr1", nbrs[0], nbrs[1]))
    # second-level
    nn = ctx.neighbors(nbrs[0])
    pairs.append(("nnbr,l2(0,0)", nn[1], ctx.ray_vertex(None, 2)))
    nnn = ctx.neighbors(nn[1])
    pairs.append(("n3,l3(0,0)", nnn[1], ctx.standard_vertex(3)))
    n4 = ctx.neighbors(nnn[1])
    pairs.append(("n4,n4b", n4[1], n4[2] if len(n4) > 2 else n4[0]))
    # deep ray pairs, same parity (criterion-6 shape)
    z = (cv.zeroL(), cv.zeroL())
    for (na, nb) in ((1, 3), (3, 5), (5, 7), (1, 7), (2, 4), (4, 6), (2, 6)):
        pairs.append(("l%d(0,0),l%d(0,0)" % (na, nb),
                      ctx.ray_vertex(z, na), ctx.ray_vertex(z, nb)))
    if fam == "unramified":
        v = cv.rho_over_t()
        dirn = (cv.zeroL(), v)
        pairs.append(("l0(0,v),l0(inf)", ctx.ray_vertex(dirn, 0), l0))
        for (na, nb) in ((3, 5), (5, 7), (3, 9), (4, 6), (1, 3)):
            pairs.append(("l%d(0,v),l%d(0,v)" % (na, nb),
                          ctx.ray_vertex(dirn, na), ctx.ray_vertex(dirn, nb)))
        pairs.append(("l1(0,0),l3(0,v)", ctx.ray_vertex(z, 1), ctx.ray_vertex(dirn, 3)))
        pairs.append(("l2(0,0),l2(0,v)", ctx.ray_vertex(z, 2), ctx.ray_vertex(dirn, 2)))
        pairs.append(("l1(0,v),l1(0,0)", ctx.ray_vertex(dirn, 1), ctx.ray_vertex(z, 1)))
        pairs.append(("l2(0,v),l2(0,0)", ctx.ray_vertex(dirn, 2), ctx.ray_vertex(z, 2)))
    for name, a, b in pairs:
        if a.kind != b.kind:
            print("%-22s KIND MISMATCH" % name)
            continue
        m = entry_bounds(a, b)
        dm, cols = dims(cv, m)
        print("%-22s m=%s cols=%s total=%d" % (name, m, cols, sum(cols)))
