"""Command-line interface: flat key=value configuration, inspection
subcommands for the tree, cusps, stabilizers and the constant-entry
subgroup, quotient builds with verification, and deterministic exports.

Exit status is 0 only when every verification the command ran passed and
no search ended in an Unknown state; configuration problems exit 2.
"""

import argparse
import hashlib
import os
import sys

from .algebra import Curve, pic_order
from .arithmetic import (cusp_bounds, enumerate_cusps, enumerate_GC,
                         gc_line_orbits, unipotent_stab_space)
from .tree import TreeContext
from .quotient import (build_quotient, spider_decompose, amalgam_report,
                       export_graph)

CONFIG_ENV = "SU3TREE_CONFIG"

_CONFIG_KEYS = ("q", "family", "a", "depth", "precision", "seed",
                "dot", "json")
_INT_KEYS = ("q", "a", "depth", "precision", "seed")

_DEFAULTS = {"q": 3, "family": "ramified", "a": None, "depth": None,
             "precision": 64, "seed": 0, "dot": None, "json": None}


class ConfigError(Exception):
    pass


class RunConfig:
    """Validated run parameters: defaults, then file values, then flags."""

    __slots__ = _CONFIG_KEYS

    def __init__(self, values):
        for k in _CONFIG_KEYS:
            setattr(self, k, values[k])


def load_config(path):
    """Parse a flat key=value file (# comments and blank lines allowed)."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError("%s:%d: expected key=value, got %r"
                                  % (path, lineno, line))
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError("%s:%d: unknown key %r"
                                  % (path, lineno, key))
            out[key] = val
    return out


def _typed(key, val):
    if val is None or not isinstance(val, str):
        return val
    if key in _INT_KEYS:
        try:
            return int(val)
        except ValueError:
            raise ConfigError("%s must be an integer, got %r" % (key, val))
    return val


def resolve_config(args):
    values = dict(_DEFAULTS)
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        for key, val in load_config(path).items():
            values[key] = _typed(key, val)
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    cfg = RunConfig(values)
    if cfg.q % 2 == 0:
        raise ConfigError("q must be odd (got %d)" % cfg.q)
    if cfg.depth is not None and cfg.depth < 0:
        raise ConfigError("depth must be nonnegative (got %d)" % cfg.depth)
    if cfg.precision < 8:
        raise ConfigError("precision must be at least 8 (got %d)"
                          % cfg.precision)
    return cfg


def make_curve(cfg):
    try:
        return Curve(cfg.q, cfg.family, a=cfg.a)
    except ValueError as exc:
        raise ConfigError(str(exc))


# ---------------------------------------------------------------------------
# vertex and direction parsing


def parse_direction(cv, token):
    """Cusp direction token: '0,0' always; '0,v' for the nontrivial ideal
    class of the unramified family."""
    parts = token.split(",")
    if len(parts) != 2:
        raise ConfigError("direction must be 'u,v' with two coordinates, "
                          "got %r" % token)
    us, vs = parts[0].strip(), parts[1].strip()
    if us != "0":
        raise ConfigError("unsupported direction %r: the shipped cusp "
                          "representatives have u = 0" % token)
    if vs == "0":
        return (cv.zeroL(), cv.zeroL())
    if vs == "v":
        if pic_order(cv) != 2:
            raise ConfigError("direction '0,v' requires a nontrivial ideal "
                              "class (unramified family)")
        return (cv.zeroL(), cv.rho_over_t())
    raise ConfigError("unsupported direction coordinate %r: use 0 or v"
                      % vs)


def parse_vertex(ctx, spec):
    """Vertex token: 'inf:n', '0,0:n' or '0,v:n' (':n' optional, default
    0) naming the level-n vertex on that ray."""
    if ":" in spec:
        dirpart, _, lvl = spec.rpartition(":")
        try:
            n = int(lvl)
        except ValueError:
            raise ConfigError("vertex level must be an integer, got %r"
                              % lvl)
    else:
        dirpart, n = spec, 0
    if n < 0:
        raise ConfigError("vertex level must be nonnegative, got %d" % n)
    if dirpart == "inf":
        return ctx.standard_vertex(n)
    return ctx.ray_vertex(parse_direction(ctx.curve, dirpart), n)


def _digest(vert):
    """Short stable fingerprint of a vertex key for terminal output."""
    return hashlib.sha256(repr(vert.key).encode()).hexdigest()[:12]


def _dir_name(cv, rep):
    u, v = rep
    return "(0,0)" if repr(v) == repr(cv.zeroL()) else "(0,v)"


# ---------------------------------------------------------------------------
# subcommands


def cmd_tree_neighbors(ctx, cfg, args):
    vert = parse_vertex(ctx, args.vertex)
    nbrs = ctx.neighbors(vert)
    print("vertex: kind=%s diag=%s id=%s" % (vert.kind, vert.diag,
                                             _digest(vert)))
    print("valency: %d" % len(nbrs))
    for i, w in enumerate(nbrs):
        print("neighbor %d: kind=%s diag=%s id=%s" % (i, w.kind, w.diag,
                                                      _digest(w)))
    return 0


def cmd_tree_ray(ctx, cfg, args):
    if args.direction == "inf":
        vert = ctx.standard_vertex(args.n)
    else:
        vert = ctx.ray_vertex(parse_direction(ctx.curve, args.direction),
                              args.n)
    print("vertex: kind=%s level=%d diag=%s id=%s"
          % (vert.kind, args.n, vert.diag, _digest(vert)))
    return 0


def cmd_cusps_list(ctx, cfg, args):
    for ci, cusp in enumerate(enumerate_cusps(ctx)):
        print("cusp %d: pic=%d rep=%s N0=%d N1=%d N=%d tip_level=%d "
              "tip_kind=%s" % (ci, cusp.pic, _dir_name(ctx.curve, cusp.rep),
                               cusp.N0, cusp.N1, cusp.N, cusp.N + 1,
                               cusp.tip.kind))
    return 0


def _stab_data(ctx, args):
    cv = ctx.curve
    u, v = parse_direction(cv, args.direction)
    sd = unipotent_stab_space(cv, u, v, args.n, with_torus=True)
    stable = args.n > cusp_bounds(cv, u, v)[2]
    return sd, stable


def cmd_stab_order(ctx, cfg, args):
    sd, stable = _stab_data(ctx, args)
    print("level: %d" % args.n)
    print("order: %d" % sd.order)
    print("stable: %s" % stable)
    return 0


def cmd_stab_space(ctx, cfg, args):
    sd, stable = _stab_data(ctx, args)
    print("level: %d" % args.n)
    print("order: %d" % sd.order)
    print("dim: %d" % sd.dim)
    print("r: %d" % sd.r)
    print("fiber_dim: %d" % sd.fiber_dim)
    print("torus: %s" % (list(sd.torus),))
    print("stable: %s" % stable)
    for i, b in enumerate(sd.basis):
        print("basis %d: %s" % (i, b))
    return 0


def cmd_gc_count(ctx, cfg, args):
    n = len(enumerate_GC(ctx.curve))
    print("gc_count: %d" % n)
    return 0


def cmd_gc_orbits(ctx, cfg, args):
    print("gc_orbits: %d" % gc_line_orbits(ctx.curve))
    return 0


def _build(ctx, cfg, args):
    depth = cfg.depth
    sub_dot = getattr(args, "dot", None)
    sub_json = getattr(args, "json", None)
    Q = build_quotient(ctx, max_depth=depth)
    spider = spider_decompose(Q) if Q.closed_frontier else None
    return Q, spider, (sub_dot or cfg.dot), (sub_json or cfg.json)


def _write_exports(obj, dot, json_path):
    for path, fmt in ((dot, "dot"), (json_path, "json")):
        if path:
            data = export_graph(obj, fmt=fmt)
            with open(path, "w") as fh:
                fh.write(data)
            print("wrote: %s (%d bytes)" % (path, len(data)))


def _clean(Q):
    return (Q.closed_frontier and not Q.violations and not Q.unresolved
            and not Q.assumed)


def _build_summary(Q, spider):
    cv = Q.ctx.curve
    print("family: %s" % cv.family)
    print("q: %d" % cv.q)
    print("depth: %d" % Q.max_depth)
    print("vertices: %d" % len(Q.verts))
    print("edges: %d" % sum(Q.edges.values()))
    print("cusps: %d" % len(Q.cusps))
    print("closed_frontier: %s" % Q.closed_frontier)
    print("violations: %d" % len(Q.violations))
    print("unresolved: %d" % len(Q.unresolved))
    print("assumed: %d" % len(Q.assumed))
    if spider is None:
        print("shape: open (frontier not closed)")
        return
    nbody = len(spider.body_vids)
    shape = "ray" if nbody == 1 and len(spider.legs) == 1 else "spider"
    print("shape: %s; body: %d %s"
          % (shape, nbody, "vertex" if nbody == 1 else "vertices"))


def cmd_quotient_build(ctx, cfg, args):
    Q, spider, dot, json_path = _build(ctx, cfg, args)
    _build_summary(Q, spider)
    _write_exports(spider if spider is not None else Q, dot, json_path)
    return 0 if _clean(Q) else 1


def cmd_quotient_verify_spider(ctx, cfg, args):
    Q, spider, dot, json_path = _build(ctx, cfg, args)
    _build_summary(Q, spider)
    if spider is None:
        print("bullet finite-body-decomposition: FAIL")
        print("bullet rays-indexed-by-ideal-classes: FAIL")
        print("bullet ray-interior-valencies: FAIL")
        return 1
    checks = spider.report["checks"]
    b1 = bool(checks["edge_partition"] and checks["body_connected"]
              and checks["leg_body_intersections"])
    b2 = (len(Q.cusps) == pic_order(ctx.curve)
          and len(spider.legs) == len(Q.cusps)
          and all(spider.legs.get(ci) for ci in range(len(Q.cusps))))
    b3 = bool(checks["ray_valencies"])
    print("bullet finite-body-decomposition: %s" % ("PASS" if b1 else
                                                    "FAIL"))
    print("bullet rays-indexed-by-ideal-classes: %s" % ("PASS" if b2 else
                                                        "FAIL"))
    print("bullet ray-interior-valencies: %s" % ("PASS" if b3 else "FAIL"))
    _write_exports(spider, dot, json_path)
    return 0 if (_clean(Q) and b1 and b2 and b3) else 1


def cmd_amalgam_report(ctx, cfg, args):
    Q, spider, dot, json_path = _build(ctx, cfg, args)
    _build_summary(Q, spider)
    if spider is None:
        print("amalgam: unavailable (open frontier)")
        return 1
    rep = amalgam_report(ctx, spider)
    print("h1_bound: %d" % rep.h1_bound)
    print("spanning_tree: %s" % (rep.spanning_tree,))
    for vid in sorted(rep.vertex_groups):
        vg = rep.vertex_groups[vid]
        print("vertex_group %d: order=%s exhaustive=%s"
              % (vid, vg["order"], vg["exhaustive"]))
    for (a, b) in sorted(rep.edge_groups):
        eg = rep.edge_groups[(a, b)]
        print("edge_group (%d,%d): order=%s multiplicity=%d"
              % (a, b, eg["order"], eg["multiplicity"]))
    for ci in sorted(rep.towers):
        tw = rep.towers[ci]
        print("tower %d: levels %d..%d orders %s"
              % (ci, tw[0]["level"], tw[-1]["level"],
                 ",".join(str(e["order"]) for e in tw)))
    for ci in sorted(rep.gluings):
        gl = rep.gluings[ci]
        print("gluing %d: attach=%s tip_level=%d tip_order=%d "
              "attach_order=%s edge_group=%s"
              % (ci, gl["attach"], gl["tip_level"], gl["tip_order"],
                 gl.get("attach_order"), gl.get("edge_group_order")))
    if rep.nagao is not None:
        print("nagao: gc_order=%d expected=%d root_is_gc=%s"
              % (rep.nagao["gc_order"], rep.nagao["expected_gc_order"],
                 rep.nagao["root_is_gc"]))
    for name in sorted(rep.checks):
        print("check %s: %s" % (name, "PASS" if rep.checks[name] else
                                "FAIL"))
    print("ok: %s" % rep.ok)
    _write_exports(spider, dot, json_path)
    return 0 if (_clean(Q) and rep.ok) else 1


def cmd_export(ctx, cfg, args):
    dot = getattr(args, "dot", None) or cfg.dot
    json_path = getattr(args, "json", None) or cfg.json
    if not dot and not json_path:
        raise ConfigError("export requires --dot and/or --json")
    Q, spider, _, _ = _build(ctx, cfg, args)
    _write_exports(spider if spider is not None else Q, dot, json_path)
    return 0 if _clean(Q) else 1


_HANDLERS = {
    ("tree", "neighbors"): cmd_tree_neighbors,
    ("tree", "ray"): cmd_tree_ray,
    ("cusps", "list"): cmd_cusps_list,
    ("stab", "order"): cmd_stab_order,
    ("stab", "space"): cmd_stab_space,
    ("gc", "count"): cmd_gc_count,
    ("gc", "orbits"): cmd_gc_orbits,
    ("quotient", "build"): cmd_quotient_build,
    ("quotient", "verify-spider"): cmd_quotient_verify_spider,
    ("amalgam", "report"): cmd_amalgam_report,
    ("export", None): cmd_export,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="su3tree",
        description="Exact quotient-graph toolkit for the rank-one special "
                    "unitary tree over a function field.")
    p.add_argument("--config", help="key=value config file (or $%s)"
                   % CONFIG_ENV)
    p.add_argument("--q", type=int, help="residue field size (odd)")
    p.add_argument("--family", choices=("ramified", "unramified"))
    p.add_argument("--a", type=int,
                   help="non-square for the unramified family")
    p.add_argument("--depth", type=int, help="quotient BFS depth")
    p.add_argument("--precision", type=int,
                   help="local-field precision budget")
    p.add_argument("--seed", type=int, help="seed for randomized suites")
    p.add_argument("--dot", help="write DOT export to this path")
    p.add_argument("--json", help="write JSON export to this path")
    sub = p.add_subparsers(dest="group", required=True, metavar="command")

    tree = sub.add_parser("tree", help="inspect tree vertices")
    tsub = tree.add_subparsers(dest="action", required=True)
    tn = tsub.add_parser("neighbors", help="list the neighbors of a vertex")
    tn.add_argument("vertex", help="'inf:n', '0,0:n' or '0,v:n'")
    tr = tsub.add_parser("ray", help="the level-n vertex of a cusp ray")
    tr.add_argument("direction", help="'0,0', '0,v' or 'inf'")
    tr.add_argument("n", type=int)

    cusps = sub.add_parser("cusps", help="cusp data per ideal class")
    csub = cusps.add_subparsers(dest="action", required=True)
    csub.add_parser("list", help="one row per cusp with bounds and tip")

    stab = sub.add_parser("stab", help="closed-form ray stabilizer data")
    ssub = stab.add_subparsers(dest="action", required=True)
    for name in ("order", "space"):
        sp = ssub.add_parser(name)
        sp.add_argument("direction", help="'0,0' or '0,v'")
        sp.add_argument("n", type=int)

    gc = sub.add_parser("gc", help="constant-entry subgroup")
    gsub = gc.add_subparsers(dest="action", required=True)
    gsub.add_parser("count", help="order by exhaustive enumeration")
    gsub.add_parser("orbits", help="orbit count on base isotropic lines")

    quo = sub.add_parser("quotient", help="build and verify the quotient")
    qsub = quo.add_subparsers(dest="action", required=True)
    for name in ("build", "verify-spider"):
        qp = qsub.add_parser(name)
        qp.add_argument("--dot", default=argparse.SUPPRESS,
                        help="write DOT export to this path")
        qp.add_argument("--json", default=argparse.SUPPRESS,
                        help="write JSON export to this path")

    am = sub.add_parser("amalgam", help="graph-of-groups report")
    asub = am.add_subparsers(dest="action", required=True)
    ap = asub.add_parser("report")
    ap.add_argument("--dot", default=argparse.SUPPRESS,
                    help="write DOT export to this path")
    ap.add_argument("--json", default=argparse.SUPPRESS,
                    help="write JSON export to this path")

    ex = sub.add_parser("export", help="write quotient exports")
    ex.add_argument("--dot", default=argparse.SUPPRESS,
                    help="write DOT export to this path")
    ex.add_argument("--json", default=argparse.SUPPRESS,
                    help="write JSON export to this path")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        curve = make_curve(cfg)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    ctx = TreeContext(curve, budget=cfg.precision)
    handler = _HANDLERS[(args.group, getattr(args, "action", None))]
    try:
        return handler(ctx, cfg, args)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
