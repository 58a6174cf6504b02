"""Command-line interface: config resolution, validation errors, command
output contracts, exports, exit codes."""

import json

import pytest

from su3tree.cli import (CONFIG_ENV, ConfigError, load_config, main,
                         parse_direction, parse_vertex, resolve_config,
                         build_parser)
from su3tree.algebra import Curve
from su3tree.tree import TreeContext


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


# ---------------------------------------------------------------------------
# configuration


def test_config_file_parsing(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\n\nq = 5\nfamily=unramified\na=2\ndepth=3\n")
    vals = load_config(str(p))
    assert vals == {"q": "5", "family": "unramified", "a": "2",
                    "depth": "3"}


def test_config_file_error_reports_line_number(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("q=3\nnot a pair\n")
    with pytest.raises(ConfigError) as exc:
        load_config(str(p))
    assert "%s:2" % p in str(exc.value)
    p2 = tmp_path / "bad2.cfg"
    p2.write_text("qq=3\n")
    with pytest.raises(ConfigError) as exc:
        load_config(str(p2))
    assert "unknown key 'qq'" in str(exc.value)


def test_config_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/su3tree.cfg")


def test_resolve_precedence_flags_over_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("q=5\nfamily=unramified\n")
    args = build_parser().parse_args(
        ["--config", str(p), "--q", "3", "cusps", "list"])
    cfg = resolve_config(args)
    assert cfg.q == 3  # flag wins
    assert cfg.family == "unramified"  # file wins over default


def test_config_env_var(tmp_path, monkeypatch, capsys):
    p = tmp_path / "env.cfg"
    p.write_text("q=5\nfamily=ramified\n")
    monkeypatch.setenv(CONFIG_ENV, str(p))
    code, out, _ = run(capsys, "gc", "count")
    assert code == 0
    assert "gc_count: 120" in out


def test_even_q_rejected(capsys):
    code, out, err = run(capsys, "--q", "4", "cusps", "list")
    assert code == 2
    assert "q must be odd" in err


def test_square_a_rejected(capsys):
    code, out, err = run(capsys, "--q", "3", "--family", "unramified",
                         "--a", "1", "cusps", "list")
    assert code == 2
    assert "non-square" in err


def test_config_type_error(tmp_path, capsys):
    p = tmp_path / "run.cfg"
    p.write_text("q=three\n")
    code, out, err = run(capsys, "--config", str(p), "cusps", "list")
    assert code == 2
    assert "q must be an integer" in err


def test_bad_depth_and_precision(capsys):
    code, _, err = run(capsys, "--depth", "-1", "cusps", "list")
    assert code == 2 and "depth must be nonnegative" in err
    code, _, err = run(capsys, "--precision", "4", "cusps", "list")
    assert code == 2 and "precision must be at least 8" in err


# ---------------------------------------------------------------------------
# token parsing


def test_parse_direction_tokens():
    cv = Curve(3, "unramified")
    u, v = parse_direction(cv, "0,0")
    assert repr(u) == repr(cv.zeroL()) and repr(v) == repr(cv.zeroL())
    u, v = parse_direction(cv, "0,v")
    assert repr(v) == repr(cv.rho_over_t())
    with pytest.raises(ConfigError):
        parse_direction(cv, "1,0")
    with pytest.raises(ConfigError):
        parse_direction(cv, "0")
    with pytest.raises(ConfigError):
        parse_direction(Curve(3, "ramified"), "0,v")


def test_parse_vertex_tokens():
    ctx = TreeContext(Curve(3, "ramified"))
    assert parse_vertex(ctx, "inf:2").key == ctx.standard_vertex(2).key
    assert parse_vertex(ctx, "inf").key == ctx.standard_vertex(0).key
    rv = parse_vertex(ctx, "0,0:3")
    zero = ctx.curve.zeroL()
    assert rv.key == ctx.ray_vertex((zero, zero), 3).key
    with pytest.raises(ConfigError):
        parse_vertex(ctx, "inf:x")
    with pytest.raises(ConfigError):
        parse_vertex(ctx, "inf:-1")


# ---------------------------------------------------------------------------
# inspection commands


def test_cusps_list_unramified(capsys):
    code, out, _ = run(capsys, "--q", "3", "--family", "unramified",
                       "cusps", "list")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 2
    assert "cusp 0: pic=0 rep=(0,0) N0=0 N1=0 N=0 tip_level=1" in lines[0]
    assert "cusp 1: pic=1 rep=(0,v) N0=2 N1=2 N=2 tip_level=3" in lines[1]


def test_cusps_list_ramified(capsys):
    code, out, _ = run(capsys, "cusps", "list")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 1 and "pic=0" in lines[0]


def test_tree_neighbors_and_ray(capsys):
    code, out, _ = run(capsys, "tree", "neighbors", "inf:0")
    assert code == 0
    assert "valency: 4" in out  # q + 1 at the unimodular base, q = 3
    assert out.count("neighbor ") == 4
    code, out, _ = run(capsys, "--family", "unramified", "tree",
                       "neighbors", "inf:0")
    assert code == 0
    assert "valency: 28" in out  # q^3 + 1
    code, out, _ = run(capsys, "tree", "ray", "0,0", "2")
    assert code == 0
    assert "kind=unimodular level=2" in out


def test_gc_commands(capsys):
    code, out, _ = run(capsys, "gc", "count")
    assert code == 0 and "gc_count: 24" in out
    code, out, _ = run(capsys, "--q", "5", "--family", "unramified",
                       "gc", "orbits")
    assert code == 0 and "gc_orbits: 3" in out


def test_stab_order_and_space(capsys):
    code, out, _ = run(capsys, "stab", "order", "0,0", "1")
    assert code == 0
    assert "order: 18" in out and "stable: True" in out
    code, out, _ = run(capsys, "stab", "space", "0,0", "2")
    assert code == 0
    assert "order: 54" in out
    assert "dim: 2" in out
    assert out.count("basis ") == 2


# ---------------------------------------------------------------------------
# builds, verification, exports


def test_quotient_build_ramified_summary(capsys):
    code, out, _ = run(capsys, "--depth", "4", "quotient", "build")
    assert code == 0
    assert "closed_frontier: True" in out
    assert "vertices: 5" in out
    assert "edges: 4" in out
    assert "shape: ray; body: 1 vertex" in out


def test_quotient_verify_spider_bullets(capsys):
    code, out, _ = run(capsys, "--depth", "4", "quotient", "verify-spider")
    assert code == 0
    assert "bullet finite-body-decomposition: PASS" in out
    assert "bullet rays-indexed-by-ideal-classes: PASS" in out
    assert "bullet ray-interior-valencies: PASS" in out


def test_amalgam_report_command(capsys):
    code, out, _ = run(capsys, "--depth", "4", "amalgam", "report")
    assert code == 0
    assert "h1_bound: 1" in out
    assert "vertex_group 0: order=24 exhaustive=True" in out
    assert "gluing 0: attach=0 tip_level=1 tip_order=18 attach_order=24 " \
           "edge_group=6" in out
    assert "nagao: gc_order=24 expected=24 root_is_gc=True" in out
    assert "ok: True" in out
    assert "FAIL" not in out


def test_export_requires_a_path(capsys):
    code, _, err = run(capsys, "--depth", "4", "export")
    assert code == 2
    assert "export requires --dot and/or --json" in err


def test_export_writes_deterministic_files(tmp_path, capsys):
    outs = []
    for i in (0, 1):
        jp = tmp_path / ("g%d.json" % i)
        dp = tmp_path / ("g%d.dot" % i)
        code, out, _ = run(capsys, "--depth", "4", "export",
                           "--json", str(jp), "--dot", str(dp))
        assert code == 0
        assert "wrote: %s" % jp in out
        outs.append((jp.read_bytes(), dp.read_bytes()))
    assert outs[0] == outs[1]
    doc = json.loads(outs[0][0])
    assert len(doc["vertices"]) == 5 and len(doc["edges"]) == 4
    assert doc["body"]["spider"]["ok"] is True
    assert outs[0][1].startswith(b"graph quotient {")


def test_export_paths_from_config_file(tmp_path, capsys):
    jp = tmp_path / "fromcfg.json"
    p = tmp_path / "run.cfg"
    p.write_text("q=3\nfamily=ramified\ndepth=4\njson=%s\n" % jp)
    code, out, _ = run(capsys, "--config", str(p), "export")
    assert code == 0
    assert jp.exists()
