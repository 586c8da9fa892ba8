"""
Tests der Kommandozeile: Exit-Codes, Report, CSV und Plot.
"""

import json
import math

import pytest

from main import main, build_map, resolve_config, build_parser
from laborlog import LaborError, set_quiet

set_quiet()


def _report(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_shchepin_width_is_exact(tmp_path):
    out = tmp_path / "width.json"
    assert main(["width", "--map", "shchepin", "--n", "2", "--json", str(out)]) == 0
    data = _report(out)
    assert data["schema"] == "1.0.0"
    assert data["config"]["command"] == "width"
    r = data["results"][0]
    assert r["lower"] == pytest.approx(math.sqrt(3), abs=1e-6)
    assert r["upper"] == pytest.approx(math.sqrt(3), abs=1e-6)
    assert r["pass"]


def test_bu_pair_projection(tmp_path):
    out = tmp_path / "bu.json"
    assert main(["bu-pair", "--family", "projection", "--n", "2", "--json", str(out)]) == 0
    r = _report(out)["results"][0]
    assert r["distance"] == pytest.approx(math.pi)
    assert r["residual"] <= 1e-9


def test_hopf_pair_projection(tmp_path):
    out = tmp_path / "hopf.json"
    assert main(["hopf-pair", "--family", "projection", "--delta", "1.0", "--json", str(out)]) == 0
    r = _report(out)["results"][0]
    assert r["distance"] == pytest.approx(1.0, abs=1e-6)
    assert r["delta"] == 1.0


def test_lemmas_all_pass(tmp_path):
    out, table = tmp_path / "lemmas.json", tmp_path / "lemmas.csv"
    assert main(["lemmas", "--all", "--trials", "200", "--json", str(out), "--csv", str(table)]) == 0
    results = _report(out)["results"]
    assert [r["lemma"] for r in results] == ["hemisphere", "median", "quarter_ball", "convexity"]
    assert all(r["failures"] == 0 for r in results)
    assert table.read_text().splitlines()[0] == "lemma,trials,failures,worst_margin,seed,pass"


def test_waist_csv_and_plot(tmp_path):
    out, table, svg = tmp_path / "waist.json", tmp_path / "waist.csv", tmp_path / "waist.svg"
    code = main(["waist", "--family", "polynomial", "--maps", "2", "--mesh-level", "3", "--samples", "100",
                 "--refine-rounds", "1", "--mesh-tolerance", "0.1", "--trials", "2000",
                 "--json", str(out), "--csv", str(table), "--plot", str(svg)])
    assert code == 0
    lines = table.read_text().splitlines()
    assert lines[0] == "map_id,floor,sup_length,witness_target,witness_cap_radius,pass,seed"
    assert len(lines) == 3
    assert "<svg" in svg.read_text()
    for r in _report(out)["results"]:
        assert r["pass"]
        if r["crofton"] is not None:
            assert r["crofton"]["p_hat"] <= 1.0


def test_same_config_same_bytes(tmp_path):
    out = tmp_path / "run.json"
    args = ["width", "--family", "projection", "--mesh-level", "2", "--samples", "200", "--json", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_config_file(tmp_path):
    cfg, out = tmp_path / "cfg.json", tmp_path / "torus.json"
    cfg.write_text(json.dumps({"complex": "torus", "mesh_level": 2}))
    assert main(["gen-complex", "--config", str(cfg), "--json", str(out)]) == 0
    summary = _report(out)["results"][0]["summary"]
    assert summary["space"] == "torus"
    assert summary["euler"] == 0
    assert summary["closed"]


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 3, "samples": 10}))
    args = build_parser().parse_args(["width", "--config", str(cfg), "--samples", "50"])
    run = resolve_config(args)
    assert run.seed == 3
    assert run.samples == 50
    assert run.command == "width"


def test_gen_complex_sphere(tmp_path):
    out = tmp_path / "s2.json"
    assert main(["gen-complex", "--n", "2", "--mesh-level", "1", "--json", str(out)]) == 0
    data = _report(out)["results"][0]
    assert data["summary"]["euler"] == 2
    assert data["complex"]["dim"] == 2


def test_cycles_on_fold(tmp_path):
    out = tmp_path / "cycles.json"
    assert main(["cycles", "--map", "fold", "--mesh-level", "2", "--json", str(out)]) == 0
    r = _report(out)["results"][0]
    assert r["degree_mod2"] == 0
    assert r["canonical_class"] == 1
    assert all(c["h0_is_fc"] and c["h1_empty"] for c in r["contraction"])


def test_probe_reports_evidence(tmp_path):
    out = tmp_path / "probe.json"
    assert main(["probe-conjecture", "--map", "polynomial1", "--mesh-level", "3", "--samples", "50",
                 "--json", str(out)]) == 0
    assert _report(out)["results"][0]["evidence_only"]


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["width", "--bogus"])
    assert err.value.code == 2
    assert main(["width", "--map", "nonsense", "--json", str(tmp_path / "x.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    assert main(["width", "--config", str(bad)]) == 2


def test_build_map_unknown():
    with pytest.raises(LaborError):
        build_map("nonsense", 2, 1, None)


def test_waist_floor_mismatch_is_usage_error(tmp_path):
    out = tmp_path / "waist.json"
    assert main(["waist", "--family", "trig", "--maps", "1", "--mesh-level", "2", "--samples", "20",
                 "--floor", "two_pi_manifold", "--json", str(out)]) == 2
