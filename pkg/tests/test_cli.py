import json
import subprocess
import sys

import pytest

from monocheck.catalog import get_operator, grid_from_text, sample_operator
from monocheck.cli import emit_plot_data, run
from monocheck.geometry import SampledGraph
from monocheck.graphio import save_graph
from monocheck.paths import PathSample, save_path


def outcome(argv, capsys):
    out = run(argv)
    captured = capsys.readouterr()
    return out, captured


def test_global_example_5_1(capsys):
    out, cap = outcome(["global", "--catalog", "example-5.1", "--grid", "0:1:0.25", "--json"],
                       capsys)
    assert out.exit_code == 1
    doc = json.loads(cap.out)
    assert doc["report"]["min_margin"] == -1.0 and doc["status"] == "refuted"
    assert doc["defaults"]["tolerance"] == 1e-9 and doc["defaults"]["cone_slack"] == 1e-6
    assert cap.err == ""


def test_global_identity_negative_grid(capsys):
    out, _ = outcome(["global", "--catalog", "identity", "--grid", "-1:1:0.1"], capsys)
    assert out.exit_code == 0


def test_usage_errors(capsys):
    for argv in (["bogus"], [], ["global", "--frobnicate"], ["global"],
                 ["global", "--catalog", "nope"], ["global", "--catalog", "identity",
                                                   "--input", "x.json"],
                 ["local", "--catalog", "identity"], ["global", "--tol", "-1",
                                                      "--catalog", "identity"]):
        out, cap = outcome(argv, capsys)
        assert out.exit_code == 64, argv
        assert cap.err


def test_help_exits_zero(capsys):
    assert run(["--help"]).exit_code == 0


def test_local_commands(capsys):
    base = ["local", "--catalog", "remark-4.6", "--grid", "-1:1:0.5"]
    assert run(base + ["--center", "0,0", "--radius", "0.9"]).exit_code == 0
    ex = ["local", "--catalog", "example-5.1", "--grid", "0:1:0.25"]
    assert run(ex + ["--slice", "x1>0"]).exit_code == 0
    assert run(ex + ["--slice", "x2>0"]).exit_code == 0
    assert run(ex + ["--domain-ball", "0,0:1/3"]).exit_code == 0
    # empty restriction
    assert run(base + ["--center", "9,9", "--radius", "0.1"]).exit_code == 2


def test_radius_and_hypo(capsys):
    run(["radius", "--catalog", "remark-4.6", "--grid", "-1:1:0.5", "--center-index", "2",
         "--json"])
    doc = json.loads(capsys.readouterr().out)
    assert 0.9 < doc["report"]["radius"] < 1.25 ** 0.5
    run(["radius", "--catalog", "identity", "--center-index", "0", "--json"])
    assert json.loads(capsys.readouterr().out)["report"]["unbounded"] is True
    out = run(["hypo", "--catalog", "remark-6.4-2-truncated", "--param", "bound=10",
               "--grid", "0:1:1", "--json"])
    doc = json.loads(capsys.readouterr().out)
    assert out.exit_code == 0 and doc["report"]["modulus"]["r_hat"] == 20.0
    g = ["hypo", "--catalog", "remark-4.6", "--grid", "-1:1:0.5"]
    assert run(g + ["--shift", "2"]).exit_code == 0
    assert run(g + ["--shift", "1"]).exit_code == 1


def test_probe_commands(capsys):
    g = ["--catalog", "remark-6.4-1", "--grid", "-1:1:0.1"]
    assert run(["probe"] + g + ["--probe", "1,0"]).exit_code == 1
    assert run(["probe"] + g + ["--probe-grid", "1:1:1,0:0:1"]).exit_code == 1
    assert run(["probe"] + g + ["--probe", "0,5"]).exit_code == 2
    assert run(["probe-local"] + g + ["--center", "0.99,0", "--radius", "0.5",
                                      "--probe", "1,0"]).exit_code == 1
    assert run(["probe"] + g).exit_code == 64


def test_segment_command(capsys):
    assert run(["segment", "--catalog", "example-3.3-2", "--from", "-1", "--to", "1"]).exit_code == 1
    assert run(["segment", "--catalog", "identity", "--from", "-1", "--to", "1"]).exit_code == 0
    out = run(["segment", "--catalog", "example-3.3-1", "--from", "-1", "--to", "1"])
    assert out.exit_code == 2


def test_cone_psd_maxmono(capsys):
    ident = ["--catalog", "identity", "--grid", "-1:1:0.05"]
    assert run(["cone"] + ident + ["--index", "20", "--slack", "1e-9"]).exit_code == 0
    assert run(["psd"] + ident + ["--index", "20", "--slack", "1e-9"]).exit_code == 0
    neg = ["--catalog", "linear", "--param", "slope=-1", "--grid", "-1:1:0.05"]
    assert run(["psd"] + neg + ["--index", "20", "--slack", "1e-9"]).exit_code == 1
    assert run(["psd"] + ident + ["--index", "0"]).exit_code == 2
    assert run(["maxmono", "--catalog", "remark-4.6", "--grid", "-1:1:0.5"]).exit_code == 1
    capsys.readouterr()
    out = run(["maxmono", "--catalog", "remark-6.4-1", "--grid", "-1:1:0.1", "--json"])
    doc = json.loads(capsys.readouterr().out)
    assert out.exit_code == 0 and doc["report"]["detail"]["caveat"] is True


def test_path_check(tmp_path, capsys):
    ident = sample_operator(get_operator("identity"), grid_from_text("-1:1:0.1"))
    save_graph(ident, tmp_path / "g.json")
    save_path(PathSample.from_points(ident.stacked), tmp_path / "p.json")
    out = run(["path-check", "--path", str(tmp_path / "p.json"), "--input",
               str(tmp_path / "g.json"), "--json"])
    doc = json.loads(capsys.readouterr().out)
    assert out.exit_code == 0 and doc["report"]["diagnostic"] == "agreement"
    save_path(PathSample.from_function(lambda t: (t, -t), 21), tmp_path / "down.json")
    assert run(["path-check", "--path", str(tmp_path / "down.json")]).exit_code == 1
    assert run(["path-check", "--path", str(tmp_path / "missing.json")]).exit_code == 64


def test_catalog_sample_plot(tmp_path, capsys):
    out = run(["catalog", "--json"])
    names = [e["name"] for e in json.loads(capsys.readouterr().out)["report"]["operators"]]
    assert out.exit_code == 0 and "example-5.1" in names
    dest = tmp_path / "s.csv"
    assert run(["sample", "--catalog", "example-5.1", "--grid", "0:1:0.5", "--out",
                str(dest)]).exit_code == 0
    assert dest.read_text().startswith("x1,x2,y1,y2\n")
    assert run(["global", "--input", str(dest)]).exit_code == 1
    assert run(["sample", "--catalog", "identity"]).exit_code == 64
    plot = tmp_path / "plot.csv"
    assert run(["plot", "--catalog", "example-5.1", "--grid", "0:1:0.5", "--out",
                str(plot)]).exit_code == 0
    assert run(["plot", "--catalog", "identity", "--param", "dim=3", "--grid", "0:1:1",
                "--out", str(plot)]).exit_code == 64


def test_generate_and_seed(capsys):
    a = run(["global", "--generate", "step", "--seed", "4", "--json"])
    first = capsys.readouterr().out
    b = run(["global", "--generate", "step", "--seed", "4", "--json"])
    assert first == capsys.readouterr().out
    assert a.exit_code == b.exit_code == 1


def test_json_byte_identical_across_threads(capsys):
    outs = []
    for t in ("1", "4"):
        run(["global", "--generate", "monotone-pwl", "--seed", "9", "--json", "--threads", t])
        doc = json.loads(capsys.readouterr().out)
        doc["defaults"].pop("threads")
        outs.append(doc)
    assert outs[0] == outs[1]


def test_bad_graph_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 1, "points": [{"x": [NaN], "y": [0]}]}')
    out, cap = outcome(["global", "--input", str(bad)], capsys)
    assert out.exit_code == 64 and "line 1" in cap.err


def test_emit_plot_data(tmp_path):
    g = sample_operator(get_operator("example-5.1"), grid_from_text("0:1:0.5"))
    counts = emit_plot_data(g, tmp_path / "p.csv")
    text = (tmp_path / "p.csv").read_text()
    assert set(counts) == {"x-t", "y-z"}
    xt = text.split("# block y-z")[0]
    assert "1.0,2.0" in xt
    ident = sample_operator(get_operator("identity"), grid_from_text("-1:1:1"))
    assert emit_plot_data(ident, tmp_path / "i.csv") == {"x-y": 3}
    assert "-1.0,-1.0" in (tmp_path / "i.csv").read_text()
    with pytest.raises(ValueError):
        emit_plot_data(SampledGraph(3, [[0, 0, 0]], [[0, 0, 0]]), tmp_path / "x.csv")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "monocheck", "global", "--catalog", "identity",
                          "--grid", "-1:1:0.5"], capture_output=True, text=True)
    assert res.returncode == 0 and "global: holds" in res.stdout
