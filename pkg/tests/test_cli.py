import csv
import io
import json
import math
import subprocess
import sys

import pytest

from resolventlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_spectrum_torus(capsys):
    code, out = run(capsys, "spectrum", "--manifold", "torus", "--n", "3", "--lambda-max", str(2 * math.pi * 5 + 0.1))
    r = rows(out)
    assert code == 0 and r[-1]["key"] == "25" and r[-1]["multiplicity"] == "30"


def test_spectrum_cache_writes_env_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("RESOLVENTLAB_CACHE_DIR", str(tmp_path / "cache"))
    _, plain = run(capsys, "spectrum", "--lambda-max", "40")
    _, cached = run(capsys, "spectrum", "--lambda-max", "40", "--cache")
    assert plain == cached
    assert list((tmp_path / "cache").rglob("*.bin"))


def test_spectrum_sphere_to_out_dir(capsys, tmp_path):
    code, out = run(capsys, "spectrum", "--manifold", "sphere", "--n", "3", "--lambda-max", "3",
                    "--out", str(tmp_path))
    assert out == ""
    r = rows((tmp_path / "spectrum.csv").read_text())
    assert [x["multiplicity"] for x in r] == ["1", "4", "9"]


def test_shells(capsys):
    _, out = run(capsys, "shells", "--lam", str(2 * math.pi * 5), "--eps", "1e-6", "--cache")
    assert rows(out)[0]["count"] == "30"


def test_density_zoll(capsys):
    _, out = run(capsys, "density", "--manifold", "zoll", "--grid", "5,10,20", "--rule", "power:-1",
                 "--threshold", "2")
    r = rows(out)
    assert len(r) == 3 and r[-1]["flagged"] == "True"


def test_density_bad_rule(capsys):
    with pytest.raises(ValueError):
        main(["density", "--rule", "cubic"])


def test_multcheck(capsys):
    _, out = run(capsys, "multcheck", "--lam", "3", "--mu", "0.5", "--t", "2")
    r = rows(out)
    assert {x["identity"] for x in r} == {"heaviside", "pole_pair"}
    assert all(float(x["abs_error"]) < 1e-6 for x in r)


def test_projnorm(capsys):
    _, out = run(capsys, "projnorm", "--manifold", "sphere", "--lam", str(math.sqrt(24)), "--p", "4")
    rec = json.loads(out)
    assert rec["kind"] == "tt_star_squared" and rec["estimate"] > 0 and rec["inputs"]["levels"] == [4]


def test_resolvent(capsys):
    _, out = run(capsys, "resolvent", "--manifold", "sphere", "--lam", str(math.sqrt(24)), "--mu", "0.5,0.25",
                 "--p", "4")
    recs = [json.loads(line) for line in out.splitlines()]
    assert len(recs) == 2 and recs[1]["estimate"] > recs[0]["estimate"]


def test_necsuff(capsys):
    _, out = run(capsys, "necsuff", "--manifold", "sphere", "--lam", str(math.sqrt(24)), "--eps", "1",
                 "--p", "4", "--iterations", "20")
    assert float(rows(out)[0]["ratio"]) > 0


def test_expsum(capsys):
    _, out = run(capsys, "expsum", "--R", "50", "--samples", "2")
    r = rows(out)
    assert len(r) == 2 and all(float(x["abs_hlawka"]) <= float(x["triangle"]) for x in r)


def test_quadruples(capsys):
    _, out = run(capsys, "quadruples", "--n", "2", "--R2", "25,3")
    r = rows(out)
    assert r[0]["points"] == "12" and r[1]["points"] == "0" and r[1]["ratio"] == "nan"


@pytest.mark.parametrize("kind,extra", [("band", ["--lam", "40"]), ("gap", ["--lam", "10"]),
                                        ("window", ["--lam", str(2 * math.pi * 5), "--eps", "1e-6"])])
def test_kernel_sup(capsys, kind, extra):
    _, out = run(capsys, "kernel-sup", "--kind", kind, *extra)
    r = rows(out)[0]
    assert float(r["sup"]) > 0
    if kind == "window":
        assert float(r["sup"]) == pytest.approx(30)


def test_fit(capsys, tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("x,y\n1,1\n2,4\n3,9\n4,16\n")
    _, out = run(capsys, "fit", str(path), "--x", "x", "--y", "y", "--predicted", "2")
    rec = json.loads(out)
    assert abs(rec["slope"] - 2) < 1e-10 and rec["verdict"] == "pass"


def test_run_noop(capsys):
    code, out = run(capsys, "run", "noop")
    assert code == 0 and json.loads(out) == {"recipe": "noop"}


def test_run_with_config_and_exit_code(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"recipe": "algebraic-identities", "params": {"count": 100},
                               "tolerances": {"rel": 0.0}}))
    code, out = run(capsys, "run", "algebraic-identities", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert code == 1 and json.loads(out)["verdict"] == "fail"
    assert (tmp_path / "o" / "algebraic-identities.csv").exists()


def test_config_params_are_defaults(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": {"n": 2, "R2": "25"}}))
    _, out = run(capsys, "quadruples", "--config", str(cfg))
    assert rows(out)[0]["points"] == "12"
    _, out = run(capsys, "quadruples", "--config", str(cfg), "--R2", "5")
    assert rows(out)[0]["points"] == "8"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "resolventlab.cli", "quadruples", "--n", "3", "--R2", "3"],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and rows(proc.stdout)[0]["points"] == "8"
