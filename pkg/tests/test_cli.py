import json
import re
import subprocess
import sys
from fractions import Fraction

import pytest

from irsbounds.cli import main
from irsbounds.corpus import corpus_files

CORPUS = {p.stem: str(p) for p in corpus_files()}
SMALL = "W=1,Wp=1,A=1,Sigma=2,Omega=2,maxpsi=16"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def jsonl(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_ball(capsys):
    code, out, _ = run(capsys, "ball", "--rank", "2", "--radius", "1")
    assert code == 0
    assert out.split() == ["size", "5", "1", "a", "A", "b", "B"]


def test_psub_listing(capsys):
    code, out, _ = run(capsys, "psub", "--rank", "2", "--radius", "1")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "count 4"
    for line in lines[1:]:
        bits, label = line.split(" ", 1)
        assert re.fullmatch("[01]{5}", bits) and bits[0] == "1"
        assert label.startswith("{") and label.endswith("}") and "{{" not in label
    code, out, _ = run(capsys, "psub", "--rank", "2", "--radius", "2")
    assert out.splitlines()[0] == "count 20"


def test_sandwich_on_constant_one(capsys, tmp_path):
    out_file = tmp_path / "s.jsonl"
    code, out, _ = run(capsys, "sandwich", "--test", CORPUS["const1"], "--nmax", "2",
                       "--rmin", "0", "--rmax", "1", "--budget", SMALL, "--out", str(out_file))
    assert code == 0
    assert out.strip() == "[1, 1]"
    lines = jsonl(out_file.read_text())
    assert lines[0]["kind"] == "header" and lines[-1]["kind"] == "interval"
    assert (lines[-1]["lower"], lines[-1]["upper"], lines[-1]["sound"]) == ("1/1", "1/1", True)
    kinds = [d["kind"] for d in lines[1:-1]]
    assert kinds == ["inner", "inner", "outer", "outer"]


def test_outer_stdout_report(capsys):
    code, out, _ = run(capsys, "outer", "--test", CORPUS["member_a"], "--rmin", "1",
                       "--rmax", "2", "--budget", SMALL)
    assert code == 0
    lines = jsonl(out)
    assert lines[0]["config"]["test"] and lines[-1]["kind"] == "summary"
    recs = lines[1:-1]
    assert [r["radius"] for r in recs] == [1, 2]
    assert all("seconds" not in r for r in recs)
    for r in recs:
        for field in ("bound", "running_min"):
            assert re.fullmatch(r"-?\d+/\d+", r[field])
    mins = [r["running_min"] for r in recs]
    assert Fraction(mins[1]) <= Fraction(mins[0])


def test_timings_flag(capsys):
    code, out, _ = run(capsys, "inner", "--test", CORPUS["const0"], "--nmax", "2", "--timings")
    assert all("seconds" in r for r in jsonl(out)[1:-1])
    assert jsonl(out)[-1] == {"kind": "summary", "lower": "0/1"}


def test_inner_random(capsys):
    code, out, _ = run(capsys, "inner", "--test", CORPUS["random_0"], "--nmax", "3",
                       "--random", "20", "--seed", "4")
    assert code == 0
    assert sum(r["actions_checked"] for r in jsonl(out)[1:-1]) == 20


def test_polytope_and_lp_export(capsys, tmp_path):
    lp = tmp_path / "p.lp"
    code, out, _ = run(capsys, "polytope", "--test", CORPUS["member_a"], "--radius", "1",
                       "--digits", "3", "--budget", SMALL, "--emit-lp", str(lp))
    assert code == 0
    d = json.loads(out)
    assert d["n_psub"] == 4 and d["status"] == "optimal" and d["optimum"] == "1/1"
    assert lp.read_text().strip()


def test_ca_command(capsys, tmp_path):
    rule = tmp_path / "rule.json"
    act = tmp_path / "act.json"
    rule.write_text(json.dumps({"words": ["1", "a"], "table": [0, 1, 1, 0]}))
    act.write_text(json.dumps({"n": 3, "perms": [[1, 2, 0]]}))
    code, out, _ = run(capsys, "ca", "--rule", str(rule), "--action", str(act), "--sigma", "2")
    d = json.loads(out)
    assert code == 0 and d["kind"] == "non-bijective" and not d["injective"]
    code, _, err = run(capsys, "ca", "--rule", str(rule), "--action", str(act), "--sigma", "2",
                       "--cap", "4")
    assert code == 4 and "cap" in err
    bad = tmp_path / "r2.json"
    bad.write_text(json.dumps({"words": ["b"], "table": [0, 1]}))
    code, _, _ = run(capsys, "ca", "--rule", str(bad), "--action", str(act), "--sigma", "2")
    assert code == 2


def test_entropy_command(capsys, tmp_path):
    dist = tmp_path / "d.json"
    dist.write_text(json.dumps({"atoms": {"x": "1/4", "y": "1/4", "z": "1/2"}}))
    code, out, _ = run(capsys, "entropy", "--dist", str(dist), "--rho", "4")
    d = json.loads(out)["H"]
    assert code == 0 and d["exact"] and d["lower"] == "3/2" and d["rho"] == "3/2"
    joint = tmp_path / "j.json"
    joint.write_text(json.dumps({"joint": [["1/2", "0"], ["0", "1/2"]]}))
    code, out, _ = run(capsys, "entropy", "--dist", str(joint), "--cond")
    d = json.loads(out)
    assert d["H(X|Y)"]["upper"] == "0/1" and d["H(X)"]["lower"] == "1/1"
    code, _, _ = run(capsys, "entropy", "--dist", str(dist), "--cond")
    assert code == 2


def test_input_errors_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"rank": 2,\n "mu": [}')
    code, _, err = run(capsys, "inner", "--test", str(bad), "--nmax", "2")
    assert code == 2 and "bad.json:2:" in err
    code, _, _ = run(capsys, "inner", "--test", str(tmp_path / "missing.json"), "--nmax", "2")
    assert code == 2
    code, _, _ = run(capsys, "outer", "--test", CORPUS["const1"], "--rmin", "2", "--rmax", "1")
    assert code == 2
    code, _, _ = run(capsys, "outer", "--test", CORPUS["const1"], "--rmin", "0", "--rmax", "0",
                     "--budget", "W=1,Q=2")
    assert code == 2
    with pytest.raises(SystemExit) as e:
        main(["outer", "--test", CORPUS["const1"], "--rmin", "0", "--rmax", "1",
              "--digits", "0"])
    assert e.value.code == 2


def test_soundness_failure_exit_3(capsys, monkeypatch):
    import irsbounds.cli as cli

    real = cli.outer_hierarchy

    def broken(*args, **kwargs):
        rep = real(*args, **kwargs)
        for r in rep.outer:
            r.bound = r.running_min = Fraction(-1)
        return rep

    monkeypatch.setattr(cli, "outer_hierarchy", broken)
    code, out, err = run(capsys, "sandwich", "--test", CORPUS["const1"], "--nmax", "1",
                         "--rmin", "0", "--rmax", "0", "--budget", SMALL)
    assert code == 3 and "soundness" in err
    assert jsonl(out)[-1]["sound"] is False


def test_reruns_are_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        p = tmp_path / f"r{k}.jsonl"
        assert main(["outer", "--test", CORPUS["random_1"], "--rmin", "2", "--rmax", "2",
                     "--budget", SMALL, "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "irsbounds", "ball", "--rank", "1",
                          "--radius", "1"], capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[0] == "size 3"


def test_max_seconds_flag(capsys):
    code, out, _ = run(capsys, "outer", "--test", CORPUS["random_0"], "--rmin", "2",
                         "--rmax", "2", "--budget", "W=1,Wp=1,A=1,Sigma=2,Omega=2,maxpsi=8",
                         "--seed", "11", "--max-seconds", "1e-9")
    assert code == 0
    lines = jsonl(out)
    assert lines[0]["config"]["max_seconds"] == 1e-9
    assert lines[1]["status"].endswith("wall-time cap")
    with pytest.raises(SystemExit):
        main(["outer", "--test", CORPUS["const1"], "--rmin", "0", "--rmax", "0",
              "--max-seconds", "0"])
