import json
import subprocess
import sys

import pytest

from centralclones.cli import main
from centralclones.relcore import Relation, write_relation
from conftest import contains, star, unary


@pytest.fixture
def files(tmp_path):
    rho_ii = Relation.full(4, 2) - Relation.from_tuples(4, 2, [(2, 3), (3, 2)])
    rels = {
        "star0": star(3, 0), "star1": star(3, 1), "u0": unary(3, 0), "u1": unary(3, 1),
        "u12": unary(3, 1, 2), "full": Relation.full(3, 2), "rho_ii": rho_ii,
        "t4": contains(4, 0), "s40": star(4, 0),
    }
    out = {}
    for name, r in rels.items():
        p = tmp_path / f"{name}.txt"
        p.write_text(write_relation(r))
        out[name] = str(p)
    bad = {"range": "k=3\narity=2\n0 3\n", "header": "arity=2\nk=3\n0 0\n",
           "junk": "k=3\narity=2\n0 x\n", "json": "{not json", "short": "k=3\narity=2\n0\n"}
    for name, text in bad.items():
        p = tmp_path / f"bad_{name}.txt"
        p.write_text(text)
        out["bad_" + name] = str(p)
    out["dir"] = tmp_path
    return out


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_validate(files, capsys):
    code, out = run(capsys, "validate", files["star0"])
    assert code == 0 and "center [0]" in out.out
    code, out = run(capsys, "--json", "validate", files["full"])
    assert code == 2 and json.loads(out.out)["reason"] == "ImproperCenter"


def test_center_and_chains(files, capsys):
    assert run(capsys, "center", files["star0"])[1].out.strip() == "0"
    code, out = run(capsys, "chains", files["rho_ii"])
    assert code == 0 and out.out.split() == ["{0,1,2}", "{0,1,3}"]


@pytest.mark.parametrize("bad", ["bad_range", "bad_header", "bad_junk", "bad_json", "bad_short"])
def test_parse_errors_exit_1(files, capsys, bad):
    for cmd in ("validate", "center", "chains"):
        code, out = run(capsys, cmd, files[bad])
        assert code == 1, (cmd, bad, out)
        assert "error" in out.err


def test_usage_errors_exit_1(files, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nosuchcommand"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["validate"])
    assert exc.value.code == 1
    code, _ = run(capsys, "validate", files["dir"] / "missing.txt")
    assert code == 1
    code, _ = run(capsys, "derive", "Nope", files["star0"], files["u1"])
    assert code == 1


def test_global_flags_before_and_after_subcommand(files, capsys):
    a = run(capsys, "--json", "center", files["star0"])[1].out
    b = run(capsys, "center", "--json", files["star0"])[1].out
    assert json.loads(a) == json.loads(b) == {"center": [0]}


def test_classify(files, capsys):
    code, out = run(capsys, "--json", "classify", files["star0"], files["u12"])
    assert code == 0 and json.loads(out.out)["verdict"] == "TypeII"
    code, out = run(capsys, "classify", files["full"], files["u0"])
    assert code == 2


def test_derive(files, capsys):
    code, out = run(capsys, "derive", "Tau", files["star0"], files["u1"])
    assert code == 0
    lines = out.out.strip().splitlines()
    assert lines[:4] == ["k=3", "arity=1", "0", "1"]
    assert lines[-1].startswith("# Tau")
    code, out = run(capsys, "--json", "derive", "AlphaN", files["t4"], files["s40"], "-p", "n=2")
    assert code == 2  # sigma must be unary for AlphaN
    code, _ = run(capsys, "derive", "GammaT", files["star0"], files["u1"])
    assert code == 1  # missing parameter


def test_certify_then_verify(files, capsys):
    cert = files["dir"] / "c.json"
    code, out = run(capsys, "certify", files["star0"], files["star1"], "-o", cert)
    assert code == 0 and "equal/Intersect" in out.out
    assert run(capsys, "verify", cert)[0] == 0
    code, out = run(capsys, "--json", "verify", cert, "--sigma", files["u1"])
    assert code == 2 and json.loads(out.out)["clause"] == "a"
    code, out = run(capsys, "certify", files["star0"], files["u0"])
    assert code == 2  # positive pair
    cert.write_text("{oops")
    assert run(capsys, "verify", cert)[0] == 1


def test_interpolate(files, capsys):
    code, out = run(capsys, "--json", "interpolate", files["star0"], files["u0"],
                    "--g", "1,1,1", "--target", "k=3 arity=1 table=0 2 1")
    assert code == 0
    t = json.loads(out.out)
    assert t["H"]["table"] == [0, 0, 0, 0, 2, 0, 0, 1, 0]
    code, _ = run(capsys, "interpolate", files["star0"], files["u0"], "--g", "0,1,2",
                  "--target", "0,2,1")
    assert code == 2  # g preserves sigma
    code, _ = run(capsys, "interpolate", files["star0"], files["u0"], "--g", "1,1,x",
                  "--target", "0,2,1")
    assert code == 1


def test_closure(files, capsys):
    gens = files["dir"] / "gens.txt"
    gens.write_text("# constants\nk=3 arity=1 table=0 0 0\n")
    code, out = run(capsys, "--json", "closure", "--gens", gens, "--max-arity", "1", "--stats")
    assert code == 0
    assert json.loads(out.out)["counts"] == {"1": 2}
    code, out = run(capsys, "closure", "--k", "3", "--max-arity", "2")
    assert code == 0 and "arity 2: 2 operations" in out.out
    gens.write_text("k=3 arity=1 table=0 0\n")
    assert run(capsys, "closure", "--gens", gens)[0] == 1


@pytest.mark.parametrize("k, arity, central, count", [(3, 2, True, 3), (4, 3, True, 4),
                                                      (3, 3, True, 0)])
def test_enumerate(capsys, k, arity, central, count):
    argv = ["--json", "enumerate", k, arity] + (["--central"] if central else [])
    code, out = run(capsys, *argv)
    assert code == 0 and json.loads(out.out)["count"] == count


def test_enumerate_dedup(capsys):
    code, out = run(capsys, "--json", "enumerate", 3, 2, "--central", "--dedup-iso")
    assert json.loads(out.out)["count"] == 1
    assert run(capsys, "enumerate", 5, 2)[0] == 2


def test_survey_e3(files, capsys):
    out_file = files["dir"] / "s.json"
    code, out = run(capsys, "survey", 3, "--max-arity", 2, "-o", out_file)
    assert code == 0
    data = json.loads(out_file.read_text())
    assert data["schema"] == 1 and data["summary"]["rows"] == 24
    assert "24 rows" in out.out


def test_survey_empty_pair_set(capsys):
    code, out = run(capsys, "--json", "survey", 3, "--max-arity", 1)
    assert code == 0 and json.loads(out.out)["rows"] == []


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "centralclones.cli", "validate", files["star0"]],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "center [0]" in proc.stdout
