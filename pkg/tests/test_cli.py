import json

import pytest

from lotbench.cli import main


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    return write


UNIFORM4 = {"n": 4, "f": ["1/4"] * 4, "g": ["1/4"] * 4, "D": "1"}
FIG4 = {"n": 3, "f": ["1/3", "1/12", "7/12"], "g": ["1/3"] * 3, "D": "1"}
MENU = {
    "a": [
        ["0", "0", "0", "0"],
        ["1/2", "1/2", "0", "0"],
        ["1/2", "1/2", "0", "0"],
        ["0", "0", "1/4", "1/4"],
    ]
}
BAD = {
    "a": [
        ["0", "0", "0", "0"],
        ["1/5", "0", "0", "0"],
        ["1/5", "3/5", "0", "0"],
        ["3/5", "2/5", "2/5", "0"],
    ]
}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate(files, capsys):
    code, out, _ = run(capsys, "validate", files("i.json", UNIFORM4))
    assert code == 0
    assert json.loads(out)["ok"] is True


def test_validate_malformed(files, capsys):
    code, _, err = run(
        capsys, "validate", files("i.json", {"n": 2, "f": ["1/2"], "g": [], "D": "1"})
    )
    assert code == 2 and "error" in err


def test_validate_missing_file(capsys):
    code, _, err = run(capsys, "validate", "/nonexistent.json")
    assert code == 2 and "error" in err


def test_check_feasible(files, capsys):
    code, out, _ = run(
        capsys, "check", files("m.json", MENU), "--instance", files("i.json", UNIFORM4)
    )
    assert code == 0
    assert json.loads(out)["feasible"] is True


def test_check_infeasible(files, capsys):
    code, out, err = run(
        capsys, "check", files("m.json", BAD), "--instance", files("i.json", UNIFORM4)
    )
    assert code == 1
    doc = json.loads(out)
    assert doc["feasible"] is False
    assert "IC[2,0]" in doc["violated"]
    assert "IC[2,0]" in err


def test_convexity_codes(files, capsys):
    code, out, _ = run(capsys, "convexity", files("i.json", UNIFORM4))
    assert code == 0 and json.loads(out)["is_convex"]
    code, out, _ = run(capsys, "convexity", files("j.json", FIG4))
    assert code == 1 and not json.loads(out)["is_convex"]


def test_optimal_lottery(files, capsys):
    code, out, _ = run(capsys, "optimal-lottery", files("i.json", UNIFORM4))
    assert code == 0
    doc = json.loads(out)
    assert doc["lottery"] == ["0", "5/12", "1/3", "1/4"]
    assert doc["value"] == "17/24"


def test_optimal_lottery_warns_on_nonconvex(files, capsys):
    code, out, err = run(capsys, "optimal-lottery", files("j.json", FIG4))
    assert code == 0
    assert json.loads(out)["convexity_warning"] is True
    assert "warning" in err


def test_optimal_lottery_with_objective(files, capsys):
    obj = {"kind": "linear", "weights": ["1", "1", "1", "1"]}
    code, out, _ = run(
        capsys,
        "optimal-lottery",
        files("i.json", UNIFORM4),
        "--objective",
        files("o.json", obj),
    )
    assert code == 0 and json.loads(out)["value"] == "17/24"


def test_solve_lp_json_and_csv(files, capsys):
    inst = files("i.json", UNIFORM4)
    code, out, _ = run(capsys, "solve-lp", inst)
    assert code == 0 and json.loads(out)["value"] == "17/24"
    code, out, _ = run(capsys, "solve-lp", inst, "--format", "csv")
    assert code == 0
    assert len(out.strip().splitlines()) == 4


def test_transform(files, capsys):
    code, out, _ = run(
        capsys,
        "transform",
        files("m.json", MENU),
        "--instance",
        files("i.json", UNIFORM4),
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["lottery"] == ["0", "1/2", "1/3", "1/8"]
    assert doc["overflow"] is False
    assert doc["decomposition"]["residual"] == "0"


def test_min_mass(files, capsys):
    code, out, _ = run(
        capsys,
        "min-mass",
        files("i.json", UNIFORM4),
        "--targets",
        files("t.json", ["0", "5/24", "1/4", "1/4"]),
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["d_star"] == "1"
    assert doc["multipliers"]["POS"]["3"] == "1"


def test_perturb_improves_and_declines(files, capsys):
    code, out, _ = run(capsys, "perturb", files("j.json", FIG4), "--D", "3/2")
    assert code == 0
    doc = json.loads(out)
    assert doc["improved"] is True and doc["gain"] == "1/45"
    code, out, err = run(capsys, "perturb", files("i.json", UNIFORM4))
    assert code == 1
    assert json.loads(out)["diagnostic"] == "convex"
    assert "convex" in err


def test_simulate_crp(files, capsys):
    code, out, _ = run(
        capsys,
        "simulate-crp",
        files("i.json", UNIFORM4),
        "--caps",
        files("c.json", ["0", "5/24", "1/4", "1/4"]),
        "--agents",
        "2000",
        "--reps",
        "3",
        "--seed",
        "11",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["quotas"] == [0, 416, 500, 500]
    cell = next(r for r in doc["cells"] if r["k"] == 3 and r["i"] == 0)
    assert cell["analytic_prob"] == "1/4"
    assert abs(cell["empirical_prob"] - 0.25) < 0.05


def test_simulate_crp_csv(files, capsys):
    code, out, _ = run(
        capsys,
        "simulate-crp",
        files("i.json", UNIFORM4),
        "--caps",
        files("c.json", ["0", "0", "0", "1/4"]),
        "--agents",
        "100",
        "--reps",
        "2",
        "--seed",
        "1",
        "--format",
        "csv",
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "k,i,empirical_prob,stderr,analytic_prob"
    assert len(lines) == 17


def test_reproduce_targets(capsys):
    code, out, _ = run(capsys, "reproduce", "fig1")
    assert code == 0
    doc = json.loads(out)
    assert doc["uniform_lottery_mass"] == "5/8"
    assert doc["optimal_mass"] == "17/24"
    assert doc["optimal_lottery"] == ["0", "5/12", "1/3", "1/4"]

    code, out, _ = run(capsys, "reproduce", "fig2")
    doc = json.loads(out)
    assert code == 0
    assert doc["menu"] == {"mass": "5/8", "feasible": True}
    assert doc["ceei"] == {"mass": "11/16", "feasible": True}

    code, out, _ = run(capsys, "reproduce", "fig3")
    doc = json.loads(out)
    assert code == 0
    assert doc["ic_violations"] == ["IC[2,0]"] and doc["feasible"] is False

    code, out, _ = run(capsys, "reproduce", "fig4")
    doc = json.loads(out)
    assert code == 0
    assert doc["best_common_lottery_value"] == "11/18"
    assert doc["lp_value"] == "2/3"
    assert doc["strict_gap"] is True

    code, out, _ = run(capsys, "reproduce", "appendixA1")
    doc = json.loads(out)
    assert code == 0
    values = {c["epsilon"]: (c["menu_value"], c["lottery_value"]) for c in doc["cases"]}
    assert values["-1/4"] == ("2/3", "20/27")
    assert values["-1/10"] == ("2/3", "19/27")
    assert values["0"] == ("2/3", "2/3")
    assert values["1/10"] == ("2/3", "3/5")
