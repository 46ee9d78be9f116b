import json
from fractions import Fraction
from importlib import resources

import pytest

from lotbench import (
    CommonLottery,
    DimensionMismatch,
    DirectMechanism,
    Fill,
    InfeasibleInput,
    Linear,
    LotteryOverflow,
    PositionMasses,
    SeparableConcave,
    classify_binding,
    evaluate_objective,
    expand_common_lottery,
    feasibility_report,
    ic_slack,
    mon_profile,
    position_masses,
    redundant_ic_pairs,
    new_instance,
    uniform_instance,
)


def load_fixture(name):
    ref = resources.files("lotbench.fixtures").joinpath(name)
    return json.loads(ref.read_text(encoding="utf-8"))


U4 = uniform_instance(4)
FIG2 = load_fixture("fig2.json")
FIG3 = load_fixture("fig3.json")
MENU = DirectMechanism.from_json_dict(FIG2["menu"])
CEEI = DirectMechanism.from_json_dict(FIG2["ceei"])
BAD = DirectMechanism.from_json_dict(FIG3["mechanism"])


def test_matrix_must_be_square():
    with pytest.raises(DimensionMismatch):
        DirectMechanism.from_rows([["1/2", "1/2"], ["0"]])


def test_position_masses_menu():
    assert position_masses(U4, MENU).s == (
        Fraction(0), Fraction(1, 4), Fraction(1, 4), Fraction(1, 8),
    )
    assert position_masses(U4, MENU).total() == Fraction(5, 8)


def test_position_masses_ceei():
    assert position_masses(U4, CEEI).total() == Fraction(11, 16)


def test_ic_slack_violation_value():
    assert ic_slack(U4, BAD, 2, 0) == Fraction(-1, 15)


def test_feasibility_menu_and_ceei():
    for mech in (MENU, CEEI):
        report = feasibility_report(U4, mech)
        assert report.is_feasible
        assert report.ic_violations() == []


def test_feasibility_flags_bad_mechanism():
    report = feasibility_report(U4, BAD)
    assert not report.is_feasible
    assert report.ic_violations() == [(2, 0)]
    # all local IC pairs hold
    for i in range(4):
        for j in (i - 1, i + 1):
            if 0 <= j < 4:
                assert report.ic_slack[i][j] >= 0


def test_mon_profile():
    p, ok = mon_profile(U4, MENU)
    assert p == (Fraction(1), Fraction(1), Fraction(1, 4), Fraction(1, 4))
    assert ok


def test_redundant_pairs():
    pairs = redundant_ic_pairs(4)
    assert (3, 0) in pairs and (3, 2) in pairs
    assert (0, 2) in pairs and (1, 3) in pairs
    assert (0, 1) not in pairs and (2, 0) not in pairs


def test_classify_binding_requires_feasible():
    with pytest.raises(InfeasibleInput):
        classify_binding(U4, BAD)


def test_classify_binding_partition():
    parts = classify_binding(U4, CEEI)
    all_pairs = {(i, j) for i in range(4) for j in range(4) if i != j}
    assert parts["binding"] | parts["slack"] | parts["redundant"] == all_pairs
    assert not parts["binding"] & parts["slack"]


def test_expand_common_lottery():
    cl = CommonLottery.from_values(["0", "5/12", "1/3", "1/4"])
    mech = expand_common_lottery(U4, cl)
    assert mech.a[1] == (Fraction(5, 12), Fraction(5, 12), Fraction(0), Fraction(0))
    assert feasibility_report(U4, mech).is_feasible


def test_expand_rejects_overflow():
    with pytest.raises(LotteryOverflow):
        expand_common_lottery(U4, CommonLottery.from_values(["1/2"] * 4))
    with pytest.raises(LotteryOverflow):
        expand_common_lottery(U4, CommonLottery.from_values(["-1/4", "0", "0", "0"]))


def test_objectives():
    s = PositionMasses.from_values(["0", "1/4", "1/4", "1/8"])
    assert evaluate_objective(Fill(), s) == Fraction(5, 8)
    lin = Linear(weights=(Fraction(1), Fraction(0), Fraction(0), Fraction(2)))
    assert evaluate_objective(lin, s) == Fraction(1, 4)
    conc = SeparableConcave(weights=(Fraction(1),) * 4, rho=Fraction(1, 2))
    assert evaluate_objective(conc, s) == pytest.approx(2 * 0.25**0.5 + 0.125**0.5)


def test_concave_objective_validation():
    with pytest.raises(ValueError):
        SeparableConcave(weights=(Fraction(1),), rho=Fraction(3, 2))
    with pytest.raises(ValueError):
        SeparableConcave(weights=(Fraction(0),), rho=Fraction(1, 2))


def test_fig4_menu_is_feasible_on_its_instance():
    fig4 = load_fixture("fig4.json")
    inst = new_instance(3, ["1/3", "1/12", "7/12"], ["1/3", "1/3", "1/3"], 1)
    menu = DirectMechanism.from_json_dict(fig4["menu"])
    assert feasibility_report(inst, menu).is_feasible
    assert position_masses(inst, menu).total() == Fraction(2, 3)
