import json
import random
from fractions import Fraction
from importlib import resources

import pytest

from lotbench import (
    BadIndices,
    CommonLottery,
    DirectMechanism,
    Fill,
    InfeasibleInput,
    InsufficientMass,
    allocation_upgrade,
    convexity_report,
    equalize_position,
    expand_common_lottery,
    feasibility_report,
    maximal_upgrade,
    mu_coefficients,
    multipliers,
    new_instance,
    position_masses,
    solve_designer,
    to_common_lottery,
    uniform_instance,
    verify_decomposition,
)

from util import random_convex_instance, random_instance, random_supported_matrix

F = Fraction
U4 = uniform_instance(4)
FIG4 = new_instance(3, ["1/3", "1/12", "7/12"], ["1/3", "1/3", "1/3"], 1)


def load_mech(fixture, key):
    ref = resources.files("lotbench.fixtures").joinpath(fixture)
    return DirectMechanism.from_json_dict(json.loads(ref.read_text())[key])


MENU = load_mech("fig2.json", "menu")


def test_multiplier_values_uniform():
    m = multipliers(U4)
    assert m.local_up == (F(1, 2), F(1, 3), F(1, 4))
    assert m.down[2][0] == F(1, 12)
    assert m.down[2][1] == F(1, 12)


def test_multiplier_sign_detects_nonconvexity():
    m = multipliers(FIG4)
    assert m.down[1][0] == F(-4, 15)
    down_ok = all(v >= 0 for row in m.down for v in row)
    assert down_ok == convexity_report(FIG4).is_convex == False  # noqa: E712


def test_down_nonnegative_iff_convex_randomized():
    rng = random.Random(7)
    for _ in range(60):
        inst = random_instance(rng, n_min=3, n_max=7)
        m = multipliers(inst)
        down_ok = all(v >= 0 for row in m.down for v in row)
        assert down_ok == convexity_report(inst).is_convex


def test_menu_collapse():
    lottery, overflow = to_common_lottery(U4, MENU)
    assert lottery.c == (F(0), F(1, 2), F(1, 3), F(1, 8))
    assert not overflow
    expanded = expand_common_lottery(U4, lottery)
    assert position_masses(U4, expanded).s == position_masses(U4, MENU).s


def test_collapse_fixed_point_on_common_lottery():
    cl = CommonLottery.from_values(["0", "5/12", "1/3", "1/4"])
    lottery, overflow = to_common_lottery(U4, expand_common_lottery(U4, cl))
    assert lottery.c == cl.c and not overflow


def test_collapse_requires_feasible_input():
    bad = DirectMechanism.from_rows(
        [["0"] * 4, ["0"] * 4, ["0"] * 4, ["1", "1", "1", "2"]]
    )
    with pytest.raises(InfeasibleInput):
        to_common_lottery(U4, bad)


def test_nonconvex_menu_overflows():
    menu = load_mech("fig4.json", "menu")
    lottery, overflow = to_common_lottery(FIG4, menu)
    assert lottery.c == (F(0), F(4, 5), F(1, 3))
    assert lottery.total() == F(17, 15)
    assert overflow
    # masses still preserved even though the lottery is invalid
    s = position_masses(FIG4, menu)
    assert tuple(
        FIG4.d * lottery.c[k] * FIG4.cdf(k) for k in range(3)
    ) == s.s


def test_decomposition_menu():
    report = verify_decomposition(U4, MENU)
    assert report.p_theta0 == 1
    assert report.common_term == F(23, 24)
    assert report.info_term == F(1, 24)
    assert report.residual == 0


def test_decomposition_zero_info_for_common_lottery():
    cl = CommonLottery.from_values(["0", "5/12", "1/3", "1/4"])
    report = verify_decomposition(U4, expand_common_lottery(U4, cl))
    assert report.info_term == 0 and report.residual == 0


def test_decomposition_residual_zero_randomized():
    rng = random.Random(11)
    for _ in range(150):
        inst = random_instance(rng, n_min=2, n_max=8)
        mech = random_supported_matrix(rng, inst.n)
        assert verify_decomposition(inst, mech).residual == 0


def test_mu_closed_forms():
    mu = mu_coefficients(U4)
    assert mu[3][1] == F(-1, 4)
    assert mu[3][0] == 1 - U4.f[0]
    mu4 = mu_coefficients(FIG4)
    assert mu4[2][0] == F(2, 3)


def test_mu_closed_forms_randomized():
    rng = random.Random(13)
    for _ in range(60):
        mu_coefficients(random_instance(rng, n_min=2, n_max=8))


def test_vertex_collapse_preserves_masses():
    mech, _ = solve_designer(U4, Fill())
    lottery, overflow = to_common_lottery(U4, mech)
    assert not overflow
    assert lottery.c == (F(0), F(5, 12), F(1, 3), F(1, 4))


def test_equalize_position():
    out = equalize_position(U4, MENU, 3)
    assert out.a[3] == (F(1, 8),) * 4
    assert position_masses(U4, out).s == position_masses(U4, MENU).s
    # rows of a common lottery are fixed points
    cl = expand_common_lottery(U4, CommonLottery.from_values(["0", "1/4", "1/4", "1/4"]))
    assert equalize_position(U4, cl, 2).a == cl.a


def test_equalize_all_rows_equals_collapse():
    current = MENU
    for k in range(4):
        current = equalize_position(U4, current, k)
    lottery, _ = to_common_lottery(U4, MENU)
    assert current.a == expand_common_lottery(U4, lottery).a


def test_allocation_upgrade():
    uniform = expand_common_lottery(U4, CommonLottery.from_values(["1/4"] * 4))
    out = allocation_upgrade(U4, uniform, 0, 1, 3, F(1, 4))
    assert out.a[1][0] == 0 and out.a[3][0] == F(1, 2)
    s_before = position_masses(U4, uniform).s
    s_after = position_masses(U4, out).s
    assert s_after[1] == s_before[1] - U4.d * U4.f[0] * F(1, 4)
    assert s_after[3] == s_before[3] + U4.d * U4.f[0] * F(1, 4)
    with pytest.raises(InsufficientMass):
        allocation_upgrade(U4, uniform, 0, 1, 3, F(1, 2))
    with pytest.raises(BadIndices):
        allocation_upgrade(U4, uniform, 2, 3, 1, F(1, 8))


def test_maximal_upgrade_uniform_lottery():
    uniform = expand_common_lottery(U4, CommonLottery.from_values(["1/4"] * 4))
    out = maximal_upgrade(U4, uniform)
    s = position_masses(U4, out).s
    assert s[3] == U4.g[3]
    assert sum(s) == position_masses(U4, uniform).total()


def test_maximal_upgrade_fixed_point_when_top_saturated():
    mech, _ = solve_designer(U4, Fill())
    s_before = position_masses(U4, mech).s
    out = maximal_upgrade(U4, mech)
    s_after = position_masses(U4, out).s
    assert s_after == s_before  # higher positions already at capacity


def test_collapse_total_at_most_one_on_convex_instances():
    rng = random.Random(17)
    for _ in range(25):
        inst = random_convex_instance(rng, n_min=3, n_max=6)
        mech, _ = solve_designer(inst, Fill())
        lottery, overflow = to_common_lottery(inst, mech)
        assert not overflow
        assert position_masses(
            inst, expand_common_lottery(inst, lottery)
        ).s == position_masses(inst, mech).s
