import random
from fractions import Fraction

import numpy as np
import pytest

from lotbench import (
    BadQuota,
    CapsInfeasible,
    CommonLottery,
    PositionMasses,
    caps_from_lottery,
    continuum_crp,
    expand_common_lottery,
    new_instance,
    optimal_lottery_fill,
    simulate_finite,
    uniform_instance,
)

from util import random_convex_instance, random_feasible_lottery

F = Fraction
U4 = uniform_instance(4)
OPT = CommonLottery.from_values(["0", "5/12", "1/3", "1/4"])


def test_continuum_thresholds_uniform():
    result = continuum_crp(U4, caps_from_lottery(U4, OPT))
    cutoffs = [t.cutoff for t in result.thresholds]
    assert cutoffs == [F(1, 4), F(7, 12), F(1)]
    assert [t.position for t in result.thresholds] == [3, 2, 1]
    assert all(t.position_exhausted for t in result.thresholds)


def test_continuum_reproduces_lottery():
    result = continuum_crp(U4, caps_from_lottery(U4, OPT))
    assert result.allocation.a == expand_common_lottery(U4, OPT).a


def test_round_trip_randomized():
    rng = random.Random(31)
    for _ in range(100):
        inst = random_convex_instance(rng, n_min=2, n_max=7)
        fill = optimal_lottery_fill(inst).lottery
        caps = caps_from_lottery(inst, fill)
        result = continuum_crp(inst, caps)
        assert result.allocation.a == expand_common_lottery(inst, fill).a


def test_agents_run_out_mid_position():
    inst = new_instance(3, ["1/3", "1/3", "1/3"], ["0", "1/2", "1/2"], "1/4")
    caps = PositionMasses.from_values(["0", "1/2", "1/2"])
    result = continuum_crp(inst, caps)
    # the top position alone needs 1/2 of agent mass but only 1/4 exists
    assert len(result.thresholds) == 1
    top = result.thresholds[0]
    assert top.position == 2 and not top.position_exhausted
    assert result.allocation.a[2] == (F(1), F(1), F(1))
    assert result.allocation.a[1] == (F(0), F(0), F(0))


def test_exact_tie_counts_as_exhausted():
    inst = new_instance(2, ["1/2", "1/2"], ["1/2", "1/2"], "1/2")
    result = continuum_crp(inst, PositionMasses.from_values(["0", "1/2"]))
    assert result.thresholds[0].position_exhausted


def test_caps_validation():
    with pytest.raises(CapsInfeasible):
        continuum_crp(U4, PositionMasses.from_values(["0", "0", "0"]))
    with pytest.raises(CapsInfeasible):
        continuum_crp(U4, PositionMasses.from_values(["0", "-1/8", "0", "0"]))
    with pytest.raises(CapsInfeasible):
        continuum_crp(U4, PositionMasses.from_values(["0", "1/2", "0", "0"]))


def test_simulation_validation():
    caps = caps_from_lottery(U4, OPT)
    with pytest.raises(BadQuota):
        simulate_finite(U4, caps, 0, 5, 1)
    with pytest.raises(BadQuota):
        simulate_finite(U4, caps, 100, 0, 1)


def test_simulation_reproducible_and_close():
    caps = caps_from_lottery(U4, OPT)
    sim = simulate_finite(U4, caps, n_agents=20000, replications=10, seed=7)
    again = simulate_finite(U4, caps, n_agents=20000, replications=10, seed=7)
    assert np.array_equal(sim.counts, again.counts)
    assert sim.quotas == (0, 4166, 5000, 5000)
    expected = expand_common_lottery(U4, OPT)
    for k in range(4):
        for i in range(4):
            target = float(expected.a[k][i])
            se = max(sim.stderr[k][i], 1e-9)
            assert abs(sim.empirical[k][i] - target) < 5 * se or (
                abs(sim.empirical[k][i] - target) < 2e-3
            )


def test_simulation_error_shrinks_with_market_size():
    caps = caps_from_lottery(U4, OPT)
    expected = np.array([[float(v) for v in row] for row in expand_common_lottery(U4, OPT).a])

    def max_err(n):
        sim = simulate_finite(U4, caps, n_agents=n, replications=20, seed=3)
        return float(np.max(np.abs(sim.empirical - expected)))

    errs = [max_err(n) for n in (1000, 10000, 100000)]
    assert errs[2] < errs[0]


def test_random_lotteries_round_trip():
    rng = random.Random(37)
    for _ in range(40):
        inst = random_convex_instance(rng, n_min=2, n_max=6)
        fill = optimal_lottery_fill(inst).lottery
        # scale down so caps stay within capacity for any instance
        cl = CommonLottery(c=tuple(ck / 2 for ck in fill.c))
        caps = caps_from_lottery(inst, cl)
        result = continuum_crp(inst, caps)
        assert result.allocation.a == expand_common_lottery(inst, cl).a
