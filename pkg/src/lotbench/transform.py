"""Collapsing a direct mechanism into a common lottery, and the exact
participation-probability decomposition that certifies when this is safe.

The central map averages each position row over the types that find the
position acceptable, weighted by the type pmf.  It preserves position
masses by construction; whether the resulting offer probabilities still
sum to at most one is exactly the question the multiplier machinery
answers (yes whenever 1/F is discretely convex).

All truth-telling expressions in this module are scaled by (N-1) so that
the utility gaps (x_k - theta_i) become the integers (k - i); the
multiplier closed forms assume that scaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    BadIndices,
    DimensionMismatch,
    InfeasibleInput,
    InsufficientMass,
)
from .instance import Instance
from .mechanism import (
    CommonLottery,
    DirectMechanism,
    feasibility_report,
    ic_slack,
)
from .rationals import format_rational

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Multipliers:
    """Nonnegative weights attached to the truth-telling constraints.

    local_up[i] weights the adjacent upward pair (i, i+1) and equals
    f_{i+1} / F_{i+1}; down[i][j] (j < i) weights the downward pair (i, j)
    and equals f_j times the second difference of 1/F at i.  The downward
    weights are all nonnegative exactly when 1/F is discretely convex.
    Rows of down with no defined value are zero, which is harmless: the
    scaled expressions they would multiply vanish identically.
    """

    local_up: tuple[Fraction, ...]
    down: tuple[tuple[Fraction, ...], ...]

    def down_entry(self, i: int, j: int) -> Fraction:
        if not 0 <= j < i < len(self.down) + 1:
            raise BadIndices(f"down multiplier needs j < i, got ({i}, {j})")
        return self.down[i][j]


def multipliers(inst: Instance) -> Multipliers:
    n = inst.n
    local_up = tuple(inst.f[i + 1] / inst.cdf(i + 1) for i in range(n - 1))
    down = []
    for i in range(n):
        row = []
        for j in range(i):
            if 1 <= i <= n - 2:
                bracket = (
                    ONE / inst.cdf(i - 1)
                    - 2 * (ONE / inst.cdf(i))
                    + ONE / inst.cdf(i + 1)
                )
                row.append(inst.f[j] * bracket)
            else:
                # the scaled constraint this would weight is identically
                # zero (the only surviving index has integer gap 0)
                row.append(ZERO)
        down.append(tuple(row))
    return Multipliers(local_up=local_up, down=tuple(down))


def scaled_ic(inst: Instance, mech: DirectMechanism, i: int, j: int) -> Fraction:
    """Truth-telling slack with integer gap weights (k - i)."""
    return (inst.n - 1) * ic_slack(inst, mech, i, j)


def to_common_lottery(inst: Instance, mech: DirectMechanism):
    """Average each row over acceptable types; returns (lottery, overflow).

    Position masses are always preserved.  The overflow flag is True when
    the offer probabilities total more than one, in which case the result
    is not a valid lottery; with convex 1/F this never happens for
    feasible input.
    """
    report = feasibility_report(inst, mech)
    if not report.is_feasible:
        raise InfeasibleInput("the collapse guarantee is stated for feasible input")
    c = _row_averages(inst, mech)
    lottery = CommonLottery(c=c)
    return lottery, lottery.total() > 1


def _row_averages(inst: Instance, mech: DirectMechanism) -> tuple[Fraction, ...]:
    n = inst.n
    return tuple(
        sum((mech.a[k][j] * inst.f[j] for j in range(k + 1)), ZERO) / inst.cdf(k)
        for k in range(n)
    )


@dataclass(frozen=True)
class DecompositionReport:
    """Exact split of the lowest type's participation probability.

    p_theta0 = common_term + info_term holds as an algebraic identity for
    any matrix supported on k >= i; residual records the difference and
    must be exactly zero.
    """

    common_term: Fraction
    info_term: Fraction
    p_theta0: Fraction
    residual: Fraction

    def to_json_dict(self) -> dict:
        return {
            "common_term": format_rational(self.common_term),
            "info_term": format_rational(self.info_term),
            "p_theta0": format_rational(self.p_theta0),
            "residual": format_rational(self.residual),
        }


def verify_decomposition(inst: Instance, mech: DirectMechanism) -> DecompositionReport:
    if mech.n != inst.n:
        raise DimensionMismatch("mechanism size must match the instance")
    n = inst.n
    mult = multipliers(inst)
    common = sum(_row_averages(inst, mech), ZERO)
    info = ZERO
    for i in range(n - 1):
        info += mult.local_up[i] * scaled_ic(inst, mech, i, i + 1)
    for i in range(1, n):
        for j in range(i):
            lam = mult.down[i][j]
            if lam != 0:
                info += lam * scaled_ic(inst, mech, i, j)
    p0 = mech.participation(0)
    return DecompositionReport(
        common_term=common,
        info_term=info,
        p_theta0=p0,
        residual=p0 - common - info,
    )


def mu_coefficients(inst: Instance) -> tuple[tuple[Fraction, ...], ...]:
    """Coefficient of each matrix cell in the information term.

    Built by aggregating the multiplier-weighted constraint rows, then
    asserted against the closed forms: mu[k][0] = 1 - f_0/F_k and
    mu[k][i] = -f_i/F_k for i >= 1.  Cells with k < i never appear and
    are reported as zero.
    """
    n = inst.n
    mult = multipliers(inst)

    def lu(i):
        return mult.local_up[i] if 0 <= i <= n - 2 else ZERO

    mu = [[ZERO] * n for _ in range(n)]
    for k in range(n):
        for i in range(k + 1):
            val = (k - i) * lu(i)
            if i >= 1:
                val -= (k - i + 1) * lu(i - 1)
                val += sum(((k - i) * mult.down[i][j] for j in range(i)), ZERO)
            for jp in range(i + 1, k + 1):
                val -= (k - jp) * mult.down[jp][i]
            mu[k][i] = val
    for k in range(n):
        assert mu[k][0] == 1 - inst.f[0] / inst.cdf(k)
        for i in range(1, k + 1):
            assert mu[k][i] == -inst.f[i] / inst.cdf(k)
    return tuple(tuple(row) for row in mu)


# --- row and cell surgery ----------------------------------------------------


def equalize_position(inst: Instance, mech: DirectMechanism, k: int) -> DirectMechanism:
    """Replace row k by its pmf-weighted average over types <= k.

    Position masses are unchanged; the row becomes constant on its
    acceptable types and zero elsewhere.
    """
    if mech.n != inst.n:
        raise DimensionMismatch("mechanism size must match the instance")
    inst._check_index(k)
    avg = sum((mech.a[k][j] * inst.f[j] for j in range(k + 1)), ZERO) / inst.cdf(k)
    rows = [list(row) for row in mech.a]
    rows[k] = [avg if i <= k else ZERO for i in range(inst.n)]
    return DirectMechanism(a=tuple(tuple(r) for r in rows))


def allocation_upgrade(
    inst: Instance,
    mech: DirectMechanism,
    i: int,
    from_k: int,
    to_k: int,
    mass: Fraction,
) -> DirectMechanism:
    """Move offer probability of type i from a worse position to a better one."""
    if mech.n != inst.n:
        raise DimensionMismatch("mechanism size must match the instance")
    if not 0 <= i <= from_k < to_k < inst.n:
        raise BadIndices(
            f"need i <= from_k < to_k within the grid, got i={i}, "
            f"from_k={from_k}, to_k={to_k}"
        )
    if mass < 0:
        raise InsufficientMass("cannot move a negative amount")
    if mass > mech.a[from_k][i]:
        raise InsufficientMass(
            f"cell ({from_k}, {i}) holds {mech.a[from_k][i]}, cannot move {mass}"
        )
    rows = [list(row) for row in mech.a]
    rows[from_k][i] -= mass
    rows[to_k][i] += mass
    return DirectMechanism(a=tuple(tuple(r) for r in rows))


def maximal_upgrade(inst: Instance, mech: DirectMechanism) -> DirectMechanism:
    """Push offer mass upward until no partly vacant position can draw from
    below.

    Repeatedly takes the highest position with spare capacity and refills
    it with offer mass currently sitting at lower positions, scanning
    donor types in ascending index and donor positions from the bottom.
    Total utilization is preserved and the number of capacity-filled
    positions is maximal given that utilization.
    """
    report = feasibility_report(inst, mech)
    if not report.is_feasible:
        raise InfeasibleInput("upgrading is defined for feasible input")
    n = inst.n
    rows = [list(row) for row in mech.a]

    def mass_at(k):
        return inst.d * sum((rows[k][i] * inst.f[i] for i in range(k + 1)), ZERO)

    kt = n - 1
    while kt >= 0:
        vacant = next(
            (k for k in range(kt, -1, -1) if mass_at(k) < inst.g[k]), None
        )
        if vacant is None:
            break
        kt = vacant
        progressed = False
        for i in range(kt + 1):
            for k in range(i, kt):
                cell = rows[k][i]
                if cell == 0:
                    continue
                room = inst.g[kt] - mass_at(kt)
                if room == 0:
                    break
                move = min(cell, room / (inst.d * inst.f[i]))
                rows[k][i] -= move
                rows[kt][i] += move
                progressed = True
            if mass_at(kt) == inst.g[kt]:
                break
        if mass_at(kt) == inst.g[kt]:
            kt -= 1
            continue
        if not progressed:
            # nothing below kt can donate; lower positions cannot help
            # any higher vacancy either, so the algorithm is done
            break
    return DirectMechanism(a=tuple(tuple(r) for r in rows))
